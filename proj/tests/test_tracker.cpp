#include <kamsort/error.hpp>
#include <kamsort/metrics.hpp>
#include <kamsort/simulate.hpp>
#include <kamsort/tracker.hpp>

#include <doctest.h>

#include "helpers.hpp"

#include <map>
#include <set>

using namespace kamsort;

namespace {

sim::ScenarioSpec single_linear() {
    sim::ScenarioSpec s;
    s.seed = 3;
    s.n_tracks = 1;
    s.frames = 100;
    s.width = 1280;
    s.height = 720;
    s.speed = 4.0;
    s.embedding_dim = 4;
    return s;
}

io::MotTable track(const std::vector<Detection>& dets, const TrackerConfig& cfg) {
    return io::from_track_rows(run_sequence(dets, cfg).rows);
}

}  // namespace

TEST_SUITE("tracker") {

TEST_CASE("modes") {
    CHECK(parse_mode("kamsort_no_kpp") == TrackerMode::KamSortNoKpp);
    CHECK(mode_name(TrackerMode::OcSort) == "ocsort");
    CHECK_THROWS_AS(parse_mode("bytetrack"), InputError);
    CHECK_FALSE(features(TrackerMode::Sort).appearance);
    CHECK_FALSE(features(TrackerMode::Sort).kalman_pp);
    CHECK(features(TrackerMode::KamSort).kalman_pp);
    CHECK_FALSE(features(TrackerMode::KamSortNoKpp).kalman_pp);
    CHECK_FALSE(features(TrackerMode::KamSortFixedWeights).adaptive);
}

TEST_CASE("config validation") {
    TrackerConfig c;
    CHECK_NOTHROW(c.validate());
    c.theta_deg = 90.0;
    CHECK_THROWS_AS(Tracker{c}, InputError);
    c = {};
    c.min_hits = 0;
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("empty frames age tracks without emitting") {
    Tracker t{TrackerConfig{}};
    const std::vector<Detection> dets{{1, {0, 0, 10, 10}, 1.0, std::nullopt}, {1, {50, 50, 10, 10}, 1.0, std::nullopt}};
    const auto first = t.step(1, dets);
    CHECK(first.rows.size() == 2);
    const auto empty = t.step(2, {});
    CHECK(empty.rows.empty());
    REQUIRE(t.tracks().size() == 2);
    for (const auto& tr : t.tracks()) {
        CHECK(tr.age_since_update == 1);
        CHECK(tr.status == TrackStatus::Lost);
    }
}

TEST_CASE("frames must increase") {
    Tracker t{TrackerConfig{}};
    t.step(3, {});
    CHECK_THROWS_AS(t.step(3, {}), SequenceError);
    const std::vector<Detection> wrong{{7, {0, 0, 1, 1}, 1.0, std::nullopt}};
    CHECK_THROWS_AS(t.step(4, wrong), SequenceError);
}

TEST_CASE("low confidence detections are ignored") {
    Tracker t{TrackerConfig{}};
    const std::vector<Detection> dets{{1, {0, 0, 10, 10}, 0.39, std::nullopt}};
    CHECK(t.step(1, dets).rows.empty());
    CHECK(t.tracks().empty());
}

TEST_CASE("tentative tracks need min_hits after warm-up") {
    TrackerConfig c;
    c.min_hits = 3;
    Tracker t{c};
    for (int f = 1; f <= 4; ++f) t.step(f, {});
    std::vector<Detection> d{{5, {0, 0, 10, 10}, 1.0, std::nullopt}};
    CHECK(t.step(5, d).rows.empty());
    d[0].frame = 6;
    CHECK(t.step(6, d).rows.empty());
    d[0].frame = 7;
    const auto r = t.step(7, d);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].id == 1);
    // a tentative track that misses once is dropped
    std::vector<Detection> far{{8, {300, 300, 10, 10}, 1.0, std::nullopt}};
    t.step(8, far);
    t.step(9, {});
    CHECK(t.tracks().size() == 1);
}

TEST_CASE("one noiseless linear track keeps one id") {
    const auto spec = single_linear();
    const auto sc = sim::generate(spec);
    for (auto mode : {TrackerMode::Sort, TrackerMode::OcSort, TrackerMode::KamSort}) {
        TrackerConfig c;
        c.mode = mode;
        const auto res = run_sequence(sc.detections, c);
        std::set<int> ids;
        std::set<int> frames;
        for (const auto& r : res.rows) {
            ids.insert(r.id);
            frames.insert(r.frame);
        }
        CHECK(ids == std::set<int>{1});
        for (int f = c.min_hits; f <= spec.frames; ++f) CHECK(frames.count(f) == 1);
        const auto clear = metrics::eval_clear(sc.gt, io::from_track_rows(res.rows));
        CHECK(clear.idsw == 0);
        CHECK(res.tracks_created == 1);
    }
}

TEST_CASE("appearance keeps identities through a head-on meeting") {
    sim::ScenarioSpec s;
    s.seed = 21;
    s.n_tracks = 2;
    s.frames = 40;
    s.width = 640;
    s.height = 200;
    s.motion = sim::Motion::Rebound;
    s.speed = 5.0;
    s.box_h = 80;
    s.embedding_similarity = 0.1;  // below cos 80 deg
    s.embedding_dim = 8;
    const auto sc = sim::generate(s);
    TrackerConfig c;
    const auto app = metrics::eval_clear(sc.gt, track(sc.detections, c));
    c.force_motion_only = true;
    const auto motion = metrics::eval_clear(sc.gt, track(sc.detections, c));
    CHECK(app.idsw == 0);
    CHECK(motion.idsw >= 1);
}

TEST_CASE("second stage without revision equals plain IoU matching") {
    KalmanParams p;
    p.alpha = 0.0;
    p.c_min = p.c_max = 1.0;
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<KalmanTrackState> states;
        std::vector<BBox> boxes;
        for (int i = 0; i < 4; ++i) {
            auto st = initiate(testutil::random_box(rng, 60.0), p);
            states.push_back(predict(st, p));
        }
        for (int j = 0; j < 5; ++j) boxes.push_back(testutil::random_box(rng, 60.0));
        const auto revised = kalman_pp_second_stage(states, boxes, p, 0.2, true);
        const auto plain = kalman_pp_second_stage(states, boxes, p, 0.2, false);
        CHECK(revised == plain);
    }
}

TEST_CASE("revision rescues a pair just below the IoU threshold") {
    KalmanParams p;
    p.alpha = 1.0;
    p.c_max = 1.5;
    KalmanTrackState st;
    st.mean << 5, 5, 100, 1, 0, 0, 0;  // box (0, 0, 10, 10)
    st.cov = StateMatrix::Identity();
    st.cov(kS, kS) = 44.0 * 44.0;  // f = 1.44, sides x1.2 -> (-1, -1, 12, 12)
    const BBox revised = revised_box(st, p);
    CHECK(revised.x == doctest::Approx(-1.0));
    CHECK(revised.w == doctest::Approx(12.0));

    const std::vector<KalmanTrackState> tracks{st};
    for (double dx = 5.0; dx <= 8.0; dx += 0.2) {
        const BBox det{dx, 0, 10, 10};
        const double plain_iou = testutil::grid_iou(st.box(), det, 0.1);
        const double revised_iou = testutil::grid_iou(revised, det, 0.1);
        CHECK(iou(st.box(), det) == doctest::Approx(plain_iou).epsilon(1e-9));
        CHECK(iou(revised, det) == doctest::Approx(revised_iou).epsilon(1e-9));
        const std::vector<BBox> dets{det};
        const bool with_kpp = !kalman_pp_second_stage(tracks, dets, p, 0.2, true).empty();
        const bool without = !kalman_pp_second_stage(tracks, dets, p, 0.2, false).empty();
        CHECK(with_kpp == (iou(revised, det) >= 0.2));
        CHECK(without == (iou(st.box(), det) >= 0.2));
    }
    // dx = 6.8: unrevised IoU 32/168, revised 42/202
    const std::vector<BBox> edge{{6.8, 0, 10, 10}};
    CHECK(kalman_pp_second_stage(tracks, edge, p, 0.2, false).empty());
    CHECK(kalman_pp_second_stage(tracks, edge, p, 0.2, true).size() == 1);
    CHECK(kalman_pp_second_stage(tracks, {}, p, 0.2, true).empty());
}

TEST_CASE("runs are deterministic") {
    sim::ScenarioSpec s;
    s.seed = 5;
    s.n_tracks = 6;
    s.frames = 80;
    s.width = 800;
    s.height = 600;
    s.speed = 3.0;
    s.det_noise_std = 1.5;
    s.fp_rate = 0.5;
    s.embedding_dim = 12;
    s.gaps = {{2, 20, 6}};
    const auto sc = sim::generate(s);
    const TrackerConfig c;
    CHECK(io::format_mot(track(sc.detections, c)) == io::format_mot(track(sc.detections, c)));
}

TEST_CASE("one-to-one matching and identity conservation") {
    sim::ScenarioSpec s;
    s.seed = 12;
    s.n_tracks = 8;
    s.frames = 60;
    s.width = 500;
    s.height = 400;
    s.motion = sim::Motion::Circular;
    s.speed = 4.0;
    s.det_noise_std = 2.0;
    s.fp_rate = 1.5;
    s.embedding_similarity = 0.6;
    s.embedding_dim = 16;
    s.gaps = {{-1, 30, 3}, {1, 10, 8}};
    const auto sc = sim::generate(s);
    std::map<int, std::vector<Detection>> frames;
    for (const auto& d : sc.detections) frames[d.frame].push_back(d);
    Tracker t{TrackerConfig{}};
    std::set<int> removed;
    for (int f = 1; f <= s.frames; ++f) {
        std::set<int> before;
        for (const auto& tr : t.tracks()) before.insert(tr.id);
        const auto r = t.step(f, frames[f]);
        std::set<int> ids, dets;
        for (const auto& [id, det] : r.assignments) {
            CHECK(ids.insert(id).second);
            CHECK(dets.insert(static_cast<int>(det)).second);
        }
        std::set<int> emitted;
        for (const auto& row : r.rows) {
            CHECK(emitted.insert(row.id).second);
            CHECK(removed.count(row.id) == 0);
            CHECK(row.id <= t.tracks_created());
        }
        std::set<int> after;
        for (const auto& tr : t.tracks()) after.insert(tr.id);
        for (int id : before) {
            if (!after.count(id)) removed.insert(id);
        }
    }
}

TEST_CASE("ground truth as detections scores perfectly") {
    sim::ScenarioSpec s;
    s.seed = 9;
    s.n_tracks = 5;
    s.frames = 120;
    s.width = 1280;
    s.height = 720;
    s.speed = 3.0;
    s.embedding_similarity = 0.3;
    s.embedding_dim = 8;
    const auto sc = sim::generate(s);
    auto dets = io::to_detections(sc.gt);
    for (std::size_t k = 0; k < dets.size(); ++k) {
        const auto& v = sc.gt_embeddings[k].values;
        dets[k].embedding = Embedding(v);
    }
    const auto pred = track(dets, TrackerConfig{});
    CHECK(metrics::eval_idf1(sc.gt, pred) == 1.0);
}

TEST_CASE("partial embeddings fall back to motion for the frame") {
    Tracker t{TrackerConfig{}};
    const std::vector<Detection> dets{{1, {0, 0, 10, 10}, 1.0, Embedding({1.0, 0.0})},
                                      {1, {50, 0, 10, 10}, 1.0, std::nullopt}};
    t.step(1, dets);
    CHECK(t.appearance_fallback_frames() == 1);
}

}
