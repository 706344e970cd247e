#include <kamsort/geometry.hpp>
#include <kamsort/metrics.hpp>

#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <set>

using namespace kamsort;
using testutil::row;
using io::MotTable;

namespace {

// Straightforward HOTA with exhaustive per-frame matching, as an oracle for
// small scenes.
struct RefHota {
    std::vector<double> hota, deta, assa;
};

RefHota reference_hota(const MotTable& gt, const MotTable& pred) {
    std::map<int, std::vector<const io::MotRow*>> g, p;
    std::map<int, double> gcount, pcount;
    for (const auto& r : gt) {
        g[r.frame].push_back(&r);
        gcount[r.id] += 1;
    }
    for (const auto& r : pred) {
        p[r.frame].push_back(&r);
        pcount[r.id] += 1;
    }
    std::map<std::pair<int, int>, double> potential;
    std::set<int> frames;
    for (auto& [f, v] : g) frames.insert(f);
    for (auto& [f, v] : p) frames.insert(f);
    for (int f : frames) {
        const auto& gs = g[f];
        const auto& ps = p[f];
        for (auto* a : gs) {
            for (auto* b : ps) {
                double rs = 0, cs = 0;
                for (auto* b2 : ps) rs += iou(a->box, b2->box);
                for (auto* a2 : gs) cs += iou(a2->box, b->box);
                const double s = iou(a->box, b->box);
                if (rs + cs - s > 1e-12) potential[{a->id, b->id}] += s / (rs + cs - s);
            }
        }
    }
    auto align = [&](int gi, int pi) {
        const double pot = potential.count({gi, pi}) ? potential[{gi, pi}] : 0.0;
        return pot / (gcount[gi] + pcount[pi] - pot);
    };
    RefHota out;
    for (int k = 1; k <= 19; ++k) {
        const double alpha = k * 5 / 100.0;
        long tp = 0, fn = 0, fp = 0;
        std::map<std::pair<int, int>, double> matches;
        for (int f : frames) {
            const auto& gs = g[f];
            const auto& ps = p[f];
            // enumerate injections of the smaller side
            const bool flip = gs.size() > ps.size();
            const std::size_t n = flip ? ps.size() : gs.size(), m = flip ? gs.size() : ps.size();
            std::vector<std::size_t> perm(m);
            std::iota(perm.begin(), perm.end(), 0);
            double best = -1.0;
            std::vector<std::pair<std::size_t, std::size_t>> best_pairs;
            do {
                double score = 0;
                std::vector<std::pair<std::size_t, std::size_t>> pairs;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t gi = flip ? perm[i] : i, pi = flip ? i : perm[i];
                    score += align(gs[gi]->id, ps[pi]->id) * iou(gs[gi]->box, ps[pi]->box);
                    pairs.emplace_back(gi, pi);
                }
                if (score > best + 1e-12) {
                    best = score;
                    best_pairs = pairs;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            long matched = 0;
            for (auto [gi, pi] : best_pairs) {
                if (iou(gs[gi]->box, ps[pi]->box) >= alpha - 1e-12) {
                    ++matched;
                    matches[{gs[gi]->id, ps[pi]->id}] += 1;
                }
            }
            tp += matched;
            fn += static_cast<long>(gs.size()) - matched;
            fp += static_cast<long>(ps.size()) - matched;
        }
        double ass = 0;
        for (auto& [key, c] : matches) ass += c * c / (gcount[key.first] + pcount[key.second] - c);
        const double assa = ass / std::max(1L, tp);
        const double deta = static_cast<double>(tp) / std::max(1L, tp + fn + fp);
        out.assa.push_back(assa);
        out.deta.push_back(deta);
        out.hota.push_back(std::sqrt(assa * deta));
    }
    return out;
}

MotTable random_scene(std::mt19937_64& rng, int frames, int ids, double jitter) {
    MotTable t;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int id = 1; id <= ids; ++id) {
        const double x0 = 60 * u(rng), y0 = 60 * u(rng), vx = 4 * u(rng) - 2, vy = 4 * u(rng) - 2;
        for (int f = 1; f <= frames; ++f) {
            if (u(rng) < 0.15) continue;
            t.push_back(row(f, id, x0 + vx * f + jitter * (u(rng) - 0.5), y0 + vy * f + jitter * (u(rng) - 0.5)));
        }
    }
    return t;
}

MotTable relabel(MotTable t, int offset) {
    for (auto& r : t) r.id = (r.id * 7 + offset) % 1000;
    return t;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("perfect predictions") {
    std::mt19937_64 rng(1);
    const auto gt = random_scene(rng, 12, 4, 0.0);
    const auto r = metrics::evaluate(gt, gt);
    CHECK(r.hota == 1.0);
    CHECK(r.deta == 1.0);
    CHECK(r.assa == 1.0);
    CHECK(r.mota == 1.0);
    CHECK(r.idf1 == 1.0);
    CHECK(r.idsw == 0);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
}

TEST_CASE("one miss and one false positive over ten boxes") {
    MotTable gt, pred;
    for (int f = 1; f <= 5; ++f) {
        gt.push_back(row(f, 1, 0, 0));
        gt.push_back(row(f, 2, 50, 0));
        if (f != 3) pred.push_back(row(f, 11, 0, 0));
        pred.push_back(row(f, 12, 50, 0));
    }
    pred.push_back(row(4, 13, 200, 200));
    const auto c = metrics::eval_clear(gt, pred);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.idsw == 0);
    CHECK(c.mota == 0.8);
}

TEST_CASE("an id switch costs one") {
    MotTable gt, pred;
    for (int f = 1; f <= 10; ++f) {
        gt.push_back(row(f, 1, f, 0));
        pred.push_back(row(f, f <= 5 ? 7 : 8, f, 0));
    }
    const auto c = metrics::eval_clear(gt, pred);
    CHECK(c.idsw == 1);
    CHECK(c.mota == doctest::Approx(0.9).epsilon(1e-15));
    const auto id = metrics::eval_identity(gt, pred);
    CHECK(id.idtp == 5);
    CHECK(id.idfn == 5);
    CHECK(id.idfp == 5);
    CHECK(id.idf1 == 0.5);
}

TEST_CASE("switching back to an earlier id counts again") {
    MotTable gt, pred;
    for (int f = 1; f <= 9; ++f) {
        gt.push_back(row(f, 1, 0, 0));
        pred.push_back(row(f, (f - 1) / 3 % 2 == 0 ? 1 : 2, 0, 0));  // 1 1 1 2 2 2 1 1 1
    }
    CHECK(metrics::eval_clear(gt, pred).idsw == 2);
}

TEST_CASE("empty inputs") {
    MotTable gt{row(1, 1, 0, 0)};
    const auto r = metrics::evaluate(gt, {});
    CHECK(r.idf1 == 0.0);
    CHECK(r.mota == 0.0);
    CHECK(r.hota == 0.0);
    CHECK_THROWS_AS(metrics::evaluate({}, gt), metrics::EmptyGroundTruth);
    CHECK_THROWS_AS(metrics::eval_clear({}, {}), metrics::EmptyGroundTruth);
}

TEST_CASE("duplicate frame and id are rejected") {
    MotTable gt{row(1, 1, 0, 0), row(1, 1, 5, 5)};
    CHECK_THROWS_AS(metrics::evaluate(gt, gt), InputError);
}

TEST_CASE("HOTA agrees with an exhaustive reference") {
    std::mt19937_64 rng(4);
    for (int scene = 0; scene < 25; ++scene) {
        const auto gt = random_scene(rng, 6, 3, 0.0);
        auto pred = random_scene(rng, 6, 2, 0.0);
        // perturb a copy of gt and mix in unrelated tracks
        for (const auto& r : gt) {
            auto q = r;
            q.id += 10 + (r.frame > 3 ? 1 : 0);
            q.box.x += 3.0 * std::uniform_real_distribution<double>(-1, 1)(rng);
            pred.push_back(q);
        }
        const auto h = metrics::eval_hota(gt, pred);
        const auto ref = reference_hota(gt, pred);
        for (std::size_t a = 0; a < 19; ++a) {
            CHECK(h.per_alpha[a].deta == doctest::Approx(ref.deta[a]).epsilon(1e-12));
            CHECK(h.per_alpha[a].assa == doctest::Approx(ref.assa[a]).epsilon(1e-12));
        }
    }
}

TEST_CASE("per-alpha HOTA is the geometric mean of DetA and AssA") {
    std::mt19937_64 rng(6);
    for (int scene = 0; scene < 20; ++scene) {
        const auto gt = random_scene(rng, 15, 4, 0.0);
        const auto pred = relabel(random_scene(rng, 15, 4, 3.0), scene);
        const auto h = metrics::eval_hota(gt, pred);
        double mean = 0.0;
        for (const auto& s : h.per_alpha) {
            CHECK(std::abs(s.hota - std::sqrt(s.deta * s.assa)) < 1e-9);
            mean += s.hota;
        }
        CHECK(h.hota == doctest::Approx(mean / 19.0).epsilon(1e-12));
    }
}

TEST_CASE("scores do not depend on id labels") {
    std::mt19937_64 rng(7);
    const auto gt = random_scene(rng, 20, 5, 0.0);
    auto pred = gt;
    for (auto& r : pred) {
        r.box.x += std::uniform_real_distribution<double>(-2, 2)(rng);
        if (r.frame > 10 && r.id == 2) r.id = 30;  // splits a track
    }
    const auto a = metrics::evaluate(gt, pred);
    const auto b = metrics::evaluate(relabel(gt, 3), relabel(pred, 11));
    CHECK(a.hota == doctest::Approx(b.hota).epsilon(1e-12));
    CHECK(a.mota == b.mota);
    CHECK(a.idf1 == b.idf1);
    CHECK(a.idsw == b.idsw);
}

TEST_CASE("combining sequences") {
    std::mt19937_64 rng(8);
    const auto gt = random_scene(rng, 10, 3, 0.0);
    const auto pred = random_scene(rng, 10, 3, 0.0);
    const auto r = metrics::evaluate(gt, pred);
    const std::vector<metrics::EvalReport> two{r, r};
    const auto c = metrics::combine(two);
    CHECK(c.tp == 2 * r.tp);
    CHECK(c.idsw == 2 * r.idsw);
    CHECK(c.hota == doctest::Approx(r.hota).epsilon(1e-12));
    CHECK(c.mota == doctest::Approx(r.mota).epsilon(1e-12));
    CHECK(c.idf1 == doctest::Approx(r.idf1).epsilon(1e-12));
    CHECK_THROWS(metrics::combine({}));
}

TEST_CASE("report json has the documented keys") {
    const MotTable gt{row(1, 1, 0, 0)};
    const auto j = nlohmann::json::parse(metrics::report_json(metrics::evaluate(gt, gt)));
    for (const char* k : {"hota", "deta", "assa", "mota", "idf1", "tp", "fp", "fn", "idsw", "per_alpha"}) {
        CHECK(j.contains(k));
    }
    CHECK(j.size() == 10);
    CHECK(j["per_alpha"].size() == 19);
    CHECK(j["mota"].get<double>() == 1.0);
}

TEST_CASE("dataset statistics examples") {
    MotTable gt;
    int id = 1;
    for (int f = 1; f <= 3; ++f) {
        for (int k = 0; k < f + 1; ++k) gt.push_back(row(f, id + k, 30.0 * k, 0));
    }
    auto s = metrics::dataset_stats(gt, {}, {200, 100});
    CHECK(s.obj.mean == 3.0);
    CHECK(s.obj.std == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(s.occ.mean == 0.0);
    CHECK(s.den.mean == 1.0);
    CHECK_FALSE(s.app.has_value());

    MotTable still;
    for (int f = 1; f <= 5; ++f) still.push_back(row(f, 1, 10, 10));
    s = metrics::dataset_stats(still, {}, {100, 100}, 10);
    CHECK(s.mot.mean == 100.0);
    CHECK(s.mot.std == 0.0);
    CHECK(s.obj.mean == 0.5);  // frames 6..10 are empty

    MotTable overlap{row(1, 1, 0, 0), row(1, 2, 5, 5), row(2, 1, 0, 0), row(2, 2, 10, 0)};
    s = metrics::dataset_stats(overlap, {}, {100, 100});
    CHECK(s.den.mean == 1.5);  // 2 then 1 (edge contact shares no pixel)
    CHECK(s.occ.mean == doctest::Approx(100.0 * 25.0 / 175.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("density rasterises on pixel centers and clips to the frame") {
    MotTable t{row(1, 1, 0.6, 0, 1.0, 1.0), row(1, 2, 0, 0, 1.0, 1.0)};
    // [0.6, 1.6) holds pixel center 1.5, [0, 1) holds 0.5: no shared pixel
    CHECK(metrics::dataset_stats(t, {}, {4, 4}).den.mean == 1.0);
    MotTable big{row(1, 1, -50, -50, 500, 500), row(1, 2, 2, 2, 1, 1), row(1, 3, 2, 2, 1, 1)};
    CHECK(metrics::dataset_stats(big, {}, {4, 4}).den.mean == 3.0);
    MotTable outside{row(1, 1, 100, 100, 5, 5)};
    CHECK(metrics::dataset_stats(outside, {}, {4, 4}).den.mean == 0.0);
}

TEST_CASE("appearance statistic") {
    MotTable gt{row(1, 1, 0, 0), row(1, 2, 50, 0), row(2, 1, 0, 0), row(2, 2, 50, 0)};
    std::vector<std::optional<Embedding>> e{Embedding({1.0, 0.0}), Embedding({0.0, 1.0}), Embedding({1.0, 0.0}),
                                            Embedding({1.0, 1.0})};
    const auto s = metrics::dataset_stats(gt, e, {100, 100});
    REQUIRE(s.app.has_value());
    CHECK(s.app->mean == doctest::Approx(100.0 * std::sqrt(0.5) / 2.0).epsilon(1e-12));
    CHECK(s.app->count == 2);
    std::vector<std::optional<Embedding>> short_list{Embedding({1.0})};
    CHECK_THROWS_AS(metrics::dataset_stats(gt, short_list, {100, 100}), InputError);
}

}
