#include <kamsort/simulate.hpp>

#include <kamsort/error.hpp>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

namespace kamsort::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

// Per-track trajectory parameters drawn once from the seed.
struct TrackParams {
    double x0 = 0.0, y0 = 0.0;   // linear: start; circular: circle center (box center)
    double dx = 0.0, dy = 0.0;   // linear: per-frame step
    double radius = 0.0, phase = 0.0, omega = 0.0;
};

int meeting_frame(const ScenarioSpec& s) { return (s.frames + 1) / 2; }

std::vector<TrackParams> draw_tracks(const ScenarioSpec& s, Xoshiro256ss& rng) {
    std::vector<TrackParams> out(static_cast<std::size_t>(s.n_tracks));
    const double free_w = s.width - s.box_w;
    const double free_h = s.height - s.box_h;
    switch (s.motion) {
        case Motion::Linear: {
            const double travel = s.speed * (s.frames - 1);
            for (auto& t : out) {
                double heading = 0.0;
                bool found = false;
                for (int attempt = 0; attempt < 64 && !found; ++attempt) {
                    heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    found = std::abs(travel * std::cos(heading)) <= free_w &&
                            std::abs(travel * std::sin(heading)) <= free_h;
                }
                if (!found) {
                    const bool flip = rng.uniform() < 0.5;
                    heading = free_w >= free_h ? (flip ? std::numbers::pi : 0.0)
                                               : (flip ? 1.5 * std::numbers::pi : 0.5 * std::numbers::pi);
                }
                t.dx = s.speed * std::cos(heading);
                t.dy = s.speed * std::sin(heading);
                const double tx = t.dx * (s.frames - 1);
                const double ty = t.dy * (s.frames - 1);
                t.x0 = tx >= 0 ? rng.uniform(0.0, std::max(0.0, free_w - tx)) : rng.uniform(-tx, free_w);
                t.y0 = ty >= 0 ? rng.uniform(0.0, std::max(0.0, free_h - ty)) : rng.uniform(-ty, free_h);
            }
            break;
        }
        case Motion::Crossing:
        case Motion::Rebound:
            break;  // fully determined by the scenario
        case Motion::Circular: {
            const double r_max = 0.45 * std::min(free_w, free_h);
            for (auto& t : out) {
                t.radius = rng.uniform(0.5, 1.0) * r_max;
                t.x0 = rng.uniform(t.radius + 0.5 * s.box_w, s.width - t.radius - 0.5 * s.box_w);
                t.y0 = rng.uniform(t.radius + 0.5 * s.box_h, s.height - t.radius - 0.5 * s.box_h);
                t.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                t.omega = (rng.uniform() < 0.5 ? -1.0 : 1.0) * s.speed / t.radius;
            }
            break;
        }
    }
    return out;
}

BBox box_at(const ScenarioSpec& s, const std::vector<TrackParams>& params, int track, int frame) {
    const auto& p = params[static_cast<std::size_t>(track)];
    const double t = frame - 1;
    switch (s.motion) {
        case Motion::Linear:
            return {p.x0 + p.dx * t, p.y0 + p.dy * t, s.box_w, s.box_h};
        case Motion::Crossing:
        case Motion::Rebound: {
            const int lanes = (s.n_tracks + 1) / 2;
            const int lane = track / 2;
            const double lane_h = static_cast<double>(s.height) / lanes;
            const double y = (lane + 0.5) * lane_h - 0.5 * s.box_h;
            const double xc = 0.5 * (s.width - s.box_w);
            const double k = frame - meeting_frame(s);
            const double side = (track % 2 == 0) ? 1.0 : -1.0;
            // Even tracks come from the left. Crossing passes through, rebound turns back.
            const double offset = s.motion == Motion::Crossing ? side * s.speed * k : -side * s.speed * std::abs(k);
            return {xc + offset, y, s.box_w, s.box_h};
        }
        case Motion::Circular: {
            const double a = p.phase + p.omega * t;
            return {p.x0 + p.radius * std::cos(a) - 0.5 * s.box_w, p.y0 + p.radius * std::sin(a) - 0.5 * s.box_h,
                    s.box_w, s.box_h};
        }
    }
    return {};
}

// Identity prototypes: a * e0 + sqrt(1 - a^2) * u_i with u_i a centered simplex
// orthogonal to e0. Their mean is a * e0, so each has cosine a to the mean.
std::vector<std::vector<double>> prototypes(const ScenarioSpec& s) {
    const auto k = static_cast<std::size_t>(s.n_tracks);
    const auto d = static_cast<std::size_t>(s.embedding_dim);
    const double a = s.embedding_similarity;
    const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
    std::vector<std::vector<double>> out(k, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        out[i][0] = a;
        if (k == 1) {
            out[i][0] = 1.0;
            continue;
        }
        const double scale = std::sqrt(static_cast<double>(k) / static_cast<double>(k - 1));
        for (std::size_t q = 0; q < k; ++q) {
            const double u = ((q == i) ? 1.0 : 0.0) - 1.0 / static_cast<double>(k);
            out[i][q + 1] = b * scale * u;
        }
    }
    return out;
}

std::vector<double> jitter(const std::vector<double>& base, double sigma, Xoshiro256ss& rng) {
    std::vector<double> v = base;
    if (sigma > 0.0) {
        for (auto& x : v) x += sigma * rng.normal();
    }
    return v;
}

const char* motion_name(Motion m) {
    switch (m) {
        case Motion::Linear: return "linear";
        case Motion::Crossing: return "crossing";
        case Motion::Rebound: return "rebound";
        case Motion::Circular: return "circular";
    }
    return "linear";
}

}  // namespace

Xoshiro256ss::Xoshiro256ss(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
}

std::uint64_t Xoshiro256ss::next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256ss::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Xoshiro256ss::normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void ScenarioSpec::validate() const {
    auto fail = [](const std::string& what) { throw InputError("scenario: " + what); };
    if (n_tracks < 1 || frames < 1 || width < 1 || height < 1) fail("counts and frame size must be positive");
    if (!(speed >= 0.0)) fail("speed must be >= 0");
    if (!(box_w > 0.0 && box_h > 0.0) || box_w > width || box_h > height) fail("box must fit inside the frame");
    if (!(det_noise_std >= 0.0) || !(fp_rate >= 0.0) || !(embedding_noise >= 0.0)) fail("noise rates must be >= 0");
    if (!(embedding_similarity >= 0.0 && embedding_similarity <= 1.0)) fail("embedding_similarity must lie in [0, 1]");
    if (embedding_dim < n_tracks + 1) fail("embedding_dim must be at least n_tracks + 1");
    for (const auto& g : gaps) {
        if (g.track < -1 || g.track >= n_tracks) fail("gap track index out of range");
        if (g.length < 0 || g.start < 1 || (g.length > 0 && g.start + g.length - 1 > frames)) {
            fail("gap window must lie within [1, frames]");
        }
    }
    const double free_w = width - box_w;
    const double free_h = height - box_h;
    switch (motion) {
        case Motion::Linear:
            if (speed * (frames - 1) > std::max(free_w, free_h)) fail("tracks cannot stay in frame at this speed");
            break;
        case Motion::Crossing:
        case Motion::Rebound: {
            if (n_tracks % 2 != 0) fail("crossing scenarios need an even number of tracks");
            const int m = (frames + 1) / 2;
            if (speed * std::max(m - 1, frames - m) > 0.5 * free_w) fail("tracks cannot stay in frame at this speed");
            if (box_h > static_cast<double>(height) / (n_tracks / 2)) fail("lanes are narrower than the box");
            break;
        }
        case Motion::Circular:
            if (0.45 * std::min(free_w, free_h) <= 0.0) fail("no room for circular motion");
            break;
    }
}

bool in_gap(const ScenarioSpec& spec, int track, int frame) noexcept {
    for (const auto& g : spec.gaps) {
        if ((g.track == -1 || g.track == track) && frame >= g.start && frame < g.start + g.length) return true;
    }
    return false;
}

BBox track_box(const ScenarioSpec& spec, int track, int frame) {
    Xoshiro256ss rng(spec.seed);
    return box_at(spec, draw_tracks(spec, rng), track, frame);
}

Scenario generate(const ScenarioSpec& spec) {
    spec.validate();
    Xoshiro256ss rng(spec.seed);
    const auto params = draw_tracks(spec, rng);
    const auto protos = prototypes(spec);
    const double spread = std::sqrt(std::max(0.0, 1.0 - spec.embedding_similarity * spec.embedding_similarity));
    const double emb_sigma = spec.embedding_noise * spread / std::sqrt(static_cast<double>(spec.embedding_dim));

    Scenario sc;
    double sim_sum = 0.0;
    int sim_frames = 0;
    for (int f = 1; f <= spec.frames; ++f) {
        struct Pending {
            BBox box;
            double conf;
            std::vector<double> emb;
            bool clutter;
        };
        std::vector<Pending> frame_dets;
        for (int i = 0; i < spec.n_tracks; ++i) {
            const BBox b = box_at(spec, params, i, f);
            sc.gt.push_back({f, i + 1, b, 1.0});
            sc.gt_embeddings.push_back({f, i, protos[static_cast<std::size_t>(i)]});
            if (in_gap(spec, i, f)) continue;
            BBox d = b;
            if (spec.det_noise_std > 0.0) {
                d.x += spec.det_noise_std * rng.normal();
                d.y += spec.det_noise_std * rng.normal();
            }
            frame_dets.push_back({d, 1.0, jitter(protos[static_cast<std::size_t>(i)], emb_sigma, rng), false});
        }
        const double whole = std::floor(spec.fp_rate);
        int clutter = static_cast<int>(whole) + (rng.uniform() < spec.fp_rate - whole ? 1 : 0);
        for (int c = 0; c < clutter; ++c) {
            BBox b{rng.uniform(0.0, spec.width - spec.box_w), rng.uniform(0.0, spec.height - spec.box_h), spec.box_w,
                   spec.box_h};
            std::vector<double> e(static_cast<std::size_t>(spec.embedding_dim));
            for (auto& v : e) v = rng.normal();
            frame_dets.push_back({b, rng.uniform(0.5, 1.0), std::move(e), true});
        }
        // Fisher-Yates so detection order carries no identity information.
        for (std::size_t k = frame_dets.size(); k > 1; --k) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k));
            std::swap(frame_dets[k - 1], frame_dets[std::min(j, k - 1)]);
        }

        std::vector<Embedding> true_embs;
        for (std::size_t k = 0; k < frame_dets.size(); ++k) {
            auto& p = frame_dets[k];
            Embedding e(p.emb);
            if (!p.clutter) true_embs.push_back(e);
            sc.det_table.push_back({f, -1, p.box, p.conf});
            sc.embeddings.push_back({f, static_cast<int>(k), std::vector<double>(e.values().begin(), e.values().end())});
            sc.detections.push_back({f, p.box, p.conf, std::move(e)});
        }
        if (clutter == 0 && static_cast<int>(true_embs.size()) == spec.n_tracks && spec.n_tracks > 1) {
            sim_sum += homogeneity(true_embs).mu_det;
            ++sim_frames;
        }
    }
    sc.achieved_similarity = sim_frames > 0 ? sim_sum / sim_frames : spec.embedding_similarity;
    if (std::abs(sc.achieved_similarity - spec.embedding_similarity) > 0.05) {
        throw InputError("scenario: achieved embedding similarity " + std::to_string(sc.achieved_similarity) +
                         " misses the target by more than 0.05");
    }
    return sc;
}

ScenarioSpec parse_spec(const std::string& json_text, const std::string& source) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FormatError(source, 0, std::string("invalid JSON: ") + e.what());
    }
    ScenarioSpec s;
    try {
        s.seed = j.at("seed").get<std::uint64_t>();
        s.n_tracks = j.at("n_tracks").get<int>();
        s.frames = j.at("frames").get<int>();
        const auto size = j.at("frame_size").get<std::vector<int>>();
        if (size.size() != 2) throw FormatError(source, 0, "frame_size must be [width, height]");
        s.width = size[0];
        s.height = size[1];
        const auto motion = j.at("motion").get<std::string>();
        if (motion == "linear") s.motion = Motion::Linear;
        else if (motion == "crossing") s.motion = Motion::Crossing;
        else if (motion == "rebound") s.motion = Motion::Rebound;
        else if (motion == "circular") s.motion = Motion::Circular;
        else throw FormatError(source, 0, "unknown motion '" + motion + "'");
        s.speed = j.at("speed").get<double>();
        if (j.contains("box_size")) {
            const auto box = j.at("box_size").get<std::vector<double>>();
            if (box.size() != 2) throw FormatError(source, 0, "box_size must be [width, height]");
            s.box_w = box[0];
            s.box_h = box[1];
        }
        if (j.contains("gap")) {
            const auto& g = j.at("gap");
            s.gaps.push_back({-1, g.at("start").get<int>(), g.at("length").get<int>()});
        }
        if (j.contains("gaps")) {
            for (const auto& g : j.at("gaps")) {
                s.gaps.push_back({g.value("track", -1), g.at("start").get<int>(), g.at("length").get<int>()});
            }
        }
        s.det_noise_std = j.value("det_noise_std", 0.0);
        s.fp_rate = j.value("fp_rate", 0.0);
        s.embedding_similarity = j.value("embedding_similarity", 0.5);
        s.embedding_dim = j.value("embedding_dim", 16);
        s.embedding_noise = j.value("embedding_noise", 0.05);
    } catch (const json::exception& e) {
        throw FormatError(source, 0, std::string("scenario spec: ") + e.what());
    }
    s.validate();
    return s;
}

ScenarioSpec read_spec(const std::string& path) { return parse_spec(io::read_file(path), path); }

std::string format_spec(const ScenarioSpec& s) {
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    j["n_tracks"] = s.n_tracks;
    j["frames"] = s.frames;
    j["frame_size"] = {s.width, s.height};
    j["motion"] = motion_name(s.motion);
    j["speed"] = s.speed;
    j["box_size"] = {s.box_w, s.box_h};
    j["gaps"] = nlohmann::ordered_json::array();
    for (const auto& g : s.gaps) {
        j["gaps"].push_back({{"track", g.track}, {"start", g.start}, {"length", g.length}});
    }
    j["det_noise_std"] = s.det_noise_std;
    j["fp_rate"] = s.fp_rate;
    j["embedding_similarity"] = s.embedding_similarity;
    j["embedding_dim"] = s.embedding_dim;
    j["embedding_noise"] = s.embedding_noise;
    return j.dump(2) + "\n";
}

void write_scenario(const Scenario& sc, const ScenarioSpec& spec, const std::string& dir, int precision) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw InputError("cannot create directory '" + dir + "'");
    }
    const std::filesystem::path root(dir);
    io::write_mot(sc.gt, (root / "gt.txt").string(), precision);
    io::write_mot(sc.det_table, (root / "det.txt").string(), precision);
    io::write_embeddings(sc.embeddings, (root / "emb.csv").string());
    io::write_embeddings(sc.gt_embeddings, (root / "gt_emb.csv").string());
    io::write_file((root / "scenario.json").string(), format_spec(spec));
}

}  // namespace kamsort::sim
