#pragma once

#include <kamsort/io.hpp>
#include <kamsort/tracker.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace kamsort::sim {

/**
 * xoshiro256** seeded through splitmix64, as published by Blackman and Vigna.
 * Fixed here (instead of std:: engines and distributions) so that the same
 * seed yields the same draws on every platform and in other languages.
 */
class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed) noexcept;
    std::uint64_t next() noexcept;
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (cosine branch only).
    double normal() noexcept;

private:
    std::uint64_t s_[4];
};

enum class Motion {
    Linear,    // straight line at constant speed, random heading
    Crossing,  // pairs run head-on along a shared lane and pass through each other
    Rebound,   // pairs run head-on, meet, and bounce back the way they came
    Circular   // constant angular speed on a random circle
};

struct Gap {
    int track = -1;  // -1: every track
    int start = 1;
    int length = 0;
};

struct ScenarioSpec {
    std::uint64_t seed = 0;
    int n_tracks = 2;
    int frames = 60;
    int width = 640;
    int height = 480;
    Motion motion = Motion::Linear;
    double speed = 5.0;  // px / frame
    double box_w = 40.0;
    double box_h = 40.0;
    std::vector<Gap> gaps;
    double det_noise_std = 0.0;
    double fp_rate = 0.0;  // clutter boxes per frame
    double embedding_similarity = 0.5;
    int embedding_dim = 16;
    /// Per-detection appearance jitter, relative to the prototype spread.
    double embedding_noise = 0.05;

    /// Throws InputError for invalid or geometrically infeasible specs.
    void validate() const;
};

ScenarioSpec parse_spec(const std::string& json_text, const std::string& source = "<memory>");
ScenarioSpec read_spec(const std::string& path);
std::string format_spec(const ScenarioSpec& spec);

struct Scenario {
    io::MotTable gt;
    /// Detections in file order, embeddings attached.
    std::vector<Detection> detections;
    io::MotTable det_table;
    std::vector<io::EmbeddingRow> embeddings;
    /// Identity prototypes aligned with `gt` rows (det_index = row within frame).
    std::vector<io::EmbeddingRow> gt_embeddings;
    /// Mean frame homogeneity over frames showing every track and no clutter;
    /// equals the target when no such frame exists.
    double achieved_similarity = 0.0;
};

/// Deterministic in the scenario. Throws InputError for infeasible scenarios.
Scenario generate(const ScenarioSpec& spec);

/// Closed-form top-left box of `track` at `frame` (no noise).
BBox track_box(const ScenarioSpec& spec, int track, int frame);

bool in_gap(const ScenarioSpec& spec, int track, int frame) noexcept;

/// Writes gt.txt, det.txt, emb.csv, gt_emb.csv and scenario.json into `dir` (created if needed).
void write_scenario(const Scenario& sc, const ScenarioSpec& spec, const std::string& dir,
                    int precision = io::kDefaultPrecision);

}  // namespace kamsort::sim
