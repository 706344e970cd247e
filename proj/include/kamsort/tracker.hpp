#pragma once

#include <kamsort/association.hpp>
#include <kamsort/geometry.hpp>
#include <kamsort/kalman.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kamsort {

enum class TrackerMode {
    Sort,                // IoU only, single stage
    OcSort,              // + velocity consistency, re-update, plain IoU second stage
    KamSort,             // + adaptive appearance weighting, Kalman++ second stage
    KamSortNoKpp,        // KamSort with a plain IoU second stage
    KamSortFixedWeights  // KamSort with fixed gamma instead of adaptive weights
};

std::string_view mode_name(TrackerMode m) noexcept;
/// Accepts sort, ocsort, kamsort, kamsort_no_kpp, kamsort_fixed_weights.
TrackerMode parse_mode(std::string_view name);

struct ModeFeatures {
    bool velocity = false;
    bool appearance = false;
    bool adaptive = false;
    bool reupdate = false;
    bool second_stage = false;
    bool kalman_pp = false;
};

ModeFeatures features(TrackerMode m) noexcept;

struct TrackerConfig {
    TrackerMode mode = TrackerMode::KamSort;
    double theta_deg = 80.0;
    double lambda = 0.2;
    double gamma = 1.0;
    double iou_match_threshold = 0.3;
    double second_stage_iou_threshold = 0.2;
    int max_age = 30;
    int min_hits = 3;
    double det_conf_threshold = 0.4;
    double embedding_ema_beta = 0.9;
    /// Forces w_a = 0 in the adaptive modes (motion-only ablation).
    bool force_motion_only = false;
    /// alpha, c_min, c_max live here together with the noise model.
    KalmanParams kalman;

    /// Throws InputError on out-of-range settings.
    void validate() const;
};

struct Detection {
    int frame = 0;
    BBox box;
    double confidence = 1.0;
    std::optional<Embedding> embedding;
};

enum class TrackStatus { Tentative, Confirmed, Lost };

struct Track {
    int id = 0;
    KalmanTrackState state;
    /// Posterior at the latest real observation; the re-update starts here.
    KalmanTrackState last_update_state;
    std::vector<FrameBox> observations;
    std::optional<Embedding> embedding;
    double confidence = 1.0;  // of the latest matched detection
    int hits = 0;
    int age_since_update = 0;
    TrackStatus status = TrackStatus::Tentative;
};

/// One emitted output row.
struct TrackRow {
    int frame = 0;
    int id = 0;
    BBox box;
    double confidence = 1.0;
};

struct StepResult {
    /// (track id, index into the frame's detection list) over both stages.
    std::vector<std::pair<int, std::size_t>> assignments;
    /// Subset of `assignments` made by the second stage.
    std::size_t second_stage_matches = 0;
    std::vector<TrackRow> rows;
};

/// Per-sequence tracker. Sequential by nature; not safe for concurrent use.
class Tracker {
public:
    explicit Tracker(TrackerConfig config);

    /// Process one frame. All detections must carry `frame`, which must exceed
    /// the previous call's frame (SequenceError otherwise).
    StepResult step(int frame, std::span<const Detection> detections);

    const std::vector<Track>& tracks() const noexcept { return tracks_; }
    const TrackerConfig& config() const noexcept { return config_; }
    int tracks_created() const noexcept { return next_id_ - 1; }
    int appearance_fallback_frames() const noexcept { return appearance_fallback_frames_; }

private:
    void spawn(int frame, const Detection& det);

    TrackerConfig config_;
    ModeFeatures features_;
    double theta_rad_ = 0.0;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    int last_frame_ = 0;
    int frame_count_ = 0;
    int appearance_fallback_frames_ = 0;
};

/// Stage-two matching of stage-one leftovers on IoU between (optionally
/// Kalman++-revised) predicted boxes and detections. Returns (track index,
/// detection index) pairs into the given spans.
std::vector<std::pair<std::size_t, std::size_t>> kalman_pp_second_stage(
    std::span<const KalmanTrackState> unmatched_tracks, std::span<const BBox> unmatched_dets,
    const KalmanParams& params, double iou_threshold, bool revise);

struct SequenceResult {
    std::vector<TrackRow> rows;  // sorted by (frame, id)
    int frames = 0;
    int tracks_created = 0;
    int appearance_fallback_frames = 0;
};

/// Folds Tracker::step over frames 1 .. last detection frame (or `last_frame`
/// when larger). Detections may arrive in any order; they are grouped by frame
/// keeping their relative order.
SequenceResult run_sequence(std::span<const Detection> detections, const TrackerConfig& config,
                            int last_frame = 0);

}  // namespace kamsort
