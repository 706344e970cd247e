#pragma once

#include <kamsort/geometry.hpp>

#include <Eigen/Dense>

#include <array>
#include <span>
#include <utility>

namespace kamsort {

using StateVector = Eigen::Matrix<double, 7, 1>;
using StateMatrix = Eigen::Matrix<double, 7, 7>;

/// Indices into the 7-dim constant-velocity state [u, v, s, r, u', v', s'].
enum StateIndex : int { kU = 0, kV, kS, kR, kDU, kDV, kDS };

/**
 * Noise model and Kalman++ revision parameters.
 *
 * Noise standard deviations follow the SORT family and scale with the box:
 *   measurement: u, v -> sqrt(s) / 20, s -> 0.05 s, r -> 0.05
 *   process:     positions as the measurement, velocities 1e-2 of the position
 * Each entry of `process_noise` / `measurement_noise` multiplies the matching
 * base standard deviation, so all-ones is the default model and zeros switch a
 * component off.
 */
struct KalmanParams {
    std::array<double, 7> process_noise{1, 1, 1, 1, 1, 1, 1};
    std::array<double, 4> measurement_noise{1, 1, 1, 1};
    /// Initial velocity std as a multiple of the position std.
    double initial_velocity_scale = 10.0;

    double alpha = 1.0;
    double c_min = 1.0;
    double c_max = 1.5;

    /// Throws InputError unless alpha >= 0 and 0 < c_min <= 1 <= c_max.
    void validate() const;
};

struct KalmanTrackState {
    StateVector mean = StateVector::Zero();
    StateMatrix cov = StateMatrix::Zero();

    CenterState center() const noexcept { return {mean[kU], mean[kV], mean[kS], mean[kR]}; }
    BBox box() const noexcept { return center().to_bbox(); }
};

/// Smallest area / aspect ratio the filter mean may hold.
inline constexpr double kMinPositive = 1e-6;

KalmanTrackState initiate(const BBox& obs, const KalmanParams& params);

KalmanTrackState predict(const KalmanTrackState& state, const KalmanParams& params);

/// Throws NumericalError when the innovation covariance is singular.
KalmanTrackState update(const KalmanTrackState& state, const BBox& obs, const KalmanParams& params);

struct FrameBox {
    int frame = 0;
    BBox box;
};

/**
 * Observation-centric re-update over an occlusion gap.
 *
 * `state` is the posterior at the last real observation in `history`. Virtual
 * observations are linearly interpolated in (cx, cy, s, r) between that
 * observation and `gap_end`, and predict+update is replayed for every frame up
 * to and including gap_end.frame. With no missing frames this is one
 * predict+update against gap_end.
 */
KalmanTrackState observation_centric_reupdate(std::span<const FrameBox> history,
                                              const FrameBox& gap_end,
                                              const KalmanTrackState& state,
                                              const KalmanParams& params);

/// Area factor clamp(1 + alpha * sqrt(cov[s,s]) / s, c_min, c_max).
double revision_factor(const KalmanTrackState& state, const KalmanParams& params);

/// Predicted box with its area scaled by revision_factor (sides by its square root).
BBox revised_box(const KalmanTrackState& state, const KalmanParams& params);

}  // namespace kamsort
