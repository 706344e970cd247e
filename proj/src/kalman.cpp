#include <kamsort/kalman.hpp>

#include <kamsort/error.hpp>

#include <algorithm>
#include <cmath>

namespace kamsort {

namespace {

using MeasVector = Eigen::Matrix<double, 4, 1>;
using MeasMatrix = Eigen::Matrix<double, 4, 4>;
using ObsMatrix = Eigen::Matrix<double, 4, 7>;

constexpr double kCenterWeight = 1.0 / 20.0;
constexpr double kAreaWeight = 0.05;
constexpr double kRatioStd = 0.05;
constexpr double kVelocityWeight = 1e-2;

// Base position std for (u, v, s, r) at the given area.
std::array<double, 4> position_std(double s) {
    const double center = kCenterWeight * std::sqrt(std::max(s, kMinPositive));
    return {center, center, kAreaWeight * std::max(s, kMinPositive), kRatioStd};
}

StateMatrix transition() {
    StateMatrix f = StateMatrix::Identity();
    f(kU, kDU) = 1.0;
    f(kV, kDV) = 1.0;
    f(kS, kDS) = 1.0;
    return f;
}

ObsMatrix observation() {
    ObsMatrix h = ObsMatrix::Zero();
    for (int i = 0; i < 4; ++i) {
        h(i, i) = 1.0;
    }
    return h;
}

StateMatrix process_cov(double s, const KalmanParams& p) {
    const auto pos = position_std(s);
    StateVector sd;
    sd << pos[0], pos[1], pos[2], pos[3], kVelocityWeight * pos[0], kVelocityWeight * pos[1],
        kVelocityWeight * pos[2];
    StateMatrix q = StateMatrix::Zero();
    for (int i = 0; i < 7; ++i) {
        const double v = sd[i] * p.process_noise[static_cast<std::size_t>(i)];
        q(i, i) = v * v;
    }
    return q;
}

MeasMatrix measurement_cov(double s, const KalmanParams& p) {
    const auto pos = position_std(s);
    MeasMatrix r = MeasMatrix::Zero();
    for (int i = 0; i < 4; ++i) {
        const double v = pos[static_cast<std::size_t>(i)] * p.measurement_noise[static_cast<std::size_t>(i)];
        r(i, i) = v * v;
    }
    return r;
}

MeasVector measure(const BBox& b) {
    const auto c = CenterState::from_bbox(b);
    return {c.cx, c.cy, c.s, c.r};
}

void clamp_mean(StateVector& m) {
    m[kS] = std::max(m[kS], kMinPositive);
    m[kR] = std::max(m[kR], kMinPositive);
}

void symmetrize(StateMatrix& c) { c = 0.5 * (c + c.transpose()).eval(); }

}  // namespace

void KalmanParams::validate() const {
    if (!(alpha >= 0.0)) {
        throw InputError("kalman: alpha must be >= 0");
    }
    if (!(c_min > 0.0 && c_min <= 1.0 && c_max >= 1.0)) {
        throw InputError("kalman: need 0 < c_min <= 1 <= c_max");
    }
    for (double v : process_noise) {
        if (!(v >= 0.0)) throw InputError("kalman: process noise scales must be >= 0");
    }
    for (double v : measurement_noise) {
        if (!(v >= 0.0)) throw InputError("kalman: measurement noise scales must be >= 0");
    }
}

KalmanTrackState initiate(const BBox& obs, const KalmanParams& params) {
    KalmanTrackState st;
    const MeasVector z = measure(obs);
    st.mean.head<4>() = z;
    const auto pos = position_std(z[2]);
    for (int i = 0; i < 4; ++i) {
        const double sd = pos[static_cast<std::size_t>(i)];
        st.cov(i, i) = sd * sd;
    }
    for (int i = 0; i < 3; ++i) {
        const double sd = params.initial_velocity_scale * pos[static_cast<std::size_t>(i)];
        st.cov(kDU + i, kDU + i) = sd * sd;
    }
    return st;
}

KalmanTrackState predict(const KalmanTrackState& state, const KalmanParams& params) {
    static const StateMatrix f = transition();
    KalmanTrackState out;
    out.mean = f * state.mean;
    clamp_mean(out.mean);
    out.cov = f * state.cov * f.transpose() + process_cov(state.mean[kS], params);
    symmetrize(out.cov);
    return out;
}

KalmanTrackState update(const KalmanTrackState& state, const BBox& obs, const KalmanParams& params) {
    static const ObsMatrix h = observation();
    const MeasVector z = measure(obs);
    const MeasMatrix r = measurement_cov(state.mean[kS], params);

    const MeasVector innovation = z - h * state.mean;
    const MeasMatrix s = h * state.cov * h.transpose() + r;
    const Eigen::LDLT<MeasMatrix> ldlt(s);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-300) {
        throw NumericalError("kalman update: innovation covariance is singular");
    }
    // K = P H^T S^-1, solved as S K^T = H P.
    const Eigen::Matrix<double, 7, 4> gain = ldlt.solve(h * state.cov).transpose();

    KalmanTrackState out;
    out.mean = state.mean + gain * innovation;
    clamp_mean(out.mean);
    // Joseph form keeps the posterior symmetric PSD under round-off.
    const StateMatrix ikh = StateMatrix::Identity() - gain * h;
    out.cov = ikh * state.cov * ikh.transpose() + gain * r * gain.transpose();
    symmetrize(out.cov);
    return out;
}

KalmanTrackState observation_centric_reupdate(std::span<const FrameBox> history,
                                              const FrameBox& gap_end,
                                              const KalmanTrackState& state,
                                              const KalmanParams& params) {
    if (history.empty()) {
        throw InputError("observation_centric_reupdate: empty observation history");
    }
    const FrameBox& last = history.back();
    const int steps = gap_end.frame - last.frame;
    if (steps < 1) {
        throw InputError("observation_centric_reupdate: gap end must follow the last observation");
    }
    const CenterState a = CenterState::from_bbox(last.box);
    const CenterState b = CenterState::from_bbox(gap_end.box);

    KalmanTrackState st = state;
    for (int k = 1; k <= steps; ++k) {
        BBox virtual_obs;
        if (k == steps) {
            virtual_obs = gap_end.box;
        } else {
            const double t = static_cast<double>(k) / steps;
            const CenterState c{a.cx + t * (b.cx - a.cx), a.cy + t * (b.cy - a.cy),
                                a.s + t * (b.s - a.s), a.r + t * (b.r - a.r)};
            virtual_obs = c.to_bbox();
        }
        st = update(predict(st, params), virtual_obs, params);
    }
    return st;
}

double revision_factor(const KalmanTrackState& state, const KalmanParams& params) {
    const double var = std::max(state.cov(kS, kS), 0.0);
    const double rel = std::sqrt(var) / std::max(state.mean[kS], kMinPositive);
    return std::clamp(1.0 + params.alpha * rel, params.c_min, params.c_max);
}

BBox revised_box(const KalmanTrackState& state, const KalmanParams& params) {
    return expand(state.box(), std::sqrt(revision_factor(state, params)));
}

}  // namespace kamsort
