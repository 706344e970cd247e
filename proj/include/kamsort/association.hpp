#pragma once

#include <kamsort/geometry.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace kamsort {

/// Dense row-major N x M matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Marker cost for gated-out pairs.
inline constexpr double kForbidden = 1e6;

/// Unit-normalised appearance vector. Construction renormalises its input.
class Embedding {
public:
    Embedding() = default;
    /// Throws InputError for empty or zero-norm input.
    explicit Embedding(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

private:
    std::vector<double> values_;
};

double cosine_similarity(const Embedding& a, const Embedding& b) noexcept;

struct Homogeneity {
    double mu_det = 1.0;
    /// Mean embedding had (near) zero norm; mu_det forced to 0.
    bool degenerate = false;
};

/// Mean cosine similarity of each embedding to the plain (unnormalised) mean.
Homogeneity homogeneity(std::span<const Embedding> dets);

struct AdaptiveWeights {
    double w_a = 0.0;
    double w_m = 2.0;
    double mu_det = 1.0;
};

/// w_a = (1 - mu_det) / (1 - cos theta), w_m = 2 - w_a. theta in radians, (0, pi/2).
AdaptiveWeights adaptive_weights(double mu_det, double theta_rad);

/// |angle| between the prev2->prev1 and prev1->det center directions, over pi.
/// Zero when either direction is undefined.
double velocity_cost(const CenterState& prev2, const CenterState& prev1, const CenterState& det) noexcept;

/// 1 - cosine similarity, in [0, 2].
double appearance_cost(const Embedding& track, const Embedding& det) noexcept;

/// Pairwise IoU, rows = a, cols = b. Uses the dispatched SIMD kernel.
Matrix iou_matrix(std::span<const BBox> a, std::span<const BBox> b);

/// Everything the cost builder needs to know about one track.
struct TrackCue {
    BBox predicted;
    /// Last two real observations, oldest first; absent when fewer than two.
    std::optional<std::pair<CenterState, CenterState>> last_two;
    const Embedding* embedding = nullptr;
};

struct DetectionCue {
    BBox box;
    const Embedding* embedding = nullptr;
};

struct CostTerms {
    bool velocity = true;
    bool appearance = true;
    /// When set, stage one uses 1 * motion + gamma * appearance instead of the adaptive weights.
    std::optional<double> fixed_gamma;
};

/// Pairs with IoU below this and centers farther than kGateDiagonals predicted-box
/// diagonals apart are forbidden.
inline constexpr double kGateIou = 1e-9;
inline constexpr double kGateDiagonals = 3.0;

/**
 * Stage-one cost:
 *   w_m * (1 - IoU) + lambda * C_v + w_a * C_a
 * All three terms are costs (lower is better). Pairs with a missing embedding on
 * either side get C_a = 1, the value of an uninformative (orthogonal) pair.
 */
Matrix build_cost_matrix(std::span<const TrackCue> tracks, std::span<const DetectionCue> dets,
                         const AdaptiveWeights& weights, double lambda, const CostTerms& terms);

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> matches;  // (row, col), sorted by row
    std::vector<std::size_t> unmatched_rows;
    std::vector<std::size_t> unmatched_cols;
};

/// Minimum-total-cost rectangular assignment (shortest augmenting path).
/// Returns, for each row, the assigned column or -1. Ties resolve by row scan order.
std::vector<long> hungarian(const Matrix& costs);

/// Solve and demote any matched pair with cost >= forbid_threshold.
Assignment solve_assignment(const Matrix& costs, double forbid_threshold = kForbidden);

}  // namespace kamsort
