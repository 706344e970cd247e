#include <kamsort/association.hpp>

#include <kamsort/error.hpp>
#include <kamsort/kernels.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

namespace kamsort {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw InputError("embedding: empty vector");
    }
    const double norm = std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw InputError("embedding: zero or non-finite norm");
    }
    for (auto& v : values_) {
        v /= norm;
    }
}

double cosine_similarity(const Embedding& a, const Embedding& b) noexcept {
    double out = 0.0;
    kernels::dot_rows(a.values(), a.dim(), b.values(), {&out, 1});
    return out;
}

Homogeneity homogeneity(std::span<const Embedding> dets) {
    if (dets.empty()) {
        throw InputError("homogeneity: no embeddings");
    }
    const std::size_t dim = dets.front().dim();
    std::vector<double> rows;
    rows.reserve(dets.size() * dim);
    std::vector<double> mean(dim, 0.0);
    for (const auto& e : dets) {
        if (e.dim() != dim) {
            throw InputError("homogeneity: embedding dimension mismatch");
        }
        rows.insert(rows.end(), e.values().begin(), e.values().end());
        for (std::size_t k = 0; k < dim; ++k) {
            mean[k] += e.values()[k];
        }
    }
    for (auto& v : mean) {
        v /= static_cast<double>(dets.size());
    }
    const double mean_norm = std::sqrt(std::inner_product(mean.begin(), mean.end(), mean.begin(), 0.0));
    if (mean_norm < 1e-9) {
        return {0.0, true};
    }
    std::vector<double> dots(dets.size());
    kernels::dot_rows(rows, dim, mean, dots);
    // Each f_i is unit norm, so cos(f_i, mu) = <f_i, mu> / |mu|.
    const double sum = std::accumulate(dots.begin(), dots.end(), 0.0);
    return {sum / (static_cast<double>(dets.size()) * mean_norm), false};
}

AdaptiveWeights adaptive_weights(double mu_det, double theta_rad) {
    if (!(theta_rad > 0.0 && theta_rad < 0.5 * std::numbers::pi)) {
        throw InputError("adaptive_weights: theta must lie strictly between 0 and 90 degrees");
    }
    if (!(mu_det >= -1.0 - 1e-12 && mu_det <= 1.0 + 1e-12)) {
        throw InputError("adaptive_weights: mu_det outside [-1, 1]");
    }
    AdaptiveWeights w;
    w.mu_det = mu_det;
    w.w_a = (1.0 - mu_det) / (1.0 - std::cos(theta_rad));
    w.w_m = 2.0 - w.w_a;
    return w;
}

double velocity_cost(const CenterState& prev2, const CenterState& prev1, const CenterState& det) noexcept {
    const auto a = center_direction(prev2, prev1);
    const auto b = center_direction(prev1, det);
    if (!a || !b) {
        return 0.0;
    }
    const double cross = a->x * b->y - a->y * b->x;
    const double dot = a->x * b->x + a->y * b->y;
    return std::abs(std::atan2(cross, dot)) / std::numbers::pi;
}

double appearance_cost(const Embedding& track, const Embedding& det) noexcept {
    return 1.0 - cosine_similarity(track, det);
}

Matrix iou_matrix(std::span<const BBox> a, std::span<const BBox> b) {
    Matrix out(a.size(), b.size());
    if (out.empty()) {
        return out;
    }
    std::vector<double> x(b.size()), y(b.size()), w(b.size()), h(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
        x[j] = b[j].x;
        y[j] = b[j].y;
        w[j] = b[j].w;
        h[j] = b[j].h;
    }
    const kernels::BoxColumns cols{x, y, w, h};
    for (std::size_t i = 0; i < a.size(); ++i) {
        kernels::iou_row(a[i].x, a[i].y, a[i].w, a[i].h, cols, out.row(i));
    }
    return out;
}

Matrix build_cost_matrix(std::span<const TrackCue> tracks, std::span<const DetectionCue> dets,
                         const AdaptiveWeights& weights, double lambda, const CostTerms& terms) {
    std::vector<BBox> tboxes, dboxes;
    tboxes.reserve(tracks.size());
    dboxes.reserve(dets.size());
    for (const auto& t : tracks) tboxes.push_back(t.predicted);
    for (const auto& d : dets) dboxes.push_back(d.box);
    const Matrix ious = iou_matrix(tboxes, dboxes);

    const double w_m = terms.fixed_gamma ? 1.0 : weights.w_m;
    const double w_a = terms.fixed_gamma ? *terms.fixed_gamma : weights.w_a;
    const bool use_app = terms.appearance && w_a != 0.0;

    Matrix cost(tracks.size(), dets.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const auto& t = tracks[i];
        const double gate_dist = kGateDiagonals * diagonal(t.predicted);
        for (std::size_t j = 0; j < dets.size(); ++j) {
            const auto& d = dets[j];
            const double overlap = ious(i, j);
            if (overlap < kGateIou && center_distance(t.predicted, d.box) > gate_dist) {
                cost(i, j) = kForbidden;
                continue;
            }
            double c = w_m * (1.0 - overlap);
            if (terms.velocity && t.last_two) {
                c += lambda * velocity_cost(t.last_two->first, t.last_two->second,
                                            CenterState::from_bbox(d.box));
            }
            if (use_app) {
                double ca = 1.0;
                if (t.embedding && d.embedding) {
                    if (t.embedding->dim() != d.embedding->dim()) {
                        throw InputError("cost matrix: embedding dimension mismatch");
                    }
                    ca = appearance_cost(*t.embedding, *d.embedding);
                }
                c += w_a * ca;
            }
            cost(i, j) = c;
        }
    }
    return cost;
}

}  // namespace kamsort
