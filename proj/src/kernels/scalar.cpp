#include <kamsort/kernels.hpp>

#include <algorithm>

namespace kamsort::kernels::scalar {

void iou_row(double bx, double by, double bw, double bh, const BoxColumns& cols,
             std::span<double> out) noexcept {
    const double bx2 = bx + bw;
    const double by2 = by + bh;
    const double barea = bw * bh;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const double ix1 = std::max(bx, cols.x[j]);
        const double iy1 = std::max(by, cols.y[j]);
        const double ix2 = std::min(bx2, cols.x[j] + cols.w[j]);
        const double iy2 = std::min(by2, cols.y[j] + cols.h[j]);
        const double iw = std::max(0.0, ix2 - ix1);
        const double ih = std::max(0.0, iy2 - iy1);
        const double inter = iw * ih;
        const double uni = barea + cols.w[j] * cols.h[j] - inter;
        out[j] = uni > 0.0 ? inter / uni : 0.0;
    }
}

void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) noexcept {
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double* row = rows.data() + i * dim;
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            acc += row[k] * query[k];
        }
        out[i] = acc;
    }
}

void increment(std::span<std::int32_t> data) noexcept {
    for (auto& v : data) {
        ++v;
    }
}

std::int32_t max_value(std::span<const std::int32_t> data) noexcept {
    std::int32_t best = 0;
    for (auto v : data) {
        best = std::max(best, v);
    }
    return best;
}

}  // namespace kamsort::kernels::scalar
