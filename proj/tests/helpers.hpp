#pragma once

#include <kamsort/association.hpp>
#include <kamsort/io.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace testutil {

inline std::string data_path(const std::string& name) { return std::string(KAMSORT_TEST_DATA) + "/" + name; }

inline kamsort::BBox random_box(std::mt19937_64& rng, double extent = 100.0) {
    std::uniform_real_distribution<double> pos(0.0, extent);
    std::uniform_real_distribution<double> size(1.0, extent / 4.0);
    return {pos(rng), pos(rng), size(rng), size(rng)};
}

// Exhaustive minimum over all injections of the smaller side into the larger.
inline double brute_force_min_cost(const kamsort::Matrix& c) {
    const bool flip = c.rows() > c.cols();
    const std::size_t n = flip ? c.cols() : c.rows();
    const std::size_t m = flip ? c.rows() : c.cols();
    auto at = [&](std::size_t i, std::size_t j) { return flip ? c(j, i) : c(i, j); };
    if (n == 0) return 0.0;
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += at(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Brute-force rasterised IoU on a fine grid, for geometry cross-checks on integer boxes.
inline double grid_iou(const kamsort::BBox& a, const kamsort::BBox& b, double step = 0.25) {
    const double x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
    const double x1 = std::max(a.x + a.w, b.x + b.w), y1 = std::max(a.y + a.h, b.y + b.h);
    long inter = 0, uni = 0;
    auto inside = [](const kamsort::BBox& q, double x, double y) {
        return x >= q.x && x < q.x + q.w && y >= q.y && y < q.y + q.h;
    };
    for (double y = y0 + step / 2; y < y1; y += step) {
        for (double x = x0 + step / 2; x < x1; x += step) {
            const bool ia = inside(a, x, y), ib = inside(b, x, y);
            inter += ia && ib;
            uni += ia || ib;
        }
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

inline kamsort::io::MotRow row(int frame, int id, double x, double y, double w = 10, double h = 10) {
    return {frame, id, {x, y, w, h}, 1.0};
}

}  // namespace testutil
