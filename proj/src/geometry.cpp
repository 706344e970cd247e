#include <kamsort/geometry.hpp>

#include <kamsort/error.hpp>

#include <algorithm>
#include <cmath>

namespace kamsort {

CenterState CenterState::from_bbox(const BBox& b) noexcept {
    return {b.x + 0.5 * b.w, b.y + 0.5 * b.h, b.w * b.h, b.w / b.h};
}

BBox CenterState::to_bbox() const noexcept {
    const double w = std::sqrt(s * r);
    const double h = s / w;
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
}

// Operation order here is mirrored exactly by the kernels' iou_row.
double iou(const BBox& a, const BBox& b) noexcept {
    const double ix1 = std::max(a.x, b.x);
    const double iy1 = std::max(a.y, b.y);
    const double ix2 = std::min(a.x + a.w, b.x + b.w);
    const double iy2 = std::min(a.y + a.h, b.y + b.h);
    const double iw = std::max(0.0, ix2 - ix1);
    const double ih = std::max(0.0, iy2 - iy1);
    const double inter = iw * ih;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

BBox expand(const BBox& b, double factor) {
    if (!(factor > 0.0)) {
        throw InputError("expand: factor must be positive");
    }
    const double cx = b.x + 0.5 * b.w;
    const double cy = b.y + 0.5 * b.h;
    const double w = b.w * factor;
    const double h = b.h * factor;
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
}

std::optional<Vec2> center_direction(const CenterState& p, const CenterState& q) noexcept {
    const double dx = q.cx - p.cx;
    const double dy = q.cy - p.cy;
    const double norm = std::hypot(dx, dy);
    if (norm < kStationaryEps) {
        return std::nullopt;
    }
    return Vec2{dx / norm, dy / norm};
}

double center_distance(const BBox& a, const BBox& b) noexcept {
    return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

double diagonal(const BBox& b) noexcept { return std::hypot(b.w, b.h); }

}  // namespace kamsort
