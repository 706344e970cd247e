#pragma once

#include <optional>

namespace kamsort {

/// Axis-aligned box in pixels, top-left anchored (MOT convention).
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const noexcept { return w * h; }
    double cx() const noexcept { return x + 0.5 * w; }
    double cy() const noexcept { return y + 0.5 * h; }
    bool valid() const noexcept { return w > 0.0 && h > 0.0; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// SORT measurement parameterisation: center, area and aspect ratio w/h.
struct CenterState {
    double cx = 0.0;
    double cy = 0.0;
    double s = 0.0;
    double r = 0.0;

    static CenterState from_bbox(const BBox& b) noexcept;
    BBox to_bbox() const noexcept;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Intersection over union. Boxes touching only along an edge give 0.
double iou(const BBox& a, const BBox& b) noexcept;

/// Same center, width and height scaled by `factor`. Throws InputError for factor <= 0.
BBox expand(const BBox& b, double factor);

/// Displacements shorter than this have no direction.
inline constexpr double kStationaryEps = 1e-9;

/// Unit vector from p's center to q's center, or nullopt when they (nearly) coincide.
std::optional<Vec2> center_direction(const CenterState& p, const CenterState& q) noexcept;

double center_distance(const BBox& a, const BBox& b) noexcept;
double diagonal(const BBox& b) noexcept;

}  // namespace kamsort
