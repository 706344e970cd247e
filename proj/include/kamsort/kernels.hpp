#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// SIMD variants picked at runtime. The scalar path is the definition; SIMD
// paths are tested against it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace kamsort::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b) noexcept;

/// Best backend the running CPU and this build support.
Backend detected_backend() noexcept;

/// Backend currently used by the dispatching entry points below.
Backend active_backend() noexcept;

/// Force a backend (tests, `--simd` flag). Requests the CPU cannot honour
/// fall back to Scalar; the backend actually installed is returned.
Backend set_backend(Backend b) noexcept;

/// Structure-of-arrays view over boxes (x, y, w, h), all spans equal length.
struct BoxColumns {
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> w;
    std::span<const double> h;
    std::size_t size() const noexcept { return x.size(); }
};

/// out[j] = iou(box, cols[j]). Bitwise identical across backends.
void iou_row(double bx, double by, double bw, double bh, const BoxColumns& cols,
             std::span<double> out) noexcept;

/// out[i] = dot(rows[i*dim .. i*dim+dim), query). Backends differ only by
/// summation order.
void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) noexcept;

/// data[i] += 1 for every i.
void increment(std::span<std::int32_t> data) noexcept;

/// Maximum element; 0 for an empty span.
std::int32_t max_value(std::span<const std::int32_t> data) noexcept;

// Per-backend entry points, exposed for equivalence tests.
namespace scalar {
void iou_row(double bx, double by, double bw, double bh, const BoxColumns& cols,
             std::span<double> out) noexcept;
void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) noexcept;
void increment(std::span<std::int32_t> data) noexcept;
std::int32_t max_value(std::span<const std::int32_t> data) noexcept;
}  // namespace scalar

namespace avx2 {
bool available() noexcept;
void iou_row(double bx, double by, double bw, double bh, const BoxColumns& cols,
             std::span<double> out) noexcept;
void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) noexcept;
void increment(std::span<std::int32_t> data) noexcept;
std::int32_t max_value(std::span<const std::int32_t> data) noexcept;
}  // namespace avx2

}  // namespace kamsort::kernels
