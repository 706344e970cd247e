#include <kamsort/kernels.hpp>

#include <atomic>

namespace kamsort::kernels {

#ifndef KAMSORT_BUILD_AVX2
// Stubs so the symbols exist on builds without the AVX2 translation unit.
namespace avx2 {
bool available() noexcept { return false; }
void iou_row(double bx, double by, double bw, double bh, const BoxColumns& cols,
             std::span<double> out) noexcept {
    scalar::iou_row(bx, by, bw, bh, cols, out);
}
void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) noexcept {
    scalar::dot_rows(rows, dim, query, out);
}
void increment(std::span<std::int32_t> data) noexcept { scalar::increment(data); }
std::int32_t max_value(std::span<const std::int32_t> data) noexcept {
    return scalar::max_value(data);
}
}  // namespace avx2
#endif

namespace {

struct Table {
    decltype(&scalar::iou_row) iou_row;
    decltype(&scalar::dot_rows) dot_rows;
    decltype(&scalar::increment) increment;
    decltype(&scalar::max_value) max_value;
};

constexpr Table kScalar{&scalar::iou_row, &scalar::dot_rows, &scalar::increment,
                        &scalar::max_value};
constexpr Table kAvx2{&avx2::iou_row, &avx2::dot_rows, &avx2::increment, &avx2::max_value};

std::atomic<const Table*>& table() {
    static std::atomic<const Table*> t{avx2::available() ? &kAvx2 : &kScalar};
    return t;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

Backend detected_backend() noexcept {
    return avx2::available() ? Backend::Avx2 : Backend::Scalar;
}

Backend active_backend() noexcept {
    return table().load() == &kAvx2 ? Backend::Avx2 : Backend::Scalar;
}

Backend set_backend(Backend b) noexcept {
    const Table* t = (b == Backend::Avx2 && avx2::available()) ? &kAvx2 : &kScalar;
    table().store(t);
    return t == &kAvx2 ? Backend::Avx2 : Backend::Scalar;
}

void iou_row(double bx, double by, double bw, double bh, const BoxColumns& cols,
             std::span<double> out) noexcept {
    table().load()->iou_row(bx, by, bw, bh, cols, out);
}

void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) noexcept {
    table().load()->dot_rows(rows, dim, query, out);
}

void increment(std::span<std::int32_t> data) noexcept { table().load()->increment(data); }

std::int32_t max_value(std::span<const std::int32_t> data) noexcept {
    return table().load()->max_value(data);
}

}  // namespace kamsort::kernels
