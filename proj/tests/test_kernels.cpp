#include <kamsort/geometry.hpp>
#include <kamsort/kernels.hpp>

#include <doctest.h>

#include "helpers.hpp"

#include <cstring>

using namespace kamsort;

namespace {

struct Columns {
    std::vector<double> x, y, w, h;
    kernels::BoxColumns view() const { return {x, y, w, h}; }
};

Columns random_columns(std::mt19937_64& rng, std::size_t n) {
    Columns c;
    std::uniform_int_distribution<int> pick(0, 9);
    for (std::size_t i = 0; i < n; ++i) {
        BBox b = testutil::random_box(rng, 50.0);
        if (pick(rng) == 0) b.w = 0.0;           // degenerate
        if (pick(rng) == 1) b = {10, 10, 5, 5};  // exact ties with the query
        c.x.push_back(b.x);
        c.y.push_back(b.y);
        c.w.push_back(b.w);
        c.h.push_back(b.h);
    }
    return c;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar iou_row agrees with geometry::iou") {
    std::mt19937_64 rng(1);
    const auto cols = random_columns(rng, 37);
    const BBox q{10, 10, 5, 5};
    std::vector<double> out(cols.x.size());
    kernels::scalar::iou_row(q.x, q.y, q.w, q.h, cols.view(), out);
    for (std::size_t j = 0; j < out.size(); ++j) {
        CHECK(out[j] == iou(q, {cols.x[j], cols.y[j], cols.w[j], cols.h[j]}));
    }
}

TEST_CASE("avx2 kernels match the scalar reference") {
    if (!kernels::avx2::available()) {
        MESSAGE("AVX2 not available; equivalence not exercised");
        return;
    }
    std::mt19937_64 rng(2);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 17u, 64u, 101u}) {
        const auto cols = random_columns(rng, n);
        for (int rep = 0; rep < 20; ++rep) {
            const BBox q = rep == 0 ? BBox{10, 10, 5, 5} : testutil::random_box(rng, 50.0);
            std::vector<double> a(n), b(n);
            kernels::scalar::iou_row(q.x, q.y, q.w, q.h, cols.view(), a);
            kernels::avx2::iou_row(q.x, q.y, q.w, q.h, cols.view(), b);
            CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);
        }
    }
    for (std::size_t dim : {1u, 3u, 4u, 7u, 16u, 33u}) {
        const std::size_t rows = 9;
        std::normal_distribution<double> g;
        std::vector<double> m(rows * dim), q(dim);
        for (auto& v : m) v = g(rng);
        for (auto& v : q) v = g(rng);
        std::vector<double> a(rows), b(rows);
        kernels::scalar::dot_rows(m, dim, q, a);
        kernels::avx2::dot_rows(m, dim, q, b);
        for (std::size_t i = 0; i < rows; ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
    }
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 100u}) {
        std::vector<std::int32_t> a(n), b(n);
        std::uniform_int_distribution<int> v(-5, 50);
        for (std::size_t i = 0; i < n; ++i) a[i] = b[i] = v(rng);
        kernels::scalar::increment(a);
        kernels::avx2::increment(b);
        CHECK(a == b);
        CHECK(kernels::scalar::max_value(a) == kernels::avx2::max_value(b));
    }
}

TEST_CASE("backend selection") {
    const auto original = kernels::active_backend();
    CHECK(kernels::set_backend(kernels::Backend::Scalar) == kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    const auto got = kernels::set_backend(kernels::Backend::Avx2);
    CHECK(got == (kernels::avx2::available() ? kernels::Backend::Avx2 : kernels::Backend::Scalar));
    kernels::set_backend(original);
    CHECK(kernels::backend_name(kernels::Backend::Scalar) == "scalar");
}

TEST_CASE("max_value of empty span is zero") { CHECK(kernels::max_value({}) == 0); }

}
