// Compiled with -mavx2. Nothing here may run unless avx2::available().

#include <kamsort/kernels.hpp>

#include <immintrin.h>

#include <algorithm>

namespace kamsort::kernels::avx2 {

bool available() noexcept { return __builtin_cpu_supports("avx2"); }

void iou_row(double bx, double by, double bw, double bh, const BoxColumns& cols,
             std::span<double> out) noexcept {
    const std::size_t n = cols.size();
    const double bx2 = bx + bw;
    const double by2 = by + bh;
    const double barea = bw * bh;

    const __m256d vbx = _mm256_set1_pd(bx);
    const __m256d vby = _mm256_set1_pd(by);
    const __m256d vbx2 = _mm256_set1_pd(bx2);
    const __m256d vby2 = _mm256_set1_pd(by2);
    const __m256d varea = _mm256_set1_pd(barea);
    const __m256d zero = _mm256_setzero_pd();

    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d x = _mm256_loadu_pd(cols.x.data() + j);
        const __m256d y = _mm256_loadu_pd(cols.y.data() + j);
        const __m256d w = _mm256_loadu_pd(cols.w.data() + j);
        const __m256d h = _mm256_loadu_pd(cols.h.data() + j);
        // std::max(a, b) is (a < b) ? b : a and _mm256_max_pd(p, q) is (p > q) ? p : q,
        // so operands are swapped to select the same lane on ties and signed zeros.
        const __m256d ix1 = _mm256_max_pd(x, vbx);
        const __m256d iy1 = _mm256_max_pd(y, vby);
        const __m256d ix2 = _mm256_min_pd(_mm256_add_pd(x, w), vbx2);
        const __m256d iy2 = _mm256_min_pd(_mm256_add_pd(y, h), vby2);
        const __m256d iw = _mm256_max_pd(_mm256_sub_pd(ix2, ix1), zero);
        const __m256d ih = _mm256_max_pd(_mm256_sub_pd(iy2, iy1), zero);
        const __m256d inter = _mm256_mul_pd(iw, ih);
        const __m256d uni = _mm256_sub_pd(_mm256_add_pd(varea, _mm256_mul_pd(w, h)), inter);
        const __m256d valid = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out.data() + j, _mm256_and_pd(valid, _mm256_div_pd(inter, uni)));
    }
    if (j < n) {
        BoxColumns tail{cols.x.subspan(j), cols.y.subspan(j), cols.w.subspan(j), cols.h.subspan(j)};
        scalar::iou_row(bx, by, bw, bh, tail, out.subspan(j));
    }
}

void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) noexcept {
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double* row = rows.data() + i * dim;
        __m256d acc = _mm256_setzero_pd();
        std::size_t k = 0;
        for (; k + 4 <= dim; k += 4) {
            acc = _mm256_add_pd(
                acc, _mm256_mul_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(query.data() + k)));
        }
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, acc);
        double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
        for (; k < dim; ++k) {
            sum += row[k] * query[k];
        }
        out[i] = sum;
    }
}

void increment(std::span<std::int32_t> data) noexcept {
    const __m256i one = _mm256_set1_epi32(1);
    std::size_t i = 0;
    const std::size_t n = data.size();
    for (; i + 8 <= n; i += 8) {
        auto* p = reinterpret_cast<__m256i*>(data.data() + i);
        _mm256_storeu_si256(p, _mm256_add_epi32(_mm256_loadu_si256(p), one));
    }
    for (; i < n; ++i) {
        ++data[i];
    }
}

std::int32_t max_value(std::span<const std::int32_t> data) noexcept {
    __m256i best = _mm256_setzero_si256();
    std::size_t i = 0;
    const std::size_t n = data.size();
    for (; i + 8 <= n; i += 8) {
        best = _mm256_max_epi32(
            best, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data.data() + i)));
    }
    alignas(32) std::int32_t lanes[8];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), best);
    std::int32_t result = *std::max_element(lanes, lanes + 8);
    for (; i < n; ++i) {
        result = std::max(result, data[i]);
    }
    return result;
}

}  // namespace kamsort::kernels::avx2
