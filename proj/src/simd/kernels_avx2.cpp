// Compiled with -mavx2 -mfma; only called after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "mechdetect/simd/kernels.hpp"

namespace mechdetect::simd::avx2 {
namespace {

// exp(x) for x clamped to [-708, 709]: x = n ln2 + r with |r| <= ln2/2, then
// a degree-13 Taylor polynomial in r (truncation < 1e-17 relative) scaled by
// 2^n through the exponent bits.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d hi = _mm256_set1_pd(709.0);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    static constexpr double inv_fact[] = {
        1.0 / 6227020800.0, // 1/13!
        1.0 / 479001600.0,  1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0,
        1.0 / 40320.0,      1.0 / 5040.0,     1.0 / 720.0,     1.0 / 120.0,
        1.0 / 24.0,         1.0 / 6.0,        0.5,             1.0,
        1.0,
    };
    __m256d p = _mm256_set1_pd(inv_fact[0]);
    for (std::size_t k = 1; k < std::size(inv_fact); ++k)
        p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_fact[k]));

    const __m128i n32 = _mm256_cvtpd_epi32(n);
    __m256i bits = _mm256_add_epi64(_mm256_cvtepi32_epi64(n32), _mm256_set1_epi64x(1023));
    bits = _mm256_slli_epi64(bits, 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

// log1p(t) for t in [0, 1]. Written as 2 atanh(s): s = t / (2 + t) below
// sqrt(2) - 1, otherwise ln2 + 2 atanh((t - 1) / (t + 3)). |s| <= 0.1716 in
// both branches, so ten odd terms of the atanh series suffice.
inline __m256d log1p_unit_pd(__m256d t) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d three = _mm256_set1_pd(3.0);
    const __m256d split = _mm256_set1_pd(0.41421356237309504880);

    const __m256d use_high = _mm256_cmp_pd(t, split, _CMP_GT_OQ);
    const __m256d s_low = _mm256_div_pd(t, _mm256_add_pd(two, t));
    const __m256d s_high = _mm256_div_pd(_mm256_sub_pd(t, one), _mm256_add_pd(t, three));
    const __m256d s = _mm256_blendv_pd(s_low, s_high, use_high);
    const __m256d s2 = _mm256_mul_pd(s, s);

    __m256d q = _mm256_set1_pd(1.0 / 19.0);
    for (int k = 17; k >= 1; k -= 2)
        q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / k));
    const __m256d atanh2 = _mm256_mul_pd(_mm256_add_pd(s, s), q);
    const __m256d offset =
        _mm256_and_pd(use_high, _mm256_set1_pd(0.69314718055994530942));
    return _mm256_add_pd(atanh2, offset);
}

inline __m256d load_labels(const std::uint8_t* p) {
    std::int32_t packed;
    std::memcpy(&packed, p, sizeof packed);
    return _mm256_cvtepi32_pd(_mm_cvtepu8_epi32(_mm_cvtsi32_si128(packed)));
}

} // namespace

void logistic_gradients(std::span<const double> raw, std::span<const std::uint8_t> labels,
                        std::span<double> grad, std::span<double> hess) {
    const std::size_t n = raw.size();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d z = _mm256_loadu_pd(raw.data() + i);
        const __m256d e = exp_pd(_mm256_xor_pd(z, sign));
        const __m256d p = _mm256_div_pd(one, _mm256_add_pd(one, e));
        const __m256d y = load_labels(labels.data() + i);
        _mm256_storeu_pd(grad.data() + i, _mm256_sub_pd(p, y));
        _mm256_storeu_pd(hess.data() + i, _mm256_mul_pd(p, _mm256_sub_pd(one, p)));
    }
    if (i < n)
        scalar::logistic_gradients(raw.subspan(i), labels.subspan(i), grad.subspan(i), hess.subspan(i));
}

double logistic_loss(std::span<const double> raw, std::span<const std::uint8_t> labels) {
    const std::size_t n = raw.size();
    const __m256d zero = _mm256_setzero_pd();
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc = zero;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d z = _mm256_loadu_pd(raw.data() + i);
        const __m256d neg_abs = _mm256_xor_pd(_mm256_and_pd(z, abs_mask), sign);
        const __m256d softplus = _mm256_add_pd(_mm256_max_pd(z, zero), log1p_unit_pd(exp_pd(neg_abs)));
        const __m256d y = load_labels(labels.data() + i);
        acc = _mm256_add_pd(acc, _mm256_fnmadd_pd(y, z, softplus));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    if (i < n) total += scalar::logistic_loss(raw.subspan(i), labels.subspan(i));
    return total;
}

void build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<HistogramBin> hist) {
    const std::size_t n = rows.size();
    alignas(32) double g[4];
    alignas(32) double h[4];
    std::size_t i = 0;
    // Gathers four rows' gradient/hessian pairs at once; the scatter into the
    // histogram stays sequential so sums accumulate in row order.
    for (; i + 4 <= n; i += 4) {
        const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(rows.data() + i));
        _mm256_store_pd(g, _mm256_i32gather_pd(grad.data(), idx, 8));
        _mm256_store_pd(h, _mm256_i32gather_pd(hess.data(), idx, 8));
        for (int k = 0; k < 4; ++k) {
            HistogramBin& b = hist[bins[rows[i + k]]];
            b.sum_gradients += g[k];
            b.sum_hessians += h[k];
            ++b.count;
        }
    }
    if (i < n) scalar::build_histogram(bins, rows.subspan(i), grad, hess, hist);
}

} // namespace mechdetect::simd::avx2
