#if defined(FSA_HAVE_AVX2) && defined(__AVX2__)

#include <immintrin.h>

#include <cstddef>
#include <limits>

#include "fsa/simd/elementwise.hpp"
#include "fsa/simd/kernels.hpp"

namespace fsa::simd {

namespace {

using detail::kExpOverflow;
using detail::kExpUnderflow;

// Vector replay of detail::exp_elem.  Same constants, same operation order,
// no fused multiply-add, so each lane matches the scalar result bit for bit.
inline __m256d exp_vec(__m256d x) {
    const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    const __m256d over_mask = _mm256_cmp_pd(x, _mm256_set1_pd(kExpOverflow), _CMP_GT_OQ);
    const __m256d under_mask = _mm256_cmp_pd(x, _mm256_set1_pd(kExpUnderflow), _CMP_LT_OQ);

    // Clamp only to keep the exponent conversion in int32 range; lanes outside
    // the representable band are overwritten by the masks below.
    __m256d xc = _mm256_max_pd(x, _mm256_set1_pd(-746.0));
    xc = _mm256_min_pd(xc, _mm256_set1_pd(710.0));

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    const __m256d nf =
        _mm256_round_pd(_mm256_mul_pd(xc, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_sub_pd(xc, _mm256_mul_pd(nf, c1));
    r = _mm256_sub_pd(r, _mm256_mul_pd(nf, c2));
    const __m256d rr = _mm256_mul_pd(r, r);

    __m256d px = _mm256_set1_pd(1.26177193074810590878e-4);
    px = _mm256_add_pd(_mm256_mul_pd(px, rr), _mm256_set1_pd(3.02994407707441961300e-2));
    px = _mm256_add_pd(_mm256_mul_pd(px, rr), _mm256_set1_pd(9.99999999999999999910e-1));
    px = _mm256_mul_pd(px, r);

    __m256d qx = _mm256_set1_pd(3.00198505138664455042e-6);
    qx = _mm256_add_pd(_mm256_mul_pd(qx, rr), _mm256_set1_pd(2.52448340349684104192e-3));
    qx = _mm256_add_pd(_mm256_mul_pd(qx, rr), _mm256_set1_pd(2.27265548208155028766e-1));
    qx = _mm256_add_pd(_mm256_mul_pd(qx, rr), _mm256_set1_pd(2.00000000000000000005e0));

    const __m256d frac = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    __m256d res = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(_mm256_set1_pd(2.0), frac));

    // Two exact power-of-two scalings, n split as in the scalar path.
    const __m128i n32 = _mm256_cvtpd_epi32(nf);
    const __m128i n1_32 = _mm_srai_epi32(n32, 1);
    const __m128i n2_32 = _mm_sub_epi32(n32, n1_32);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256d pow1 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n1_32), bias), 52));
    const __m256d pow2 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n2_32), bias), 52));
    res = _mm256_mul_pd(res, pow1);
    res = _mm256_mul_pd(res, pow2);

    res = _mm256_blendv_pd(res, _mm256_setzero_pd(), under_mask);
    res = _mm256_blendv_pd(res, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over_mask);
    res = _mm256_blendv_pd(res, x, nan_mask);
    return res;
}

double reduce_max_avx2(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    const std::size_t blocks = n / 4;
    if (blocks > 0) {
        __m256d vm = _mm256_loadu_pd(x);
        for (std::size_t k = 1; k < blocks; ++k) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + 4 * k));
        alignas(32) double lane[4];
        _mm256_store_pd(lane, vm);
        for (double v : lane)
            if (v > m) m = v;
    }
    for (std::size_t i = 4 * blocks; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

double reduce_sum_avx2(const double* x, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    const std::size_t blocks = n / 4;
    for (std::size_t k = 0; k < blocks; ++k) vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(x + 4 * k));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, vacc);
    for (std::size_t j = 0; j < n % 4; ++j) lane[j] += x[4 * blocks + j];
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void exp_shifted_avx2(const double* x, double shift, double* out, std::size_t n) {
    const __m256d vshift = _mm256_set1_pd(shift);
    const std::size_t blocks = n / 4;
    for (std::size_t k = 0; k < blocks; ++k) {
        const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(x + 4 * k), vshift);
        _mm256_storeu_pd(out + 4 * k, exp_vec(t));
    }
    for (std::size_t i = 4 * blocks; i < n; ++i) out[i] = detail::exp_elem(x[i] - shift);
}

void drift_transition_avx2(const double* s, const double* noise, double* out, std::size_t n,
                           double a, double b, double drift, double sigma) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vdrift = _mm256_set1_pd(drift);
    const __m256d vsigma = _mm256_set1_pd(sigma);
    const __m256d one = _mm256_set1_pd(1.0);
    const std::size_t blocks = n / 4;
    for (std::size_t k = 0; k < blocks; ++k) {
        const __m256d vs = _mm256_loadu_pd(s + 4 * k);
        const __m256d vn = _mm256_loadu_pd(noise + 4 * k);
        const __m256d lin = _mm256_mul_pd(va, vs);
        const __m256d den = _mm256_add_pd(one, _mm256_mul_pd(vs, vs));
        const __m256d sat = _mm256_mul_pd(vb, _mm256_div_pd(vs, den));
        const __m256d mean = _mm256_add_pd(_mm256_add_pd(lin, sat), vdrift);
        _mm256_storeu_pd(out + 4 * k, _mm256_add_pd(mean, _mm256_mul_pd(vsigma, vn)));
    }
    for (std::size_t i = 4 * blocks; i < n; ++i)
        out[i] = detail::drift_transition_elem(s[i], noise[i], a, b, drift, sigma);
}

void quadratic_obs_logw_avx2(const double* s, double* logw, std::size_t n, double y,
                             double obs_scale, double inv_two_var, double log_norm) {
    const __m256d vy = _mm256_set1_pd(y);
    const __m256d vscale = _mm256_set1_pd(obs_scale);
    const __m256d vitv = _mm256_set1_pd(inv_two_var);
    const __m256d vnorm = _mm256_set1_pd(log_norm);
    const std::size_t blocks = n / 4;
    for (std::size_t k = 0; k < blocks; ++k) {
        const __m256d vs = _mm256_loadu_pd(s + 4 * k);
        const __m256d pred = _mm256_mul_pd(_mm256_mul_pd(vs, vs), vscale);
        const __m256d resid = _mm256_sub_pd(vy, pred);
        const __m256d quad = _mm256_mul_pd(_mm256_mul_pd(resid, resid), vitv);
        _mm256_storeu_pd(logw + 4 * k, _mm256_sub_pd(vnorm, quad));
    }
    for (std::size_t i = 4 * blocks; i < n; ++i)
        logw[i] = detail::quadratic_obs_logw_elem(s[i], y, obs_scale, inv_two_var, log_norm);
}

void linear_obs_logw_avx2(const double* s, double* logw, std::size_t n, double y, double coeff,
                          double inv_two_var, double log_norm) {
    const __m256d vy = _mm256_set1_pd(y);
    const __m256d vc = _mm256_set1_pd(coeff);
    const __m256d vitv = _mm256_set1_pd(inv_two_var);
    const __m256d vnorm = _mm256_set1_pd(log_norm);
    const std::size_t blocks = n / 4;
    for (std::size_t k = 0; k < blocks; ++k) {
        const __m256d vs = _mm256_loadu_pd(s + 4 * k);
        const __m256d resid = _mm256_sub_pd(vy, _mm256_mul_pd(vc, vs));
        const __m256d quad = _mm256_mul_pd(_mm256_mul_pd(resid, resid), vitv);
        _mm256_storeu_pd(logw + 4 * k, _mm256_sub_pd(vnorm, quad));
    }
    for (std::size_t i = 4 * blocks; i < n; ++i)
        logw[i] = detail::linear_obs_logw_elem(s[i], y, coeff, inv_two_var, log_norm);
}

constexpr Kernels kAvx2 = {
    "avx2",
    reduce_max_avx2,
    reduce_sum_avx2,
    exp_shifted_avx2,
    drift_transition_avx2,
    quadratic_obs_logw_avx2,
    linear_obs_logw_avx2,
};

}  // namespace

const Kernels* avx2_kernels() {
    return __builtin_cpu_supports("avx2") ? &kAvx2 : nullptr;
}

}  // namespace fsa::simd

#endif  // FSA_HAVE_AVX2 && __AVX2__
