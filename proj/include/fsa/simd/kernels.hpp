#pragma once

#include <cstddef>
#include <string_view>

namespace fsa::simd {

// Table of hot-loop kernels over contiguous double arrays.
//
// Scalar and AVX2 implementations are bit-identical by construction: both
// perform the same IEEE operations in the same order (no fused multiply-add,
// reductions in a fixed 4-lane interleaved order, one shared exp algorithm).
// Inputs must not contain NaN unless a kernel documents otherwise.
struct Kernels {
    const char* name;

    // max over x[0..n); -inf for n == 0.
    double (*reduce_max)(const double* x, std::size_t n);

    // Sum in 4-lane interleaved accumulator order: lane j accumulates
    // x[4k + j], final value ((l0 + l1) + (l2 + l3)).  0 for n == 0.
    double (*reduce_sum)(const double* x, std::size_t n);

    // out[i] = exp(x[i] - shift).  exp(t) is 0 for t < -745.14, +inf for
    // t > 709.79, NaN propagates.
    void (*exp_shifted)(const double* x, double shift, double* out, std::size_t n);

    // out[i] = a*s[i] + b*(s[i]/(1+s[i]^2)) + drift + sigma*noise[i]
    void (*drift_transition)(const double* s, const double* noise, double* out, std::size_t n,
                             double a, double b, double drift, double sigma);

    // logw[i] = log_norm - (y - s[i]^2 * obs_scale)^2 * inv_two_var
    void (*quadratic_obs_logw)(const double* s, double* logw, std::size_t n, double y,
                               double obs_scale, double inv_two_var, double log_norm);

    // logw[i] = log_norm - (y - coeff * s[i])^2 * inv_two_var
    void (*linear_obs_logw)(const double* s, double* logw, std::size_t n, double y, double coeff,
                            double inv_two_var, double log_norm);
};

const Kernels& scalar_kernels();

// nullptr when AVX2 support is absent (at build time or on this CPU).
const Kernels* avx2_kernels();

// Currently selected table; defaults to the best available variant.
const Kernels& active();

// Select "auto", "scalar" or "avx2".  Returns false (and keeps the current
// selection) if the requested variant is unavailable.  Not thread-safe;
// call before spawning workers.
bool set_active(std::string_view name);

}  // namespace fsa::simd
