#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

// Elementwise reference operations shared by the scalar kernels, the AVX2
// loop tails, and the non-batched model code paths.  Every kernel variant
// must realize exactly these operation sequences so results stay
// bit-identical across variants; keep temporaries explicit and do not
// reassociate.

namespace fsa::simd::detail {

inline constexpr double kExpUnderflow = -745.13321910194110842;
inline constexpr double kExpOverflow = 709.78271289338399673;

// exp(x) after Cephes: x = n*ln2 + r, e^r via a rational polynomial in r,
// then two exact power-of-two scalings.  Agrees with libm to a few ulp; the
// value of having our own is that the AVX2 path can replay it bit for bit.
inline double exp_elem(double x) {
    if (std::isnan(x)) return x;
    if (x > kExpOverflow) return std::numeric_limits<double>::infinity();
    if (x < kExpUnderflow) return 0.0;

    const double log2e = 1.4426950408889634073599;
    const double c1 = 6.93145751953125e-1;
    const double c2 = 1.42860682030941723212e-6;

    const double nf = std::nearbyint(x * log2e);
    double r = x - nf * c1;
    r = r - nf * c2;
    const double rr = r * r;

    double px = 1.26177193074810590878e-4;
    px = px * rr + 3.02994407707441961300e-2;
    px = px * rr + 9.99999999999999999910e-1;
    px = px * r;

    double qx = 3.00198505138664455042e-6;
    qx = qx * rr + 2.52448340349684104192e-3;
    qx = qx * rr + 2.27265548208155028766e-1;
    qx = qx * rr + 2.00000000000000000005e0;

    const double frac = px / (qx - px);
    double res = 1.0 + 2.0 * frac;

    const int n = static_cast<int>(nf);
    const int n1 = n >> 1;  // arithmetic shift, floor(n/2)
    const int n2 = n - n1;
    res = res * std::ldexp(1.0, n1);
    res = res * std::ldexp(1.0, n2);
    return res;
}

inline double drift_transition_elem(double s, double noise, double a, double b, double drift,
                                    double sigma) {
    const double lin = a * s;
    const double den = 1.0 + s * s;
    const double sat = b * (s / den);
    const double mean = (lin + sat) + drift;
    return mean + sigma * noise;
}

inline double quadratic_obs_logw_elem(double s, double y, double obs_scale, double inv_two_var,
                                      double log_norm) {
    const double pred = (s * s) * obs_scale;
    const double resid = y - pred;
    return log_norm - (resid * resid) * inv_two_var;
}

inline double linear_obs_logw_elem(double s, double y, double coeff, double inv_two_var,
                                   double log_norm) {
    const double resid = y - coeff * s;
    return log_norm - (resid * resid) * inv_two_var;
}

}  // namespace fsa::simd::detail
