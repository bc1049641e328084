#include <limits>

#include "fsa/simd/elementwise.hpp"
#include "fsa/simd/kernels.hpp"

namespace fsa::simd {

namespace {

using namespace detail;

double reduce_max_scalar(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

double reduce_sum_scalar(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t blocks = n / 4;
    for (std::size_t k = 0; k < blocks; ++k) {
        acc[0] += x[4 * k + 0];
        acc[1] += x[4 * k + 1];
        acc[2] += x[4 * k + 2];
        acc[3] += x[4 * k + 3];
    }
    for (std::size_t j = 0; j < n % 4; ++j) acc[j] += x[4 * blocks + j];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void exp_shifted_scalar(const double* x, double shift, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = exp_elem(x[i] - shift);
}

void drift_transition_scalar(const double* s, const double* noise, double* out, std::size_t n,
                             double a, double b, double drift, double sigma) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = drift_transition_elem(s[i], noise[i], a, b, drift, sigma);
}

void quadratic_obs_logw_scalar(const double* s, double* logw, std::size_t n, double y,
                               double obs_scale, double inv_two_var, double log_norm) {
    for (std::size_t i = 0; i < n; ++i)
        logw[i] = quadratic_obs_logw_elem(s[i], y, obs_scale, inv_two_var, log_norm);
}

void linear_obs_logw_scalar(const double* s, double* logw, std::size_t n, double y, double coeff,
                            double inv_two_var, double log_norm) {
    for (std::size_t i = 0; i < n; ++i)
        logw[i] = linear_obs_logw_elem(s[i], y, coeff, inv_two_var, log_norm);
}

constexpr Kernels kScalar = {
    "scalar",
    reduce_max_scalar,
    reduce_sum_scalar,
    exp_shifted_scalar,
    drift_transition_scalar,
    quadratic_obs_logw_scalar,
    linear_obs_logw_scalar,
};

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

}  // namespace fsa::simd
