#include "fsa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fsa::stats {

double MeanVar::stderr_mean() const { return n > 0 ? std::sqrt(var / static_cast<double>(n)) : 0.0; }

MeanVar summarize(std::span<const double> xs) {
    MeanVar out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            const double d = x - out.mean;
            ss += d * d;
        }
        out.var = ss / static_cast<double>(xs.size() - 1);
    }
    return out;
}

double binomial_stderr(double p_hat, std::size_t n) {
    if (n == 0) throw std::invalid_argument("binomial_stderr: n must be positive");
    return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {

// Lower regularized incomplete gamma by series, for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by continued fraction, for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double fpmin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("regularized_gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double x, int df) {
    if (df <= 0) throw std::invalid_argument("chi_square_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * df, 0.5 * x);
}

OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_fit: need >= 2 paired points");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_fit: x values are all equal");
    OlsFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

namespace {

std::vector<double> ranks_of(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("spearman_rho: need >= 3 pairs");
    const auto rx = ranks_of(x);
    const auto ry = ranks_of(y);
    const auto sx = summarize(rx);
    const auto sy = summarize(ry);
    double cov = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - sx.mean) * (ry[i] - sy.mean);
    cov /= static_cast<double>(rx.size() - 1);
    const double denom = std::sqrt(sx.var * sy.var);
    if (denom == 0.0) throw std::invalid_argument("spearman_rho: constant input");
    return cov / denom;
}

double spearman_p_negative(double rho, std::size_t n) {
    if (n < 4) throw std::invalid_argument("spearman_p_negative: need n >= 4");
    const double z = rho * std::sqrt(static_cast<double>(n - 1));
    return normal_cdf(z);
}

double ks_statistic_uniform(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic_uniform: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = sample[i];  // U(0,1)
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(cdf - lo, hi - cdf));
    }
    return d;
}

double ks_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double welch_z(std::span<const double> a, std::span<const double> b) {
    const auto sa = summarize(a);
    const auto sb = summarize(b);
    if (sa.n < 2 || sb.n < 2) throw std::invalid_argument("welch_z: need >= 2 samples per group");
    const double se = std::sqrt(sa.var / static_cast<double>(sa.n) + sb.var / static_cast<double>(sb.n));
    if (se == 0.0) return 0.0;
    return (sa.mean - sb.mean) / se;
}

double chi_square_gof_p(std::span<const double> observed, std::span<const double> expected,
                        double min_expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chi_square_gof_p: size mismatch");
    // Pool sparse cells from the left and right tails inward.
    std::vector<double> obs(observed.begin(), observed.end());
    std::vector<double> exp(expected.begin(), expected.end());
    std::size_t lo = 0, hi = obs.size() - 1;
    while (lo < hi && exp[lo] < min_expected) {
        exp[lo + 1] += exp[lo];
        obs[lo + 1] += obs[lo];
        ++lo;
    }
    while (hi > lo && exp[hi] < min_expected) {
        exp[hi - 1] += exp[hi];
        obs[hi - 1] += obs[hi];
        --hi;
    }
    std::size_t cells = 0;
    double stat = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        if (exp[i] <= 0.0) continue;
        const double d = obs[i] - exp[i];
        stat += d * d / exp[i];
        ++cells;
    }
    if (cells < 2) throw std::invalid_argument("chi_square_gof_p: fewer than 2 usable cells");
    return chi_square_sf(stat, static_cast<int>(cells - 1));
}

}  // namespace fsa::stats
