#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fsa::stats {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // unbiased sample variance
    std::size_t n = 0;

    double stderr_mean() const;
};

MeanVar summarize(std::span<const double> xs);

double binomial_stderr(double p_hat, std::size_t n);

double normal_cdf(double z);
double normal_sf(double z);

// Inverse standard normal CDF (Acklam's rational approximation, |eps| < 1.2e-9).
double normal_quantile(double p);

// Upper regularized incomplete gamma Q(a, x); series / continued fraction.
double regularized_gamma_q(double a, double x);

// Survival function of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, int df);

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
};

OlsFit ols_fit(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation (distinct values assumed; ties get average ranks).
double spearman_rho(std::span<const double> x, std::span<const double> y);

// One-sided p-value for negative monotone association, normal approximation
// z = rho * sqrt(n - 1).
double spearman_p_negative(double rho, std::size_t n);

// Kolmogorov-Smirnov statistic of a sample against U(0,1).
double ks_statistic_uniform(std::vector<double> sample);

// Asymptotic Kolmogorov survival function: P(sqrt(n) D > lambda).
double ks_sf(double lambda);

// Two-sample z statistic for equal means (Welch variance, normal reference;
// appropriate for the sample sizes used here, >= 100 per group).
double welch_z(std::span<const double> a, std::span<const double> b);

// Pearson chi-square goodness-of-fit against given expected counts, pooling
// cells from both ends until every pooled cell has expectation >= min_expected.
// Returns the p-value (chi-square survival at df = cells - 1).
double chi_square_gof_p(std::span<const double> observed, std::span<const double> expected,
                        double min_expected = 5.0);

}  // namespace fsa::stats
