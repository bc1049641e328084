#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fsa/annealer.hpp"
#include "fsa/coupling.hpp"
#include "fsa/domain.hpp"
#include "fsa/ssm.hpp"
#include "fsa/stats.hpp"

namespace fsa {

// Runs body(r) for every r in [0, reps) across at most `threads` workers.
// body must be safe to call concurrently for distinct r; the first exception
// thrown by any worker is rethrown on the calling thread once all workers
// have stopped.
void parallel_reps(long reps, int threads, const std::function<void(long)>& body);

// ---------------------------------------------------------------------------
// Exceedance curves: P(psi(theta_n) <= psi_max - epsilon) against n.

struct ExceedancePoint {
    long n = 0;
    double p_hat = 0.0;
    double stderr_ = 0.0;
    long reps = 0;
};

struct ExceedanceCurve {
    double epsilon = 0.0;
    std::vector<ExceedancePoint> points;  // sorted by n
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    long n_min = 0;
    long n_max = 0;
    long points_used = 0;
};

// Runs `reps` independent chains (replication r draws from stream (seed, r),
// starting state uniform on the box) and records, at each checkpoint n and
// for every epsilon, the fraction of replications with
// psi(theta_n) <= psi_max - epsilon, with its binomial standard error.
// The exceedance is always evaluated with the exact psi, so
// objective.exact must be set even when the chain runs on a noisy objective.
std::vector<ExceedanceCurve> exceedance_curves(const AnnealerConfig& cfg, const Objective& objective,
                                               double psi_max, std::span<const double> epsilons,
                                               std::span<const long> checkpoint_ns, long reps,
                                               std::uint64_t seed, int threads = 1);

ExceedanceCurve exceedance_curve(const AnnealerConfig& cfg, const Objective& objective,
                                 double psi_max, double epsilon,
                                 std::span<const long> checkpoint_ns, long reps, std::uint64_t seed,
                                 int threads = 1);

// Least squares on (log n, log p_hat) over checkpoints with n in
// [n_min, n_max] and p_hat > 0; needs at least 4 such points.
RateFit fit_loglog_slope(const ExceedanceCurve& curve, long n_min, long n_max);

// ---------------------------------------------------------------------------
// The V example: psi(x) = -|x| on [-1/2, 1/2], maximum 0 at the origin.
// Everything about its fixed-temperature behavior under the classical rule
// with uniform proposals is available in closed form, which makes it the
// calibration target for the rate experiments.

BoxDomain vee_domain();
Objective vee_objective();

// Noisy variant: observes psi(x) + mean of n iid N(0, noise_std^2) draws;
// keeps the exact psi alongside for exceedance measurement.
Objective vee_noisy_objective(double noise_std);

// Stationary mass of {|x| >= epsilon} for the fixed-beta classical kernel
// with uniform proposals on the V example:
// (e^{-beta epsilon} - e^{-beta/2}) / (1 - e^{-beta/2}).
double vee_stationary_exceedance(double beta, double epsilon);

struct StationaryEstimate {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    long samples = 0;
    long burn_in = 0;
    long thin_gap = 0;
};

// Monte Carlo counterpart of vee_stationary_exceedance: 100 independent
// fixed-beta chains, burn-in 10 g(beta/2) steps (the crude minorization
// bound for this kernel), samples thinned far past the independence
// sampler's regeneration time so the binomial stderr is honest.
StationaryEstimate sample_vee_stationary_exceedance(double beta, double epsilon, long n_samples,
                                                    std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Head-to-head of the polynomial-acceptance scheme against the classical
// one.  Replication r of both schemes consumes the identical stream
// (seed, r), so the chains share their starting point and proposal draws and
// the final-checkpoint comparison is paired.

struct SchemeComparison {
    double epsilon = 0.0;
    ExceedanceCurve fast;
    ExceedanceCurve classical;
    RateFit fast_fit;
    RateFit classical_fit;
    // Paired one-sided test of classical exceedance > fast exceedance at the
    // last checkpoint: z > 0 favors the fast scheme.
    double final_z = 0.0;
    double final_p = 1.0;
};

std::vector<SchemeComparison> compare_classical_fast(
    const AnnealerConfig& fast_cfg, const AnnealerConfig& classical_cfg, const Objective& objective,
    double psi_max, std::span<const double> epsilons, std::span<const long> checkpoint_ns,
    long fit_n_min, long fit_n_max, long reps, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Benchmark study: estimate the five parameters of the nonlinear benchmark
// state-space model by annealing the particle-filter log-likelihood.

struct BenchmarkStudyConfig {
    BenchmarkParams truth;  // generates the single shared dataset
    long T = 500;
    long reps = 150;
    long iterations = 5000;
    std::uint64_t seed = 0;
    int threads = 1;

    BenchmarkStudyConfig() : truth(0.9, 18.0, 10.0, std::sqrt(10.0), 1.0) {}
};

struct BenchmarkStudy {
    std::vector<double> observations;
    std::vector<std::vector<double>> finals;        // reps rows of 5 coordinates
    std::vector<double> mean_theta;                 // per-coordinate mean of finals
    std::vector<double> stderr_theta;               // per-coordinate standard error
    std::vector<std::vector<double>> sorted_coords; // 5 sorted columns (probability-plot data)
};

// Search box for the benchmark: [0.45,1.8] x [9,36] x [5,20] x [0.316,36]
// x [0.5,2], log-scale proposals on the two standard deviations.
BoxDomain benchmark_domain();

// Annealer setup the study runs with: beta_n = 10 n^{1/4}, polynomial
// acceptance (tau = 1), N_n = max(n, 20) particles, Gaussian random walk
// with the default step rule on the box above.
AnnealerConfig benchmark_annealer_config(long iterations, std::uint64_t seed);

// Simulates one dataset of length T from cfg.truth (stream (seed, 0)), then
// runs cfg.reps annealing chains on the particle log-likelihood
// (replication r uses stream (seed, 1 + r)) and summarizes the final
// parameter estimates.
BenchmarkStudy run_benchmark_study(const BenchmarkStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Coupled-filter contraction grid: average tv bound at a fixed time against
// (N' - N)/N over a grid of sizes and ratios.

struct CouplingGridPoint {
    long n_small = 0;
    long n_large = 0;
    double predictor = 0.0;  // (N' - N)/N
    double mean_tv_bound = 0.0;
    double stderr_ = 0.0;
    long reps = 0;
};

struct CouplingGridStudy {
    long t_fixed = 0;
    std::vector<CouplingGridPoint> points;
    stats::OlsFit fit;  // mean_tv_bound against predictor
};

// For each (N, ratio) pair runs `reps` coupled filter pairs on the given
// observation record (grid point g, replication r uses stream
// (seed, g * reps + r)) and records the mean tv bound at time t_fixed.
CouplingGridStudy coupling_grid_study(const StateSpaceModel& model, std::span<const double> theta,
                                      std::span<const double> obs, long t_fixed,
                                      std::span<const long> n_values, std::span<const double> ratios,
                                      long reps, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Particle filter versus the exact Kalman likelihood on a linear-Gaussian
// model.

struct PfCheckRow {
    long n_particles = 0;
    double mean_loglik = 0.0;
    double sd_loglik = 0.0;
    double mean_rel_err = 0.0;  // mean over seeds of |pf - kalman| / |kalman|
    long seeds = 0;
};

struct PfCheckReport {
    double kalman_loglik = 0.0;
    std::vector<PfCheckRow> rows;
};

// Runs n_seeds independent filter passes per particle count (count index i,
// seed s uses stream (seed, 1 + i * n_seeds + s)).
PfCheckReport pf_check(const LinearGaussianModel& model, std::span<const double> obs,
                       std::span<const long> particle_counts, long n_seeds, std::uint64_t seed,
                       int threads = 1);

}  // namespace fsa
