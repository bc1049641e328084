#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "fsa/acceptance.hpp"
#include "fsa/domain.hpp"
#include "fsa/rng.hpp"
#include "fsa/ssm.hpp"

namespace fsa {

// Joint draw of (psi^N, psi^N') at one point, N <= N'.  How tightly the two
// are coupled is the evaluator's business: sample-mean evaluators share the
// first N summands, while coupled_from_noisy falls back to independent calls.
using CoupledObjective =
    std::function<std::pair<double, double>(std::span<const double>, long, long, Rng&)>;

// Sample means of h(xi; x) where the smaller mean reuses the first n_small
// of the larger mean's draws.  E|psi^N - psi^N'| <= 2 E|h| (N'-N)/N' under
// this coupling.
std::pair<double, double> coupled_mc_means(
    const std::function<double(std::span<const double>, Rng&)>& h_sampler,
    std::span<const double> x, long n_small, long n_large, Rng& rng);

CoupledObjective coupled_sample_mean(std::function<double(std::span<const double>, Rng&)> h_sampler);

// Two independent evaluations of an ordinary noisy objective.
CoupledObjective coupled_from_noisy(std::function<double(std::span<const double>, long, Rng&)> noisy);

struct CoupledKernelOutcome {
    std::vector<double> x;  // shared current state
    std::vector<double> z;  // shared proposal
    double psi_small_x = 0.0, psi_small_z = 0.0;
    double psi_large_x = 0.0, psi_large_z = 0.0;
    bool accept_small = false;
    bool accept_large = false;
    bool disagree = false;
};

// One coupled draw of the two annealing kernels that differ only in the
// approximation size: shared x ~ mu, shared proposal z, four objective
// values, one shared acceptance uniform.  The fraction of disagreements
// over repeated draws upper-bounds the total variation distance between the
// two kernels started at mu.
CoupledKernelOutcome coupled_kernel_sample(const std::function<std::vector<double>(Rng&)>& mu_sampler,
                                           const ProposalKernel& kernel, const BoxDomain& domain,
                                           const AcceptanceFunction& fn, double beta,
                                           const CoupledObjective& objective, long n_small,
                                           long n_large, Rng& rng);

struct TvEstimate {
    double rate = 0.0;
    double stderr_ = 0.0;
    long reps = 0;
};

TvEstimate estimate_kernel_tv(const std::function<std::vector<double>(Rng&)>& mu_sampler,
                              const ProposalKernel& kernel, const BoxDomain& domain,
                              const AcceptanceFunction& fn, double beta,
                              const CoupledObjective& objective, long n_small, long n_large,
                              long reps, Rng& rng);

// A pair of bootstrap filters with N <= N' particles run on the same data.
// Slots 1..N carry a coupling mask: where shared[i] is set, both filters
// hold bit-equal positions.
struct CoupledFilterPair {
    ParticleCloud small;
    ParticleCloud large;
    std::vector<std::uint8_t> shared;  // size N

    long shared_count() const;
};

// N' initial draws; the small filter reuses the first N of them.
CoupledFilterPair coupled_pf_init(const StateSpaceModel& model, std::span<const double> theta,
                                  long n_small, long n_large, Rng& rng);

struct CoupledStepStats {
    long shared_count = 0;      // |J_{t+1}| after the step
    double match_mass = 0.0;    // sum over J_t of min(w^N_j, w^N'_j)
    double log_inc_small = 0.0;
    double log_inc_large = 0.0;
};

// One coupled bootstrap step.  Each shared slot keeps the coupling with
// probability min(w^N_j, w^N'_j) summed over J_t (same ancestor, one shared
// mutation draw); otherwise both filters draw from their residual ancestor
// distributions and mutate independently.  Marginally each filter performs
// an exact multinomial bootstrap step, and |J_{t+1}| given the current
// state is Binomial(N, match_mass).
CoupledStepStats coupled_pf_step(const StateSpaceModel& model, std::span<const double> theta,
                                 CoupledFilterPair& pair, double y, Rng& rng);

// 1 - N/N' + |J_t^c| (1/N + 1/N'), the total variation bound between the
// predictive measures tracked by the two filters.
double coupled_tv_bound(long n_small, long n_large, long shared_count);

struct CoupledTrace {
    long t = 0;
    long shared_count = 0;
    double tv_bound = 0.0;
};

// Trace of (t, |J_t|, tv bound) for t = 1..T over a fixed observation
// record; consumes obs[0..T-2] (the predictive law at time t depends on
// observations strictly before t).
std::vector<CoupledTrace> run_coupled_filters(const StateSpaceModel& model,
                                              std::span<const double> theta,
                                              std::span<const double> obs, long n_small,
                                              long n_large, Rng& rng);

}  // namespace fsa
