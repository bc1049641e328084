#include "fsa/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fsa/stats.hpp"

namespace fsa {
namespace {

void check_sizes(long n_small, long n_large) {
    if (n_small < 1) throw std::invalid_argument("coupling: n_small must be >= 1");
    if (n_large < n_small) throw std::invalid_argument("coupling: n_large must be >= n_small");
}

// Index of the cdf cell containing target; cdf is inclusive prefix sums.
std::size_t pick_cdf(const std::vector<double>& cdf, double target) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    if (it == cdf.end()) return cdf.size() - 1;
    return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace

std::pair<double, double> coupled_mc_means(
    const std::function<double(std::span<const double>, Rng&)>& h_sampler,
    std::span<const double> x, long n_small, long n_large, Rng& rng) {
    check_sizes(n_small, n_large);
    double acc = 0.0;
    for (long i = 0; i < n_small; ++i) acc += h_sampler(x, rng);
    const double mean_small = acc / static_cast<double>(n_small);
    for (long i = n_small; i < n_large; ++i) acc += h_sampler(x, rng);
    const double mean_large = acc / static_cast<double>(n_large);
    return {mean_small, mean_large};
}

CoupledObjective coupled_sample_mean(std::function<double(std::span<const double>, Rng&)> h_sampler) {
    if (!h_sampler) throw std::invalid_argument("coupled_sample_mean: empty sampler");
    return [h = std::move(h_sampler)](std::span<const double> x, long n_small, long n_large,
                                      Rng& rng) { return coupled_mc_means(h, x, n_small, n_large, rng); };
}

CoupledObjective coupled_from_noisy(std::function<double(std::span<const double>, long, Rng&)> noisy) {
    if (!noisy) throw std::invalid_argument("coupled_from_noisy: empty objective");
    return [f = std::move(noisy)](std::span<const double> x, long n_small, long n_large, Rng& rng) {
        check_sizes(n_small, n_large);
        const double a = f(x, n_small, rng);
        const double b = f(x, n_large, rng);
        return std::make_pair(a, b);
    };
}

CoupledKernelOutcome coupled_kernel_sample(const std::function<std::vector<double>(Rng&)>& mu_sampler,
                                           const ProposalKernel& kernel, const BoxDomain& domain,
                                           const AcceptanceFunction& fn, double beta,
                                           const CoupledObjective& objective, long n_small,
                                           long n_large, Rng& rng) {
    if (!mu_sampler) throw std::invalid_argument("coupled_kernel_sample: empty mu sampler");
    if (!objective) throw std::invalid_argument("coupled_kernel_sample: empty objective");
    check_sizes(n_small, n_large);

    CoupledKernelOutcome out;
    out.x = mu_sampler(rng);
    out.z.assign(out.x.size(), 0.0);
    propose_into(kernel, domain, out.x, 1.0, rng, out.z);

    auto [sx, lx] = objective(out.x, n_small, n_large, rng);
    auto [sz, lz] = objective(out.z, n_small, n_large, rng);
    out.psi_small_x = sx;
    out.psi_small_z = sz;
    out.psi_large_x = lx;
    out.psi_large_z = lz;

    const double p_small = acceptance_prob(fn, beta, sx, sz);
    const double p_large = acceptance_prob(fn, beta, lx, lz);
    const double u = rng.uniform01();
    out.accept_small = u <= p_small;
    out.accept_large = u <= p_large;
    out.disagree = out.accept_small != out.accept_large;
    return out;
}

TvEstimate estimate_kernel_tv(const std::function<std::vector<double>(Rng&)>& mu_sampler,
                              const ProposalKernel& kernel, const BoxDomain& domain,
                              const AcceptanceFunction& fn, double beta,
                              const CoupledObjective& objective, long n_small, long n_large,
                              long reps, Rng& rng) {
    if (reps < 1) throw std::invalid_argument("estimate_kernel_tv: reps must be >= 1");
    long disagreements = 0;
    for (long r = 0; r < reps; ++r) {
        const auto outcome = coupled_kernel_sample(mu_sampler, kernel, domain, fn, beta, objective,
                                                   n_small, n_large, rng);
        if (outcome.disagree) ++disagreements;
    }
    TvEstimate est;
    est.reps = reps;
    est.rate = static_cast<double>(disagreements) / static_cast<double>(reps);
    est.stderr_ = stats::binomial_stderr(est.rate, reps);
    return est;
}

long CoupledFilterPair::shared_count() const {
    return std::count(shared.begin(), shared.end(), std::uint8_t{1});
}

CoupledFilterPair coupled_pf_init(const StateSpaceModel& model, std::span<const double> theta,
                                  long n_small, long n_large, Rng& rng) {
    check_sizes(n_small, n_large);
    if (!model.init_sampler) throw std::invalid_argument("coupled_pf_init: model lacks init_sampler");

    CoupledFilterPair pair;
    pair.large.t = 1;
    pair.large.positions.resize(static_cast<std::size_t>(n_large));
    for (long i = 0; i < n_large; ++i)
        pair.large.positions[static_cast<std::size_t>(i)] = model.init_sampler(theta, rng);
    pair.small.t = 1;
    pair.small.positions.assign(pair.large.positions.begin(),
                                pair.large.positions.begin() + n_small);
    pair.shared.assign(static_cast<std::size_t>(n_small), std::uint8_t{1});
    return pair;
}

CoupledStepStats coupled_pf_step(const StateSpaceModel& model, std::span<const double> theta,
                                 CoupledFilterPair& pair, double y, Rng& rng) {
    const long n = static_cast<long>(pair.small.size());
    const long np = static_cast<long>(pair.large.size());
    if (n < 1 || np < n || pair.shared.size() != pair.small.positions.size())
        throw std::invalid_argument("coupled_pf_step: malformed filter pair");
    if (pair.small.t != pair.large.t)
        throw std::invalid_argument("coupled_pf_step: filters out of sync");

    const WeightSummary ws = pf_weights(model, theta, pair.small, y);
    const WeightSummary wl = pf_weights(model, theta, pair.large, y);
    const double inv_sum_s = 1.0 / ws.sum;
    const double inv_sum_l = 1.0 / wl.sum;

    // Overlap mass on the shared slots, plus residual weights on both sides.
    // Residuals keep their full index ranges so that overlap + residual
    // reproduces each filter's multinomial step exactly.
    std::vector<long> match_idx;
    std::vector<double> match_cdf;
    match_idx.reserve(static_cast<std::size_t>(n));
    match_cdf.reserve(static_cast<std::size_t>(n));
    std::vector<double> resid_small_cdf(static_cast<std::size_t>(n));
    std::vector<double> resid_large_cdf(static_cast<std::size_t>(np));
    double match_acc = 0.0, rs_acc = 0.0, rl_acc = 0.0;
    for (long j = 0; j < np; ++j) {
        const double wlj = wl.shifted[static_cast<std::size_t>(j)] * inv_sum_l;
        double overlap = 0.0;
        if (j < n) {
            const double wsj = ws.shifted[static_cast<std::size_t>(j)] * inv_sum_s;
            if (pair.shared[static_cast<std::size_t>(j)]) {
                overlap = std::min(wsj, wlj);
                match_acc += overlap;
                match_idx.push_back(j);
                match_cdf.push_back(match_acc);
            }
            rs_acc += std::max(0.0, wsj - overlap);
            resid_small_cdf[static_cast<std::size_t>(j)] = rs_acc;
        }
        rl_acc += std::max(0.0, wlj - overlap);
        resid_large_cdf[static_cast<std::size_t>(j)] = rl_acc;
    }
    const double match_mass = match_acc;
    // Overlap plus residual must reproduce each filter's normalized weights.
    if (std::abs(match_acc + rs_acc - 1.0) > 1e-9 || std::abs(match_acc + rl_acc - 1.0) > 1e-9)
        throw std::logic_error("coupled_pf_step: residual decomposition does not sum to 1");

    // Full-weight cdf for the large filter's extra slots.
    std::vector<double> full_large_cdf(static_cast<std::size_t>(np));
    double full_acc = 0.0;
    for (long j = 0; j < np; ++j) {
        full_acc += wl.shifted[static_cast<std::size_t>(j)];
        full_large_cdf[static_cast<std::size_t>(j)] = full_acc;
    }

    const long t_next = pair.small.t + 1;
    std::vector<double> next_small(static_cast<std::size_t>(n));
    std::vector<double> next_large(static_cast<std::size_t>(np));
    std::vector<std::uint8_t> next_shared(static_cast<std::size_t>(n), std::uint8_t{0});

    long shared_count = 0;
    for (long i = 0; i < n; ++i) {
        const double u_event = rng.uniform01();
        if (u_event < match_mass) {
            const double target = rng.uniform01() * match_acc;
            const long j = match_idx[pick_cdf(match_cdf, target)];
            const double parent = pair.small.positions[static_cast<std::size_t>(j)];
            const double child = model.transition_sampler(theta, parent, t_next, rng);
            next_small[static_cast<std::size_t>(i)] = child;
            next_large[static_cast<std::size_t>(i)] = child;
            next_shared[static_cast<std::size_t>(i)] = 1;
            ++shared_count;
        } else {
            const double ts = rng.uniform01() * rs_acc;
            const long js = static_cast<long>(pick_cdf(resid_small_cdf, ts));
            next_small[static_cast<std::size_t>(i)] =
                model.transition_sampler(theta, pair.small.positions[static_cast<std::size_t>(js)],
                                         t_next, rng);
            const double tl = rng.uniform01() * rl_acc;
            const long jl = static_cast<long>(pick_cdf(resid_large_cdf, tl));
            next_large[static_cast<std::size_t>(i)] =
                model.transition_sampler(theta, pair.large.positions[static_cast<std::size_t>(jl)],
                                         t_next, rng);
        }
    }
    for (long i = n; i < np; ++i) {
        const double target = rng.uniform01() * full_acc;
        const long j = static_cast<long>(pick_cdf(full_large_cdf, target));
        next_large[static_cast<std::size_t>(i)] =
            model.transition_sampler(theta, pair.large.positions[static_cast<std::size_t>(j)],
                                     t_next, rng);
    }

    pair.small.positions.swap(next_small);
    pair.large.positions.swap(next_large);
    pair.shared.swap(next_shared);
    pair.small.t = t_next;
    pair.large.t = t_next;

    CoupledStepStats out;
    out.shared_count = shared_count;
    out.match_mass = match_mass;
    out.log_inc_small = ws.log_increment;
    out.log_inc_large = wl.log_increment;
    return out;
}

double coupled_tv_bound(long n_small, long n_large, long shared_count) {
    check_sizes(n_small, n_large);
    if (shared_count < 0 || shared_count > n_small)
        throw std::invalid_argument("coupled_tv_bound: shared_count out of range");
    const double dn = static_cast<double>(n_small);
    const double dnp = static_cast<double>(n_large);
    const double unshared = static_cast<double>(n_large - shared_count);
    return 1.0 - dn / dnp + unshared * (1.0 / dn + 1.0 / dnp);
}

std::vector<CoupledTrace> run_coupled_filters(const StateSpaceModel& model,
                                              std::span<const double> theta,
                                              std::span<const double> obs, long n_small,
                                              long n_large, Rng& rng) {
    if (obs.empty()) throw std::invalid_argument("run_coupled_filters: empty observation record");
    CoupledFilterPair pair = coupled_pf_init(model, theta, n_small, n_large, rng);

    std::vector<CoupledTrace> trace;
    trace.reserve(obs.size());
    for (std::size_t k = 0;; ++k) {
        CoupledTrace row;
        row.t = pair.small.t;
        row.shared_count = pair.shared_count();
        row.tv_bound = coupled_tv_bound(n_small, n_large, row.shared_count);
        trace.push_back(row);
        if (k + 1 >= obs.size()) break;
        coupled_pf_step(model, theta, pair, obs[k], rng);
    }
    return trace;
}

}  // namespace fsa
