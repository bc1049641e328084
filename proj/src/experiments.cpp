#include "fsa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fsa {

void parallel_reps(long reps, int threads, const std::function<void(long)>& body) {
    if (reps < 0) throw std::invalid_argument("parallel_reps: reps must be >= 0");
    if (!body) throw std::invalid_argument("parallel_reps: empty body");
    if (threads <= 1 || reps <= 1) {
        for (long r = 0; r < reps; ++r) body(r);
        return;
    }

    const long workers = std::min<long>(threads, reps);
    std::atomic<long> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const long r = next.fetch_add(1, std::memory_order_relaxed);
            if (r >= reps) return;
            try {
                body(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

void validate_checkpoints(std::span<const long> ns) {
    if (ns.empty()) throw std::invalid_argument("checkpoints must be nonempty");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] < 1) throw std::invalid_argument("checkpoints must be >= 1");
        if (i > 0 && ns[i] <= ns[i - 1])
            throw std::invalid_argument("checkpoints must be strictly increasing");
    }
}

void validate_epsilons(std::span<const double> epsilons) {
    if (epsilons.empty()) throw std::invalid_argument("epsilons must be nonempty");
    for (double e : epsilons)
        if (!(e > 0.0)) throw std::invalid_argument("epsilons must be > 0");
}

ExceedanceCurve make_curve(double epsilon, std::span<const long> checkpoint_ns,
                           const std::atomic<long>* counts, std::size_t stride, std::size_t e,
                           long reps) {
    ExceedanceCurve curve;
    curve.epsilon = epsilon;
    curve.points.resize(checkpoint_ns.size());
    for (std::size_t k = 0; k < checkpoint_ns.size(); ++k) {
        ExceedancePoint& p = curve.points[k];
        p.n = checkpoint_ns[k];
        p.reps = reps;
        p.p_hat = static_cast<double>(counts[e * stride + k].load(std::memory_order_relaxed)) /
                  static_cast<double>(reps);
        p.stderr_ = stats::binomial_stderr(p.p_hat, static_cast<std::size_t>(reps));
    }
    return curve;
}

// Fit, or a zeroed result (points_used == 0) when the curve has fewer than
// 4 positive checkpoints in range.
RateFit try_fit(const ExceedanceCurve& curve, long n_min, long n_max) {
    long positive = 0;
    for (const auto& p : curve.points)
        if (p.n >= n_min && p.n <= n_max && p.p_hat > 0.0) ++positive;
    if (positive < 4) {
        RateFit out;
        out.n_min = n_min;
        out.n_max = n_max;
        return out;
    }
    return fit_loglog_slope(curve, n_min, n_max);
}

}  // namespace

std::vector<ExceedanceCurve> exceedance_curves(const AnnealerConfig& cfg, const Objective& objective,
                                               double psi_max, std::span<const double> epsilons,
                                               std::span<const long> checkpoint_ns, long reps,
                                               std::uint64_t seed, int threads) {
    cfg.validate();
    if (!objective.exact)
        throw std::invalid_argument("exceedance_curves: objective.exact is required (the gap is "
                                    "measured with the exact value even for noisy chains)");
    if (reps < 100) throw std::invalid_argument("exceedance_curves: reps must be >= 100");
    validate_epsilons(epsilons);
    validate_checkpoints(checkpoint_ns);

    const std::size_t ne = epsilons.size();
    const std::size_t nk = checkpoint_ns.size();
    std::vector<std::atomic<long>> counts(ne * nk);
    const long horizon = checkpoint_ns.back();

    parallel_reps(reps, threads, [&](long r) {
        ChainState chain(cfg, objective, Rng::stream(seed, static_cast<std::uint64_t>(r)));
        std::size_t k = 0;
        for (long n = 1; n <= horizon; ++n) {
            chain.step();
            if (n == checkpoint_ns[k]) {
                const double gap = psi_max - objective.exact(chain.state());
                for (std::size_t e = 0; e < ne; ++e)
                    if (gap >= epsilons[e]) counts[e * nk + k].fetch_add(1, std::memory_order_relaxed);
                ++k;
            }
        }
    });

    std::vector<ExceedanceCurve> out;
    out.reserve(ne);
    for (std::size_t e = 0; e < ne; ++e)
        out.push_back(make_curve(epsilons[e], checkpoint_ns, counts.data(), nk, e, reps));
    return out;
}

ExceedanceCurve exceedance_curve(const AnnealerConfig& cfg, const Objective& objective,
                                 double psi_max, double epsilon,
                                 std::span<const long> checkpoint_ns, long reps, std::uint64_t seed,
                                 int threads) {
    const double eps[1] = {epsilon};
    return exceedance_curves(cfg, objective, psi_max, eps, checkpoint_ns, reps, seed, threads)[0];
}

RateFit fit_loglog_slope(const ExceedanceCurve& curve, long n_min, long n_max) {
    if (n_min < 1 || n_max < n_min)
        throw std::invalid_argument("fit_loglog_slope: need 1 <= n_min <= n_max");
    std::vector<double> lx, ly;
    for (const auto& p : curve.points) {
        if (p.n < n_min || p.n > n_max || !(p.p_hat > 0.0)) continue;
        lx.push_back(std::log(static_cast<double>(p.n)));
        ly.push_back(std::log(p.p_hat));
    }
    if (lx.size() < 4)
        throw std::invalid_argument(
            "fit_loglog_slope: need at least 4 checkpoints with positive exceedance in range");
    const stats::OlsFit f = stats::ols_fit(lx, ly);
    RateFit out;
    out.slope = f.slope;
    out.intercept = f.intercept;
    out.r_squared = f.r_squared;
    out.n_min = n_min;
    out.n_max = n_max;
    out.points_used = static_cast<long>(lx.size());
    return out;
}

BoxDomain vee_domain() { return BoxDomain({-0.5}, {0.5}); }

Objective vee_objective() {
    Objective o;
    o.exact = [](std::span<const double> x) { return -std::abs(x[0]); };
    return o;
}

Objective vee_noisy_objective(double noise_std) {
    if (!(noise_std >= 0.0))
        throw std::invalid_argument("vee_noisy_objective: noise_std must be >= 0");
    Objective o = vee_objective();
    o.noisy = [noise_std](std::span<const double> x, long n, Rng& rng) {
        double acc = 0.0;
        for (long i = 0; i < n; ++i) acc += rng.normal();
        return -std::abs(x[0]) + noise_std * acc / static_cast<double>(n);
    };
    return o;
}

double vee_stationary_exceedance(double beta, double epsilon) {
    if (!(beta > 0.0)) throw std::domain_error("vee_stationary_exceedance: beta must be > 0");
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::domain_error("vee_stationary_exceedance: epsilon must be in (0, 1/2)");
    const double edge = std::exp(-beta * 0.5);
    return (std::exp(-beta * epsilon) - edge) / (1.0 - edge);
}

StationaryEstimate sample_vee_stationary_exceedance(double beta, double epsilon, long n_samples,
                                                    std::uint64_t seed, int threads) {
    if (!(beta > 0.0))
        throw std::invalid_argument("sample_vee_stationary_exceedance: beta must be > 0");
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::invalid_argument("sample_vee_stationary_exceedance: epsilon must be in (0, 1/2)");
    if (n_samples < 1)
        throw std::invalid_argument("sample_vee_stationary_exceedance: n_samples must be >= 1");

    const long n_chains = 100;
    const long per_chain = (n_samples + n_chains - 1) / n_chains;
    const long total = per_chain * n_chains;

    // One uniform-proposal step puts mass everywhere with density at least
    // f(beta * osc), osc = 1/2 here, so 10 g(beta/2) steps forget the start.
    const long burn = static_cast<long>(std::ceil(10.0 * std::exp(beta * 0.5)));
    // For thinning, the crude bound is far too pessimistic: against the
    // uniform proposal this chain is an independence sampler and regenerates
    // at rate 1/M, M = sup target/proposal = beta / (2 (1 - e^{-beta/2})).
    const double m_ratio = beta / (2.0 * (1.0 - std::exp(-beta * 0.5)));
    const long gap = std::max<long>(50, static_cast<long>(std::ceil(10.0 * m_ratio)));

    const AcceptanceFunction fn = AcceptanceFunction::classical();
    std::atomic<long> hits{0};
    parallel_reps(n_chains, threads, [&](long c) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(c));
        double x = rng.uniform(-0.5, 0.5);
        auto step = [&] {
            const double z = rng.uniform(-0.5, 0.5);
            const double p = acceptance_prob(fn, beta, -std::abs(x), -std::abs(z));
            if (rng.uniform01() <= p) x = z;
        };
        for (long i = 0; i < burn; ++i) step();
        long local = 0;
        for (long s = 0; s < per_chain; ++s) {
            for (long i = 0; i < gap; ++i) step();
            if (std::abs(x) >= epsilon) ++local;
        }
        hits.fetch_add(local, std::memory_order_relaxed);
    });

    StationaryEstimate est;
    est.samples = total;
    est.burn_in = burn;
    est.thin_gap = gap;
    est.p_hat = static_cast<double>(hits.load()) / static_cast<double>(total);
    est.stderr_ = stats::binomial_stderr(est.p_hat, static_cast<std::size_t>(total));
    return est;
}

std::vector<SchemeComparison> compare_classical_fast(
    const AnnealerConfig& fast_cfg, const AnnealerConfig& classical_cfg, const Objective& objective,
    double psi_max, std::span<const double> epsilons, std::span<const long> checkpoint_ns,
    long fit_n_min, long fit_n_max, long reps, std::uint64_t seed, int threads) {
    fast_cfg.validate();
    classical_cfg.validate();
    if (fast_cfg.domain.dim() != classical_cfg.domain.dim())
        throw std::invalid_argument("compare_classical_fast: domain dimensions differ");
    if (!objective.exact)
        throw std::invalid_argument("compare_classical_fast: objective.exact is required");
    if (reps < 100) throw std::invalid_argument("compare_classical_fast: reps must be >= 100");
    validate_epsilons(epsilons);
    validate_checkpoints(checkpoint_ns);

    const std::size_t ne = epsilons.size();
    const std::size_t nk = checkpoint_ns.size();
    std::vector<std::atomic<long>> fast_counts(ne * nk);
    std::vector<std::atomic<long>> classical_counts(ne * nk);
    std::vector<std::atomic<long>> classical_only(ne);
    std::vector<std::atomic<long>> fast_only(ne);
    const long horizon = checkpoint_ns.back();

    parallel_reps(reps, threads, [&](long r) {
        // Both chains consume the same stream, so they share theta_0 and all
        // proposal randomness; only the schedules and acceptance rule differ.
        const Rng rep_stream = Rng::stream(seed, static_cast<std::uint64_t>(r));
        ChainState fast(fast_cfg, objective, rep_stream);
        ChainState classical(classical_cfg, objective, rep_stream);
        std::size_t k = 0;
        for (long n = 1; n <= horizon; ++n) {
            fast.step();
            classical.step();
            if (n == checkpoint_ns[k]) {
                const double gap_f = psi_max - objective.exact(fast.state());
                const double gap_c = psi_max - objective.exact(classical.state());
                const bool last = k + 1 == nk;
                for (std::size_t e = 0; e < ne; ++e) {
                    const bool bf = gap_f >= epsilons[e];
                    const bool bc = gap_c >= epsilons[e];
                    if (bf) fast_counts[e * nk + k].fetch_add(1, std::memory_order_relaxed);
                    if (bc) classical_counts[e * nk + k].fetch_add(1, std::memory_order_relaxed);
                    if (last) {
                        if (bc && !bf) classical_only[e].fetch_add(1, std::memory_order_relaxed);
                        if (bf && !bc) fast_only[e].fetch_add(1, std::memory_order_relaxed);
                    }
                }
                ++k;
            }
        }
    });

    std::vector<SchemeComparison> out;
    out.reserve(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        SchemeComparison cmp;
        cmp.epsilon = epsilons[e];
        cmp.fast = make_curve(epsilons[e], checkpoint_ns, fast_counts.data(), nk, e, reps);
        cmp.classical = make_curve(epsilons[e], checkpoint_ns, classical_counts.data(), nk, e, reps);
        cmp.fast_fit = try_fit(cmp.fast, fit_n_min, fit_n_max);
        cmp.classical_fit = try_fit(cmp.classical, fit_n_min, fit_n_max);

        // Paired differences d_r = 1{classical exceeds} - 1{fast exceeds}
        // at the final checkpoint; ties drop out of the numerator but count
        // toward the sample size.
        const double co = static_cast<double>(classical_only[e].load());
        const double fo = static_cast<double>(fast_only[e].load());
        const double n = static_cast<double>(reps);
        const double mean_d = (co - fo) / n;
        const double var_d = (co + fo) / n - mean_d * mean_d;
        if (var_d > 0.0) {
            cmp.final_z = mean_d / std::sqrt(var_d / n);
        } else {
            cmp.final_z = mean_d > 0.0   ? std::numeric_limits<double>::infinity()
                          : mean_d < 0.0 ? -std::numeric_limits<double>::infinity()
                                         : 0.0;
        }
        cmp.final_p = stats::normal_sf(cmp.final_z);
        out.push_back(std::move(cmp));
    }
    return out;
}

BoxDomain benchmark_domain() {
    return BoxDomain({0.45, 9.0, 5.0, 0.316, 0.5}, {1.8, 36.0, 20.0, 36.0, 2.0},
                     {false, false, false, true, true});
}

AnnealerConfig benchmark_annealer_config(long iterations, std::uint64_t seed) {
    AnnealerConfig cfg(benchmark_domain());
    cfg.acceptance = AcceptanceFunction::polynomial(1.0);
    cfg.cooling = CoolingSchedule::power(0.25, 10.0);
    cfg.precision = PrecisionSchedule::affine(0.0, 1.0, 20);
    cfg.kernel = ProposalKernel::gaussian_random_walk(default_step_scale(cfg.domain));
    cfg.iterations = iterations;
    cfg.record_every = std::max<long>(1, iterations / 100);
    cfg.seed = seed;
    return cfg;
}

BenchmarkStudy run_benchmark_study(const BenchmarkStudyConfig& cfg) {
    if (cfg.T < 1) throw std::invalid_argument("run_benchmark_study: T must be >= 1");
    if (cfg.reps < 1) throw std::invalid_argument("run_benchmark_study: reps must be >= 1");
    if (cfg.iterations < 1)
        throw std::invalid_argument("run_benchmark_study: iterations must be >= 1");

    const StateSpaceModel model = benchmark_model();
    const std::vector<double> truth = cfg.truth.to_vector();

    Rng data_rng = Rng::stream(cfg.seed, 0);
    SimulatedPath path = simulate(model, truth, cfg.T, data_rng);

    BenchmarkStudy study;
    study.observations = std::move(path.observations);
    const std::vector<double>& obs = study.observations;

    Objective objective;
    objective.noisy = [&model, &obs](std::span<const double> theta, long n_particles, Rng& rng) {
        try {
            return pf_loglik(model, theta, obs, n_particles, rng);
        } catch (const DegenerateWeights&) {
            // Deep in the unstable part of the box the state explodes and
            // every particle weight underflows; the likelihood there is
            // astronomically small, so report a floor value that loses
            // against any finite competitor instead of aborting the chain.
            return -1e300;
        }
    };

    const AnnealerConfig base = benchmark_annealer_config(cfg.iterations, cfg.seed);
    study.finals.assign(static_cast<std::size_t>(cfg.reps), {});
    parallel_reps(cfg.reps, cfg.threads, [&](long r) {
        ChainState chain(base, objective, Rng::stream(cfg.seed, 1 + static_cast<std::uint64_t>(r)));
        for (long n = 0; n < cfg.iterations; ++n) chain.step();
        study.finals[static_cast<std::size_t>(r)].assign(chain.state().begin(),
                                                         chain.state().end());
    });

    const std::size_t dim = base.domain.dim();
    study.mean_theta.assign(dim, 0.0);
    study.stderr_theta.assign(dim, 0.0);
    study.sorted_coords.assign(dim, std::vector<double>(static_cast<std::size_t>(cfg.reps)));
    for (std::size_t i = 0; i < dim; ++i) {
        std::vector<double>& col = study.sorted_coords[i];
        for (long r = 0; r < cfg.reps; ++r)
            col[static_cast<std::size_t>(r)] = study.finals[static_cast<std::size_t>(r)][i];
        const stats::MeanVar mv = stats::summarize(col);
        study.mean_theta[i] = mv.mean;
        study.stderr_theta[i] = mv.stderr_mean();
        std::sort(col.begin(), col.end());
    }
    return study;
}

CouplingGridStudy coupling_grid_study(const StateSpaceModel& model, std::span<const double> theta,
                                      std::span<const double> obs, long t_fixed,
                                      std::span<const long> n_values, std::span<const double> ratios,
                                      long reps, std::uint64_t seed, int threads) {
    if (t_fixed < 1 || static_cast<std::size_t>(t_fixed) > obs.size())
        throw std::invalid_argument("coupling_grid_study: t_fixed must be in [1, obs length]");
    if (n_values.empty()) throw std::invalid_argument("coupling_grid_study: empty size grid");
    if (ratios.empty()) throw std::invalid_argument("coupling_grid_study: empty ratio grid");
    for (long n : n_values)
        if (n < 1) throw std::invalid_argument("coupling_grid_study: sizes must be >= 1");
    for (double q : ratios)
        if (!(q >= 1.0)) throw std::invalid_argument("coupling_grid_study: ratios must be >= 1");
    if (reps < 2) throw std::invalid_argument("coupling_grid_study: reps must be >= 2");

    struct Cell {
        long n_small;
        long n_large;
    };
    std::vector<Cell> cells;
    for (long n : n_values)
        for (double q : ratios) {
            long np = std::lround(q * static_cast<double>(n));
            if (np < n) np = n;
            cells.push_back({n, np});
        }

    const long n_cells = static_cast<long>(cells.size());
    std::vector<std::vector<double>> vals(cells.size(),
                                          std::vector<double>(static_cast<std::size_t>(reps)));
    const auto obs_run = obs.first(static_cast<std::size_t>(t_fixed));

    parallel_reps(n_cells * reps, threads, [&](long idx) {
        const long g = idx / reps;
        const long r = idx % reps;
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(g) * static_cast<std::uint64_t>(reps) +
                                        static_cast<std::uint64_t>(r));
        const auto trace = run_coupled_filters(model, theta, obs_run,
                                               cells[static_cast<std::size_t>(g)].n_small,
                                               cells[static_cast<std::size_t>(g)].n_large, rng);
        vals[static_cast<std::size_t>(g)][static_cast<std::size_t>(r)] = trace.back().tv_bound;
    });

    CouplingGridStudy study;
    study.t_fixed = t_fixed;
    std::vector<double> xs, ys;
    for (std::size_t g = 0; g < cells.size(); ++g) {
        const stats::MeanVar mv = stats::summarize(vals[g]);
        CouplingGridPoint p;
        p.n_small = cells[g].n_small;
        p.n_large = cells[g].n_large;
        p.predictor = static_cast<double>(p.n_large - p.n_small) / static_cast<double>(p.n_small);
        p.mean_tv_bound = mv.mean;
        p.stderr_ = mv.stderr_mean();
        p.reps = reps;
        study.points.push_back(p);
        xs.push_back(p.predictor);
        ys.push_back(p.mean_tv_bound);
    }
    // a single-ratio grid has zero predictor spread; keep the points and
    // report an empty fit rather than aborting the whole study
    const bool degenerate =
        std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
    if (degenerate)
        study.fit = stats::OlsFit{};
    else
        study.fit = stats::ols_fit(xs, ys);
    return study;
}

PfCheckReport pf_check(const LinearGaussianModel& model, std::span<const double> obs,
                       std::span<const long> particle_counts, long n_seeds, std::uint64_t seed,
                       int threads) {
    if (obs.empty()) throw std::invalid_argument("pf_check: empty observation record");
    if (particle_counts.empty()) throw std::invalid_argument("pf_check: empty particle grid");
    for (long n : particle_counts)
        if (n < 1) throw std::invalid_argument("pf_check: particle counts must be >= 1");
    if (n_seeds < 2) throw std::invalid_argument("pf_check: n_seeds must be >= 2");

    const StateSpaceModel ssm = to_state_space(model);
    PfCheckReport report;
    report.kalman_loglik = kalman_loglik(model, obs);

    const long n_counts = static_cast<long>(particle_counts.size());
    std::vector<std::vector<double>> vals(particle_counts.size(),
                                          std::vector<double>(static_cast<std::size_t>(n_seeds)));
    parallel_reps(n_counts * n_seeds, threads, [&](long idx) {
        const long i = idx / n_seeds;
        const long s = idx % n_seeds;
        Rng rng = Rng::stream(seed, 1 + static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(
                                                                            n_seeds) +
                                        static_cast<std::uint64_t>(s));
        vals[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] =
            pf_loglik(ssm, {}, obs, particle_counts[static_cast<std::size_t>(i)], rng);
    });

    for (std::size_t i = 0; i < particle_counts.size(); ++i) {
        const stats::MeanVar mv = stats::summarize(vals[i]);
        PfCheckRow row;
        row.n_particles = particle_counts[i];
        row.mean_loglik = mv.mean;
        row.sd_loglik = std::sqrt(mv.var);
        double err = 0.0;
        for (double v : vals[i]) err += std::abs(v - report.kalman_loglik);
        row.mean_rel_err = err / (static_cast<double>(n_seeds) * std::abs(report.kalman_loglik));
        row.seeds = n_seeds;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace fsa
