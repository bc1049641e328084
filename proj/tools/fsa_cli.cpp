// Command-line front end: binds flat-file configs to the experiment drivers
// and writes CSV artifacts plus a metadata sidecar per run.  All randomness
// flows from --seed; output bytes depend only on (config, seed).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsa/config.hpp"
#include "fsa/coupling.hpp"
#include "fsa/csv.hpp"
#include "fsa/experiments.hpp"
#include "fsa/simd/kernels.hpp"

namespace {

using namespace fsa;

struct GlobalOpts {
    std::string config_path;
    std::string preset;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
    std::string kernels = "auto";
    bool desk_scale = false;
};

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

// --- config -> library objects -------------------------------------------

AcceptanceFunction acceptance_from(const Config& cfg) {
    const std::string kind = cfg.get_string("acceptance.kind", "classical");
    if (kind == "classical") return AcceptanceFunction::classical();
    if (kind == "polynomial")
        return AcceptanceFunction::polynomial(cfg.get_double("acceptance.tau", 1.0));
    throw ConfigError("config key 'acceptance.kind': expected classical or polynomial, got '" +
                      kind + "'");
}

CoolingSchedule cooling_from(const Config& cfg) {
    const std::string kind = cfg.get_string("cooling.kind", "logarithmic");
    if (kind == "power")
        return CoolingSchedule::power(cfg.get_double("cooling.alpha"),
                                      cfg.get_double("cooling.scale", 1.0));
    if (kind == "logarithmic")
        return CoolingSchedule::logarithmic(cfg.get_double("cooling.beta0", 1.0));
    throw ConfigError("config key 'cooling.kind': expected power or logarithmic, got '" + kind +
                      "'");
}

PrecisionSchedule precision_from(const Config& cfg) {
    const std::string kind = cfg.get_string("precision.kind", "constant");
    if (kind == "constant") return PrecisionSchedule::constant(cfg.get_long("precision.n", 1));
    if (kind == "affine")
        return PrecisionSchedule::affine(cfg.get_double("precision.n0", 0.0),
                                         cfg.get_double("precision.n1", 1.0),
                                         cfg.get_long("precision.floor", 1));
    if (kind == "power")
        return PrecisionSchedule::power(cfg.get_double("precision.n0", 0.0),
                                        cfg.get_double("precision.n1", 1.0),
                                        cfg.get_double("precision.delta"),
                                        cfg.get_long("precision.floor", 1));
    throw ConfigError("config key 'precision.kind': expected constant, affine or power, got '" +
                      kind + "'");
}

BoxDomain domain_from(const Config& cfg) {
    if (cfg.has("domain.lower") || cfg.has("domain.upper")) {
        const std::vector<double> lower = cfg.get_doubles("domain.lower");
        const std::vector<double> upper = cfg.get_doubles("domain.upper");
        if (cfg.has("domain.log_scale"))
            return BoxDomain(lower, upper, cfg.get_bools("domain.log_scale"));
        return BoxDomain(lower, upper);
    }
    return vee_domain();
}

ProposalKernel kernel_from(const Config& cfg, const BoxDomain& domain) {
    const std::string kind = cfg.get_string("kernel.kind", "uniform");
    if (kind == "uniform") return ProposalKernel::uniform_independence();
    if (kind == "gaussian") {
        // step_rule defaults to `fixed` when explicit scales are given,
        // `default` (side / log(n+1)) otherwise.
        const std::string rule =
            cfg.get_string("kernel.step_rule", cfg.has("kernel.scales") ? "fixed" : "default");
        if (rule == "default")
            return ProposalKernel::gaussian_random_walk(default_step_scale(domain));
        if (rule == "fixed")
            return ProposalKernel::gaussian_random_walk(fixed_step_scale(cfg.get_doubles("kernel.scales")));
        throw ConfigError("config key 'kernel.step_rule': expected default or fixed, got '" + rule +
                          "'");
    }
    throw ConfigError("config key 'kernel.kind': expected uniform or gaussian, got '" + kind + "'");
}

Objective objective_from(const Config& cfg) {
    const std::string name = cfg.get_string("objective", "vee");
    if (name == "vee") return vee_objective();
    if (name == "vee-noisy")
        return vee_noisy_objective(cfg.get_double("objective.noise_std", 1.0));
    throw ConfigError("config key 'objective': expected vee or vee-noisy, got '" + name + "'");
}

AnnealerConfig annealer_from(const Config& cfg, std::uint64_t seed) {
    AnnealerConfig acfg(domain_from(cfg));
    acfg.acceptance = acceptance_from(cfg);
    acfg.cooling = cooling_from(cfg);
    acfg.precision = precision_from(cfg);
    acfg.kernel = kernel_from(cfg, acfg.domain);
    acfg.iterations = cfg.get_long("run.iterations", 1000);
    acfg.record_every = cfg.get_long("run.record_every", 1);
    acfg.seed = seed;
    acfg.validate();
    return acfg;
}

const std::vector<std::string> kChainKeys = {
    "objective",      "objective.noise_std", "acceptance.kind", "acceptance.tau",
    "cooling.kind",   "cooling.alpha",       "cooling.scale",   "cooling.beta0",
    "precision.kind", "precision.n",         "precision.n0",    "precision.n1",
    "precision.delta", "precision.floor",    "kernel.kind",     "kernel.step_rule",
    "kernel.scales",  "domain.lower",        "domain.upper",    "domain.log_scale"};

std::vector<std::string> with_chain_keys(std::vector<std::string> extra) {
    extra.insert(extra.end(), kChainKeys.begin(), kChainKeys.end());
    return extra;
}

// --- subcommands -----------------------------------------------------------

int cmd_anneal(const GlobalOpts& g, const Config& cfg) {
    cfg.reject_unknown(with_chain_keys({"run.iterations", "run.record_every"}));
    const AnnealerConfig acfg = annealer_from(cfg, g.seed);
    const Objective objective = objective_from(cfg);

    const auto write_rows = [&](const std::vector<TrajectoryRecord>& records) {
        std::vector<std::string> header = {"n", "beta", "N", "psi", "accepted"};
        for (std::size_t i = 0; i < acfg.domain.dim(); ++i)
            header.push_back("theta_" + std::to_string(i));
        csv::Writer w(join(g.out_dir, "trajectory.csv"), header);
        for (const auto& rec : records) {
            w.field(rec.n).field(rec.beta);
            // N is empty for exact-objective runs: no approximation size exists.
            if (rec.n_particles < 0)
                w.field(std::string());
            else
                w.field(rec.n_particles);
            w.field(rec.psi).field(static_cast<long>(rec.accepted));
            for (double v : rec.theta) w.field(v);
            w.end_row();
        }
        w.close();
    };

    write_metadata_json(join(g.out_dir, "metadata.json"), "anneal", g.preset, g.seed, cfg);
    try {
        const Trajectory traj = run(acfg, objective);
        write_rows(traj.records);
    } catch (const RunAborted& e) {
        write_rows(e.partial.records);
        std::cerr << "anneal: aborted at iteration " << e.failed_at << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}

void write_curve_rows(csv::Writer& w, const ExceedanceCurve& curve) {
    for (const auto& p : curve.points) {
        w.field(curve.epsilon).field(p.n).field(p.p_hat).field(p.stderr_).field(p.reps);
        w.end_row();
    }
}

void write_fit_row(csv::Writer& w, const std::string& scheme, double epsilon, const RateFit& fit) {
    w.field(scheme)
        .field(epsilon)
        .field(fit.slope)
        .field(fit.intercept)
        .field(fit.r_squared)
        .field(fit.n_min)
        .field(fit.n_max)
        .field(fit.points_used);
    w.end_row();
}

const std::vector<std::string> kCurveHeader = {"epsilon", "n", "p_hat", "stderr", "reps"};
const std::vector<std::string> kFitHeader = {"scheme",    "epsilon", "slope",      "intercept",
                                             "r_squared", "n_min",   "n_max",      "points_used"};

int cmd_rate(const GlobalOpts& g, const Config& cfg) {
    cfg.reject_unknown(with_chain_keys({"classical.beta0", "rate.epsilons", "rate.checkpoints",
                                        "rate.reps", "rate.fit_n_min", "rate.fit_n_max",
                                        "rate.compare", "rate.self_test", "rate.psi_max"}));
    write_metadata_json(join(g.out_dir, "metadata.json"), "rate", g.preset, g.seed, cfg);

    const std::vector<long> checkpoints = cfg.has("rate.checkpoints")
                                              ? cfg.get_longs("rate.checkpoints")
                                              : std::vector<long>{100, 1000, 10000, 100000};
    const long fit_n_min = cfg.get_long("rate.fit_n_min", checkpoints.front());
    const long fit_n_max = cfg.get_long("rate.fit_n_max", checkpoints.back());

    if (cfg.get_bool("rate.self_test", false)) {
        // Constructed curve p_hat = n^{-1/3}; the fit must give the slope back.
        ExceedanceCurve curve;
        curve.epsilon = 0.0;
        for (long n : checkpoints)
            curve.points.push_back({n, std::pow(static_cast<double>(n), -1.0 / 3.0), 0.0, 0});
        csv::Writer cw(join(g.out_dir, "curve.csv"), kCurveHeader);
        write_curve_rows(cw, curve);
        cw.close();
        csv::Writer fw(join(g.out_dir, "fit.csv"), kFitHeader);
        write_fit_row(fw, "self-test", 0.0, fit_loglog_slope(curve, fit_n_min, fit_n_max));
        fw.close();
        return 0;
    }

    const long reps = cfg.get_long("rate.reps", 0);
    if (reps < 100) throw ConfigError("config key 'rate.reps': must be >= 100");
    const std::vector<double> epsilons = cfg.get_doubles("rate.epsilons");
    const double psi_max = cfg.get_double("rate.psi_max", 0.0);
    const Objective objective = objective_from(cfg);

    if (!cfg.get_bool("rate.compare", false)) {
        const AnnealerConfig acfg = annealer_from(cfg, g.seed);
        const auto curves = exceedance_curves(acfg, objective, psi_max, epsilons, checkpoints,
                                              reps, g.seed, g.threads);
        csv::Writer cw(join(g.out_dir, "curve.csv"), kCurveHeader);
        for (const auto& curve : curves) write_curve_rows(cw, curve);
        cw.close();
        csv::Writer fw(join(g.out_dir, "fit.csv"), kFitHeader);
        for (const auto& curve : curves)
            write_fit_row(fw, "single", curve.epsilon, fit_loglog_slope(curve, fit_n_min, fit_n_max));
        fw.close();
        return 0;
    }

    const AnnealerConfig fast_cfg = annealer_from(cfg, g.seed);
    AnnealerConfig classical_cfg = fast_cfg;
    classical_cfg.acceptance = AcceptanceFunction::classical();
    classical_cfg.cooling = CoolingSchedule::logarithmic(cfg.get_double("classical.beta0", 1.0));

    const auto results = compare_classical_fast(fast_cfg, classical_cfg, objective, psi_max,
                                                epsilons, checkpoints, fit_n_min, fit_n_max, reps,
                                                g.seed, g.threads);

    csv::Writer cwf(join(g.out_dir, "curve_fast.csv"), kCurveHeader);
    csv::Writer cwc(join(g.out_dir, "curve_classical.csv"), kCurveHeader);
    csv::Writer fw(join(g.out_dir, "fit.csv"), kFitHeader);
    csv::Writer cmp(join(g.out_dir, "comparison.csv"),
                    {"epsilon", "final_n", "fast_p_hat", "classical_p_hat", "z", "p_value"});
    for (const auto& res : results) {
        write_curve_rows(cwf, res.fast);
        write_curve_rows(cwc, res.classical);
        write_fit_row(fw, "fast", res.epsilon, res.fast_fit);
        write_fit_row(fw, "classical", res.epsilon, res.classical_fit);
        cmp.field(res.epsilon)
            .field(res.fast.points.back().n)
            .field(res.fast.points.back().p_hat)
            .field(res.classical.points.back().p_hat)
            .field(res.final_z)
            .field(res.final_p);
        cmp.end_row();
    }
    cwf.close();
    cwc.close();
    fw.close();
    cmp.close();
    return 0;
}

int cmd_benchmark(const GlobalOpts& g, const Config& cfg) {
    cfg.reject_unknown({"benchmark.T", "benchmark.reps", "benchmark.iterations", "benchmark.truth"});
    write_metadata_json(join(g.out_dir, "metadata.json"), "benchmark", g.preset, g.seed, cfg);

    BenchmarkStudyConfig bcfg;
    if (cfg.has("benchmark.truth")) {
        const std::vector<double> truth = cfg.get_doubles("benchmark.truth");
        if (truth.size() != 5)
            throw ConfigError("config key 'benchmark.truth': expected 5 values");
        bcfg.truth = BenchmarkParams::from(truth);
    }
    bcfg.T = cfg.get_long("benchmark.T", bcfg.T);
    bcfg.reps = cfg.get_long("benchmark.reps", bcfg.reps);
    bcfg.iterations = cfg.get_long("benchmark.iterations", bcfg.iterations);
    bcfg.seed = g.seed;
    bcfg.threads = g.threads;

    const BenchmarkStudy study = run_benchmark_study(bcfg);
    const std::vector<std::string> names = {"a", "b", "gamma", "sigma_v", "sigma_w"};

    csv::Writer sw(join(g.out_dir, "study.csv"), {"rep", "a", "b", "gamma", "sigma_v", "sigma_w"});
    for (std::size_t r = 0; r < study.finals.size(); ++r) {
        sw.field(static_cast<long>(r));
        for (double v : study.finals[r]) sw.field(v);
        sw.end_row();
    }
    sw.close();

    csv::Writer mw(join(g.out_dir, "summary.csv"), {"coordinate", "mean", "stderr"});
    for (std::size_t i = 0; i < names.size(); ++i) {
        mw.field(names[i]).field(study.mean_theta[i]).field(study.stderr_theta[i]);
        mw.end_row();
    }
    mw.close();

    // Sorted estimates with normal plotting positions, one block per
    // coordinate.
    csv::Writer nw(join(g.out_dir, "normplot.csv"),
                   {"coordinate", "rank", "value", "normal_quantile"});
    const double n = static_cast<double>(study.finals.size());
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t r = 0; r < study.sorted_coords[i].size(); ++r) {
            nw.field(names[i])
                .field(static_cast<long>(r + 1))
                .field(study.sorted_coords[i][r])
                .field(stats::normal_quantile((static_cast<double>(r) + 0.5) / n));
            nw.end_row();
        }
    nw.close();

    csv::Writer ow(join(g.out_dir, "observations.csv"), {"t", "y"});
    for (std::size_t t = 0; t < study.observations.size(); ++t) {
        ow.field(static_cast<long>(t + 1)).field(study.observations[t]);
        ow.end_row();
    }
    ow.close();
    return 0;
}

int cmd_couple(const GlobalOpts& g, const Config& cfg) {
    cfg.reject_unknown({"couple.mode", "couple.t", "couple.n_values", "couple.ratios",
                        "couple.reps", "couple.n_small", "couple.n_large", "couple.beta",
                        "couple.noise_std", "acceptance.kind", "acceptance.tau"});
    write_metadata_json(join(g.out_dir, "metadata.json"), "couple", g.preset, g.seed, cfg);

    const std::string mode = cfg.get_string("couple.mode", "grid");

    if (mode == "kernel") {
        const double beta = cfg.get_double("couple.beta", 1.0);
        const long n_small = cfg.get_long("couple.n_small", 100);
        const long n_large = cfg.get_long("couple.n_large", 200);
        const long reps = cfg.get_long("couple.reps", 1000);
        const double noise_std = cfg.get_double("couple.noise_std", 1.0);
        const AcceptanceFunction fn = acceptance_from(cfg);

        const BoxDomain domain = vee_domain();
        const auto mu = [&domain](Rng& rng) { return sample_uniform(domain, rng); };
        const CoupledObjective objective =
            coupled_sample_mean([noise_std](std::span<const double> x, Rng& rng) {
                return -std::abs(x[0]) + noise_std * rng.normal();
            });
        Rng rng = Rng::stream(g.seed, 0);
        const TvEstimate est =
            estimate_kernel_tv(mu, ProposalKernel::uniform_independence(), domain, fn, beta,
                               objective, n_small, n_large, reps, rng);
        csv::Writer w(join(g.out_dir, "kernel_tv.csv"),
                      {"beta", "n_small", "n_large", "reps", "disagree_rate", "stderr"});
        w.field(beta).field(n_small).field(n_large).field(est.reps).field(est.rate).field(
            est.stderr_);
        w.end_row();
        w.close();
        return 0;
    }

    const StateSpaceModel model = compact_coupling_model();
    const long horizon = cfg.get_long("couple.t", 10);
    if (horizon < 1) throw ConfigError("config key 'couple.t': must be >= 1");
    Rng data_rng = Rng::stream(g.seed, 0);
    const SimulatedPath path = simulate(model, {}, horizon, data_rng);

    if (mode == "trace") {
        const long n_small = cfg.get_long("couple.n_small", 100);
        const long n_large = cfg.get_long("couple.n_large", n_small);
        Rng rng = Rng::stream(g.seed, 1);
        const auto trace =
            run_coupled_filters(model, {}, path.observations, n_small, n_large, rng);
        csv::Writer w(join(g.out_dir, "coupling.csv"),
                      {"t", "N", "Nprime", "seed", "shared_count", "tv_bound"});
        const std::string seed_str = std::to_string(g.seed);
        for (const auto& row : trace) {
            w.field(row.t).field(n_small).field(n_large).field(seed_str);
            w.field(row.shared_count).field(row.tv_bound);
            w.end_row();
        }
        w.close();
        return 0;
    }

    if (mode != "grid")
        throw ConfigError("config key 'couple.mode': expected grid, trace or kernel, got '" +
                          mode + "'");

    const std::vector<long> n_values = cfg.has("couple.n_values")
                                           ? cfg.get_longs("couple.n_values")
                                           : std::vector<long>{100, 200, 400};
    const std::vector<double> ratios = cfg.has("couple.ratios")
                                           ? cfg.get_doubles("couple.ratios")
                                           : std::vector<double>{1.1, 1.25, 1.5};
    const long reps = cfg.get_long("couple.reps", 200);

    const CouplingGridStudy study =
        coupling_grid_study(model, {}, path.observations, horizon, n_values, ratios, reps,
                            derive_seed(g.seed, 1), g.threads);

    csv::Writer w(join(g.out_dir, "coupling.csv"),
                  {"n_small", "n_large", "predictor", "mean_tv_bound", "stderr", "reps"});
    for (const auto& p : study.points) {
        w.field(p.n_small)
            .field(p.n_large)
            .field(p.predictor)
            .field(p.mean_tv_bound)
            .field(p.stderr_)
            .field(p.reps);
        w.end_row();
    }
    w.close();

    csv::Writer fw(join(g.out_dir, "coupling_fit.csv"),
                   {"slope", "intercept", "r_squared", "points"});
    fw.field(study.fit.slope)
        .field(study.fit.intercept)
        .field(study.fit.r_squared)
        .field(static_cast<long>(study.fit.n));
    fw.end_row();
    fw.close();
    return 0;
}

int cmd_pf_check(const GlobalOpts& g, const Config& cfg) {
    cfg.reject_unknown({"pf.phi", "pf.trans_std", "pf.coeff", "pf.obs_std", "pf.init_mean",
                        "pf.init_std", "pf.T", "pf.particles", "pf.seeds"});
    write_metadata_json(join(g.out_dir, "metadata.json"), "pf-check", g.preset, g.seed, cfg);

    const LinearGaussianModel model = LinearGaussianModel::make(
        cfg.get_double("pf.phi", 0.8), cfg.get_double("pf.trans_std", 1.0),
        cfg.get_double("pf.coeff", 1.0), cfg.get_double("pf.obs_std", 0.5),
        cfg.get_double("pf.init_mean", 0.0), cfg.get_double("pf.init_std", 1.0));
    const long horizon = cfg.get_long("pf.T", 50);
    const std::vector<long> particles = cfg.has("pf.particles")
                                            ? cfg.get_longs("pf.particles")
                                            : std::vector<long>{100, 1000, 10000};
    const long seeds = cfg.get_long("pf.seeds", 20);

    const StateSpaceModel ssm = to_state_space(model);
    Rng data_rng = Rng::stream(g.seed, 0);
    const SimulatedPath path = simulate(ssm, {}, horizon, data_rng);

    const PfCheckReport report =
        pf_check(model, path.observations, particles, seeds, g.seed, g.threads);

    csv::Writer w(join(g.out_dir, "pf_check.csv"),
                  {"n_particles", "mean_loglik", "sd_loglik", "mean_rel_err", "seeds",
                   "kalman_loglik"});
    for (const auto& row : report.rows) {
        w.field(row.n_particles)
            .field(row.mean_loglik)
            .field(row.sd_loglik)
            .field(row.mean_rel_err)
            .field(row.seeds)
            .field(report.kalman_loglik);
        w.end_row();
    }
    w.close();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulated annealing and particle filter experiment toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "config file (key = value lines, # comments)");
    app.add_option("--preset", g.preset, "named preset configuration");
    app.add_option("--set", g.overrides, "config override key=value (repeatable)")
        ->take_all()
        ->expected(0, -1);
    app.add_option("--seed", g.seed, "root seed; all randomness derives from it")->required();
    app.add_option("--threads", g.threads, "max concurrent replications")
        ->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "output directory (created if missing)");
    app.add_option("--kernels", g.kernels, "arithmetic kernel variant")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    CLI::App* anneal = app.add_subcommand("anneal", "single annealing run, trajectory CSV");
    CLI::App* rate = app.add_subcommand("rate", "exceedance curves and log-log rate fits");
    CLI::App* benchmark =
        app.add_subcommand("benchmark", "parameter estimation study on the nonlinear benchmark");
    benchmark->add_flag("--desk-scale", g.desk_scale,
                        "shrink to T=100, reps=20, iterations=2000");
    CLI::App* couple =
        app.add_subcommand("couple", "coupled filter traces / grids and kernel disagreement rates");
    CLI::App* pf_check_cmd =
        app.add_subcommand("pf-check", "particle filter against the exact Kalman likelihood");
    // global flags may follow the subcommand name
    for (CLI::App* sub : {anneal, rate, benchmark, couple, pf_check_cmd}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (!fsa::simd::set_active(g.kernels)) {
        std::cerr << "kernel variant '" << g.kernels << "' is not available on this machine\n";
        return 2;
    }

    try {
        Config cfg;
        if (!g.preset.empty()) cfg = Config::preset(g.preset);
        if (!g.config_path.empty()) cfg.merge_from(Config::from_file(g.config_path));
        if (benchmark->parsed() && g.desk_scale) {
            cfg.set("benchmark.T", "100");
            cfg.set("benchmark.reps", "20");
            cfg.set("benchmark.iterations", "2000");
        }
        for (const auto& o : g.overrides) cfg.apply_override(o);

        std::filesystem::create_directories(g.out_dir);

        if (anneal->parsed()) return cmd_anneal(g, cfg);
        if (rate->parsed()) return cmd_rate(g, cfg);
        if (benchmark->parsed()) return cmd_benchmark(g, cfg);
        if (couple->parsed()) return cmd_couple(g, cfg);
        if (pf_check_cmd->parsed()) return cmd_pf_check(g, cfg);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
