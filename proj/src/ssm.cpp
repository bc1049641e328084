#include "fsa/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsa/simd/elementwise.hpp"
#include "fsa/simd/kernels.hpp"

namespace fsa {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

struct PfWorkspace {
    std::vector<double> logw;
    std::vector<double> w;
    std::vector<double> cdf;
    std::vector<double> ancestors;
    std::vector<double> noise;

    void resize(std::size_t n) {
        logw.resize(n);
        w.resize(n);
        cdf.resize(n);
        ancestors.resize(n);
        noise.resize(n);
    }
};

void compute_logw(const StateSpaceModel& model, std::span<const double> theta,
                  const ParticleCloud& cloud, double y, std::span<double> logw) {
    if (model.batch_log_obs) {
        model.batch_log_obs(theta, y, cloud.positions, logw, cloud.t);
        return;
    }
    for (std::size_t i = 0; i < cloud.positions.size(); ++i)
        logw[i] = model.log_obs_density(theta, y, cloud.positions[i], cloud.t);
}

// Weighting + log-increment into workspace buffers; throws on degeneracy.
struct WeightCore {
    double max_logw;
    double sum;
    double log_increment;
};

WeightCore weigh(const StateSpaceModel& model, std::span<const double> theta,
                 const ParticleCloud& cloud, double y, std::span<double> logw, std::span<double> w) {
    compute_logw(model, theta, cloud, y, logw);
    const auto& k = simd::active();
    const double m = k.reduce_max(logw.data(), logw.size());
    if (!(m > -std::numeric_limits<double>::infinity()))
        throw DegenerateWeights(cloud.t, std::vector<double>(theta.begin(), theta.end()));
    k.exp_shifted(logw.data(), m, w.data(), logw.size());
    const double sum = k.reduce_sum(w.data(), w.size());
    // sum >= 1 whenever every weight is a number (the max shifts to exp(0));
    // anything else means a NaN slipped through an observation density.
    if (!(sum > 0.0))
        throw DegenerateWeights(cloud.t, std::vector<double>(theta.begin(), theta.end()));
    const double n = static_cast<double>(w.size());
    return WeightCore{m, sum, m + std::log(sum / n)};
}

// Multinomial ancestor index from one uniform: first j with cdf[j] > u * sum.
std::size_t pick_index(std::span<const double> cdf, double target) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
}

double pf_step_impl(const StateSpaceModel& model, std::span<const double> theta,
                    ParticleCloud& cloud, double y, Rng& rng, PfWorkspace& ws) {
    const std::size_t n = cloud.positions.size();
    ws.resize(n);
    const WeightCore wc = weigh(model, theta, cloud, y, ws.logw, ws.w);

    ws.cdf[0] = ws.w[0];
    for (std::size_t i = 1; i < n; ++i) ws.cdf[i] = ws.cdf[i - 1] + ws.w[i];

    // Resampling uniforms first (slot order), then mutation draws.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = pick_index(ws.cdf, rng.uniform01() * wc.sum);
        ws.ancestors[i] = cloud.positions[j];
    }

    const long t_next = cloud.t + 1;
    if (model.batch_transition) {
        for (std::size_t i = 0; i < n; ++i) ws.noise[i] = rng.normal();
        model.batch_transition(theta, ws.ancestors, ws.noise, cloud.positions, t_next);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            cloud.positions[i] = model.transition_sampler(theta, ws.ancestors[i], t_next, rng);
    }
    cloud.t = t_next;
    return wc.log_increment;
}

}  // namespace

DegenerateWeights::DegenerateWeights(long t_, std::vector<double> theta_)
    : std::runtime_error("particle filter: all weights degenerate at t = " + std::to_string(t_)),
      t(t_),
      theta(std::move(theta_)) {}

WeightSummary pf_weights(const StateSpaceModel& model, std::span<const double> theta,
                         const ParticleCloud& cloud, double y) {
    if (cloud.positions.empty()) throw std::invalid_argument("pf_weights: empty cloud");
    WeightSummary out;
    out.shifted.resize(cloud.positions.size());
    std::vector<double> logw(cloud.positions.size());
    const WeightCore wc = weigh(model, theta, cloud, y, logw, out.shifted);
    out.max_logw = wc.max_logw;
    out.sum = wc.sum;
    out.log_increment = wc.log_increment;
    return out;
}

ParticleCloud pf_init(const StateSpaceModel& model, std::span<const double> theta, long n_particles,
                      Rng& rng) {
    if (n_particles < 1) throw std::invalid_argument("pf_init: need at least one particle");
    ParticleCloud cloud;
    cloud.t = 1;
    cloud.positions.resize(static_cast<std::size_t>(n_particles));
    for (auto& p : cloud.positions) p = model.init_sampler(theta, rng);
    return cloud;
}

double pf_step(const StateSpaceModel& model, std::span<const double> theta, ParticleCloud& cloud,
               double y, Rng& rng) {
    if (cloud.positions.empty()) throw std::invalid_argument("pf_step: empty cloud");
    PfWorkspace ws;
    return pf_step_impl(model, theta, cloud, y, rng, ws);
}

double pf_loglik(const StateSpaceModel& model, std::span<const double> theta,
                 std::span<const double> obs, long n_particles, Rng& rng) {
    ParticleCloud cloud = pf_init(model, theta, n_particles, rng);
    PfWorkspace ws;
    double ll = 0.0;
    for (double y : obs) ll += pf_step_impl(model, theta, cloud, y, rng, ws);
    return ll;
}

SimulatedPath simulate(const StateSpaceModel& model, std::span<const double> theta, long T,
                       Rng& rng) {
    if (T < 1) throw std::invalid_argument("simulate: T must be >= 1");
    SimulatedPath path;
    path.states.resize(static_cast<std::size_t>(T));
    path.observations.resize(static_cast<std::size_t>(T));
    double s = model.init_sampler(theta, rng);
    path.states[0] = s;
    path.observations[0] = model.obs_sampler(theta, s, 1, rng);
    for (long t = 2; t <= T; ++t) {
        s = model.transition_sampler(theta, s, t, rng);
        path.states[static_cast<std::size_t>(t - 1)] = s;
        path.observations[static_cast<std::size_t>(t - 1)] = model.obs_sampler(theta, s, t, rng);
    }
    return path;
}

BenchmarkParams::BenchmarkParams(double a_, double b_, double gamma_, double sigma_v_, double sigma_w_)
    : a(a_), b(b_), gamma(gamma_), sigma_v(sigma_v_), sigma_w(sigma_w_) {
    if (!(sigma_v >= 0.0) || !(sigma_w > 0.0))
        throw std::invalid_argument("BenchmarkParams: need sigma_v >= 0 and sigma_w > 0");
}

BenchmarkParams BenchmarkParams::from(std::span<const double> theta) {
    if (theta.size() != 5) throw std::invalid_argument("BenchmarkParams: theta must have 5 entries");
    return BenchmarkParams(theta[0], theta[1], theta[2], theta[3], theta[4]);
}

namespace {

inline double benchmark_drift(double gamma, long t) {
    return gamma * std::cos(1.2 * static_cast<double>(t));
}

}  // namespace

StateSpaceModel benchmark_model() {
    StateSpaceModel m;
    m.init_sampler = [](std::span<const double> th, Rng& rng) {
        BenchmarkParams::from(th);  // validate once per filter pass
        const double s0 = th[3] * rng.normal();
        return simd::detail::drift_transition_elem(s0, rng.normal(), th[0], th[1],
                                                   benchmark_drift(th[2], 1), th[3]);
    };
    m.transition_sampler = [](std::span<const double> th, double s, long t, Rng& rng) {
        return simd::detail::drift_transition_elem(s, rng.normal(), th[0], th[1],
                                                   benchmark_drift(th[2], t), th[3]);
    };
    m.log_obs_density = [](std::span<const double> th, double y, double s, long) {
        const double inv_two_var = 1.0 / (2.0 * th[4] * th[4]);
        const double log_norm = -kLogSqrt2Pi - std::log(th[4]);
        return simd::detail::quadratic_obs_logw_elem(s, y, 0.05, inv_two_var, log_norm);
    };
    m.obs_sampler = [](std::span<const double> th, double s, long, Rng& rng) {
        return s * s * 0.05 + th[4] * rng.normal();
    };
    m.batch_transition = [](std::span<const double> th, std::span<const double> s,
                            std::span<const double> noise, std::span<double> out, long t) {
        simd::active().drift_transition(s.data(), noise.data(), out.data(), s.size(), th[0], th[1],
                                        benchmark_drift(th[2], t), th[3]);
    };
    m.batch_log_obs = [](std::span<const double> th, double y, std::span<const double> s,
                         std::span<double> logw, long) {
        const double inv_two_var = 1.0 / (2.0 * th[4] * th[4]);
        const double log_norm = -kLogSqrt2Pi - std::log(th[4]);
        simd::active().quadratic_obs_logw(s.data(), logw.data(), s.size(), y, 0.05, inv_two_var,
                                          log_norm);
    };
    return m;
}

LinearGaussianModel LinearGaussianModel::make(double phi, double trans_std, double coeff,
                                              double obs_std, double init_mean, double init_std) {
    if (!(trans_std >= 0.0)) throw std::invalid_argument("LinearGaussianModel: trans_std must be >= 0");
    if (!(obs_std > 0.0)) throw std::invalid_argument("LinearGaussianModel: obs_std must be > 0");
    if (!(init_std >= 0.0)) throw std::invalid_argument("LinearGaussianModel: init_std must be >= 0");
    return LinearGaussianModel{phi, trans_std, coeff, obs_std, init_mean, init_std};
}

StateSpaceModel to_state_space(const LinearGaussianModel& lg) {
    StateSpaceModel m;
    m.init_sampler = [lg](std::span<const double>, Rng& rng) {
        return lg.init_mean + lg.init_std * rng.normal();
    };
    m.transition_sampler = [lg](std::span<const double>, double s, long, Rng& rng) {
        // b = 0 zeroes the saturating term exactly, mirroring the batch path.
        return simd::detail::drift_transition_elem(s, rng.normal(), lg.phi, 0.0, 0.0, lg.trans_std);
    };
    m.log_obs_density = [lg](std::span<const double>, double y, double s, long) {
        const double inv_two_var = 1.0 / (2.0 * lg.obs_std * lg.obs_std);
        const double log_norm = -kLogSqrt2Pi - std::log(lg.obs_std);
        return simd::detail::linear_obs_logw_elem(s, y, lg.coeff, inv_two_var, log_norm);
    };
    m.obs_sampler = [lg](std::span<const double>, double s, long, Rng& rng) {
        return lg.coeff * s + lg.obs_std * rng.normal();
    };
    m.batch_transition = [lg](std::span<const double>, std::span<const double> s,
                              std::span<const double> noise, std::span<double> out, long) {
        simd::active().drift_transition(s.data(), noise.data(), out.data(), s.size(), lg.phi, 0.0,
                                        0.0, lg.trans_std);
    };
    m.batch_log_obs = [lg](std::span<const double>, double y, std::span<const double> s,
                           std::span<double> logw, long) {
        const double inv_two_var = 1.0 / (2.0 * lg.obs_std * lg.obs_std);
        const double log_norm = -kLogSqrt2Pi - std::log(lg.obs_std);
        simd::active().linear_obs_logw(s.data(), logw.data(), s.size(), y, lg.coeff, inv_two_var,
                                       log_norm);
    };
    return m;
}

double kalman_loglik(const LinearGaussianModel& lg, std::span<const double> obs) {
    double m_pred = lg.init_mean;
    double p_pred = lg.init_std * lg.init_std;
    double ll = 0.0;
    for (double y : obs) {
        const double s = lg.coeff * lg.coeff * p_pred + lg.obs_std * lg.obs_std;
        const double resid = y - lg.coeff * m_pred;
        ll += -0.5 * (std::log(2.0 * 3.14159265358979323846 * s) + resid * resid / s);
        const double gain = p_pred * lg.coeff / s;
        const double m_filt = m_pred + gain * resid;
        const double p_filt = (1.0 - gain * lg.coeff) * p_pred;
        m_pred = lg.phi * m_filt;
        p_pred = lg.phi * lg.phi * p_filt + lg.trans_std * lg.trans_std;
    }
    return ll;
}

namespace {

constexpr double kCompactAr = 0.7;
constexpr double kCompactTransStd = 0.4;
constexpr double kCompactObsStd = 0.3;

double truncated_normal_pdf(double y, double s) {
    if (y < -1.0 || y > 1.0) return 0.0;
    const double z = (y - s) / kCompactObsStd;
    const double num = std::exp(-0.5 * z * z) / (kCompactObsStd * 2.50662827463100050242);
    const double hi = 0.5 * std::erfc(-(1.0 - s) / (kCompactObsStd * 1.41421356237309504880));
    const double lo = 0.5 * std::erfc(-(-1.0 - s) / (kCompactObsStd * 1.41421356237309504880));
    return num / (hi - lo);
}

}  // namespace

StateSpaceModel compact_coupling_model() {
    StateSpaceModel m;
    m.init_sampler = [](std::span<const double>, Rng& rng) { return rng.uniform(-1.0, 1.0); };
    m.transition_sampler = [](std::span<const double>, double s, long, Rng& rng) {
        return std::clamp(kCompactAr * s + kCompactTransStd * rng.normal(), -1.0, 1.0);
    };
    m.log_obs_density = [](std::span<const double>, double y, double s, long) {
        if (y < -1.0 || y > 1.0) return -std::numeric_limits<double>::infinity();
        return std::log(0.25 + 0.5 * truncated_normal_pdf(y, s));
    };
    m.obs_sampler = [](std::span<const double>, double s, long, Rng& rng) {
        if (rng.uniform01() < 0.5) return rng.uniform(-1.0, 1.0);
        double y = s + kCompactObsStd * rng.normal();
        while (y < -1.0 || y > 1.0) y = s + kCompactObsStd * rng.normal();
        return y;
    };
    return m;
}

}  // namespace fsa
