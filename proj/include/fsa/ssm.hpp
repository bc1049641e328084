#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fsa/rng.hpp"

namespace fsa {

// All particle weights vanished (every observation density underflowed or an
// evaluation produced NaN); carries the time index and parameter vector.
struct DegenerateWeights : std::runtime_error {
    DegenerateWeights(long t_, std::vector<double> theta_);

    long t;
    std::vector<double> theta;
};

// Scalar-state hidden Markov model driven by a parameter vector theta.
//
// Conventions: time indices start at 1; init_sampler draws from the law of
// S_1 (the pre-observation state the first observation is emitted from);
// transition_sampler(theta, s_prev, t, rng) draws S_t given S_{t-1} = s_prev.
struct StateSpaceModel {
    std::function<double(std::span<const double>, Rng&)> init_sampler;
    std::function<double(std::span<const double>, double, long, Rng&)> transition_sampler;
    // log r_theta(y | s) at time t
    std::function<double(std::span<const double>, double, double, long)> log_obs_density;
    // draw Y_t | S_t = s; used by simulate(), never by the filter
    std::function<double(std::span<const double>, double, long, Rng&)> obs_sampler;

    // Optional batched fast paths.  batch_transition consumes exactly one
    // standard normal per particle (passed in `noise`); both must reproduce
    // the scalar functions bit for bit.
    std::function<void(std::span<const double>, std::span<const double>, std::span<const double>,
                       std::span<double>, long)>
        batch_transition;  // (theta, s, noise, out, t)
    std::function<void(std::span<const double>, double, std::span<const double>, std::span<double>,
                       long)>
        batch_log_obs;  // (theta, y, s, logw, t)
};

// Particles approximating the predictive law of S_t given y_{1:t-1}.
struct ParticleCloud {
    long t = 1;
    std::vector<double> positions;

    long size() const { return static_cast<long>(positions.size()); }
};

// Shifted particle weights for one observation: shifted[i] =
// exp(logw[i] - max logw), their sum, and the log-likelihood increment
// log((1/N) sum_i r(y|xi_i)) evaluated before resampling.
struct WeightSummary {
    std::vector<double> shifted;
    double max_logw = 0.0;
    double sum = 0.0;
    double log_increment = 0.0;
};

WeightSummary pf_weights(const StateSpaceModel& model, std::span<const double> theta,
                         const ParticleCloud& cloud, double y);

ParticleCloud pf_init(const StateSpaceModel& model, std::span<const double> theta, long n_particles,
                      Rng& rng);

// One bootstrap step: weight by r(y_t | .), resample multinomially (one
// independent uniform per slot), mutate through the transition kernel.
// Advances the cloud from t|t-1 to t+1|t and returns the log-likelihood
// increment.  Rng order: resampling uniforms for slots 0..N-1, then mutation
// draws in slot order.
double pf_step(const StateSpaceModel& model, std::span<const double> theta, ParticleCloud& cloud,
               double y, Rng& rng);

// Log-likelihood estimate from a fresh N-particle filter pass over obs.
double pf_loglik(const StateSpaceModel& model, std::span<const double> theta,
                 std::span<const double> obs, long n_particles, Rng& rng);

struct SimulatedPath {
    std::vector<double> states;        // S_1 .. S_T
    std::vector<double> observations;  // Y_1 .. Y_T
};

SimulatedPath simulate(const StateSpaceModel& model, std::span<const double> theta, long T, Rng& rng);

// Benchmark system: S_t = a S_{t-1} + b S_{t-1}/(1 + S_{t-1}^2)
//                        + gamma cos(1.2 t) + sigma_v V_t,
//                   Y_t = S_t^2 / 20 + sigma_w W_t,
// with S_0 ~ N(0, sigma_v^2) folded into the draw of S_1.
// theta = (a, b, gamma, sigma_v, sigma_w).
struct BenchmarkParams {
    double a = 0.0;
    double b = 0.0;
    double gamma = 0.0;
    double sigma_v = 1.0;
    double sigma_w = 1.0;

    BenchmarkParams() = default;
    BenchmarkParams(double a_, double b_, double gamma_, double sigma_v_, double sigma_w_);
    static BenchmarkParams from(std::span<const double> theta);

    std::vector<double> to_vector() const { return {a, b, gamma, sigma_v, sigma_w}; }
};

StateSpaceModel benchmark_model();

struct LinearGaussianModel {
    double phi = 0.0;       // transition coefficient
    double trans_std = 1.0; // transition noise std
    double coeff = 1.0;     // observation coefficient
    double obs_std = 1.0;   // observation noise std
    double init_mean = 0.0; // mean of S_1
    double init_std = 1.0;  // std of S_1

    static LinearGaussianModel make(double phi, double trans_std, double coeff, double obs_std,
                                    double init_mean, double init_std);
};

StateSpaceModel to_state_space(const LinearGaussianModel& m);

// Exact log-likelihood of the linear-Gaussian model (Kalman recursion); the
// reference the particle filter is validated against.
double kalman_loglik(const LinearGaussianModel& m, std::span<const double> obs);

// Compact-state model whose observation density is bounded above and below
// (0.25 <= r(y|s) <= 1.6 for all s, y in [-1,1]): state clamped to [-1,1],
// observation a half/half mixture of U(-1,1) and N(s, 0.3^2) truncated to
// [-1,1].  Used by the coupled-filter contraction experiments, which need
// those bounds.  theta is ignored (pass {}).
StateSpaceModel compact_coupling_model();

}  // namespace fsa
