#include "fsa/annealer.hpp"

#include <algorithm>
#include <utility>

namespace fsa {

namespace {

struct StepCore {
    bool accepted;
    double psi_x;
    double psi_z;
};

// Shared one-step implementation; z receives the proposal.  The step-scale
// index is max(n, 1): iteration 0 proposes with the n = 1 scale so the
// default rule's log(n + 1) never sees n = 0.
StepCore one_step(const AnnealerConfig& cfg, const Objective& objective, std::span<const double> x,
                  long n, Rng& rng, std::span<double> z) {
    const double beta = cfg.cooling.beta_at(n);
    propose_into(cfg.kernel, cfg.domain, x, static_cast<double>(std::max(n, 1L)), rng, z);

    StepCore out{};
    if (objective.is_noisy()) {
        const long particles = cfg.precision.particles_at(n);
        out.psi_x = objective.noisy(x, particles, rng);
        out.psi_z = objective.noisy(z, particles, rng);
    } else {
        out.psi_x = objective.exact(x);
        out.psi_z = objective.exact(z);
    }
    const double p = acceptance_prob(cfg.acceptance, beta, out.psi_x, out.psi_z);
    out.accepted = rng.uniform01() <= p;
    return out;
}

void check_theta(const AnnealerConfig& cfg, std::span<const double> theta) {
    if (!cfg.domain.contains(theta))
        throw std::domain_error("annealer: theta outside the search box");
}

}  // namespace

StepOutcome step_exact(const AnnealerConfig& cfg, const Objective& objective,
                       const std::vector<double>& theta, long n, Rng& rng) {
    if (objective.is_noisy())
        throw std::invalid_argument("step_exact: objective is noisy; use step_noisy");
    if (!objective.exact) throw std::invalid_argument("step_exact: objective missing");
    check_theta(cfg, theta);

    StepOutcome out;
    out.theta_next.resize(cfg.domain.dim());
    const StepCore core = one_step(cfg, objective, theta, n, rng, out.theta_next);
    out.accepted = core.accepted;
    out.psi_current = core.psi_x;
    out.psi_proposal = core.psi_z;
    if (!out.accepted) out.theta_next = theta;
    return out;
}

StepOutcome step_noisy(const AnnealerConfig& cfg, const Objective& objective,
                       const std::vector<double>& theta, long n, Rng& rng) {
    if (!objective.is_noisy()) throw std::invalid_argument("step_noisy: objective is exact");
    check_theta(cfg, theta);

    StepOutcome out;
    out.theta_next.resize(cfg.domain.dim());
    const StepCore core = one_step(cfg, objective, theta, n, rng, out.theta_next);
    out.accepted = core.accepted;
    out.psi_current = core.psi_x;
    out.psi_proposal = core.psi_z;
    if (!out.accepted) out.theta_next = theta;
    return out;
}

ChainState::ChainState(const AnnealerConfig& cfg, const Objective& objective, Rng rng)
    : cfg_(&cfg), objective_(&objective), rng_(rng), x_(cfg.domain.dim()), z_(cfg.domain.dim()) {
    cfg.validate();
    if (!objective.exact && !objective.noisy) throw std::invalid_argument("ChainState: empty objective");
    sample_uniform_into(cfg.domain, rng_, x_);
}

ChainState::ChainState(const AnnealerConfig& cfg, const Objective& objective, Rng rng,
                       std::vector<double> theta0)
    : cfg_(&cfg), objective_(&objective), rng_(rng), x_(std::move(theta0)), z_(cfg.domain.dim()) {
    cfg.validate();
    if (!objective.exact && !objective.noisy) throw std::invalid_argument("ChainState: empty objective");
    check_theta(cfg, x_);
}

void ChainState::step() {
    const long n = n_;
    const StepCore core = one_step(*cfg_, *objective_, x_, n, rng_, z_);
    if (core.accepted) x_.swap(z_);
    last_accepted_ = core.accepted;
    last_psi_ = core.accepted ? core.psi_z : core.psi_x;
    last_beta_ = cfg_->cooling.beta_at(n);
    last_particles_ = objective_->is_noisy() ? cfg_->precision.particles_at(n) : -1;
    ++n_;
}

Trajectory run(const AnnealerConfig& cfg, const Objective& objective,
               const std::function<void(const TrajectoryRecord&)>& on_record,
               std::optional<std::vector<double>> theta0) {
    cfg.validate();
    Rng rng = Rng::stream(cfg.seed, 0);
    ChainState chain = theta0.has_value() ? ChainState(cfg, objective, rng, std::move(*theta0))
                                          : ChainState(cfg, objective, rng);

    Trajectory traj;
    for (long n = 0; n < cfg.iterations; ++n) {
        try {
            chain.step();
        } catch (const std::exception& e) {
            traj.final_theta.assign(chain.state().begin(), chain.state().end());
            throw RunAborted(std::string("annealing run failed at step ") + std::to_string(n) +
                                 ": " + e.what(),
                             std::move(traj), n);
        }
        if (n % cfg.record_every == 0 || n == cfg.iterations - 1) {
            TrajectoryRecord rec;
            rec.n = n;
            rec.beta = chain.last_beta();
            rec.n_particles = chain.last_particles();
            rec.psi = chain.last_psi_retained();
            rec.accepted = chain.last_accepted();
            rec.theta.assign(chain.state().begin(), chain.state().end());
            if (on_record) on_record(rec);
            traj.records.push_back(std::move(rec));
        }
    }
    traj.final_theta.assign(chain.state().begin(), chain.state().end());
    return traj;
}

}  // namespace fsa
