#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fsa/acceptance.hpp"
#include "fsa/domain.hpp"
#include "fsa/rng.hpp"
#include "fsa/schedules.hpp"

namespace fsa {

// Objective to maximize.  Exactly one of `exact` / `noisy` drives the chain;
// a noisy objective may additionally carry `exact` as the measurement
// reference (experiments evaluate exceedance with the exact value even when
// the chain itself only sees approximations).
//
// noisy(theta, n_samples, rng) must draw fresh randomness on every call;
// approximations are never cached across iterations.
struct Objective {
    std::function<double(std::span<const double>)> exact;
    std::function<double(std::span<const double>, long, Rng&)> noisy;

    bool is_noisy() const { return static_cast<bool>(noisy); }
};

struct AnnealerConfig {
    AcceptanceFunction acceptance = AcceptanceFunction::classical();
    CoolingSchedule cooling = CoolingSchedule::logarithmic(1.0);
    PrecisionSchedule precision = PrecisionSchedule::constant(1);
    ProposalKernel kernel = ProposalKernel::uniform_independence();
    BoxDomain domain;
    long iterations = 1;
    long record_every = 1;
    std::uint64_t seed = 0;

    AnnealerConfig(BoxDomain d) : domain(std::move(d)) {}

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("AnnealerConfig: iterations must be >= 1");
        if (record_every < 1) throw std::invalid_argument("AnnealerConfig: record_every must be >= 1");
    }
};

struct StepOutcome {
    std::vector<double> theta_next;
    bool accepted = false;
    double psi_current = 0.0;   // value (exact or approximate) used for the current state
    double psi_proposal = 0.0;  // value used for the proposal
};

// One transition at iteration n from theta.  Consumption order of rng:
// proposal draws, then (noisy only) approximation draws for the current
// state and for the proposal, then one acceptance uniform.
StepOutcome step_exact(const AnnealerConfig& cfg, const Objective& objective,
                       const std::vector<double>& theta, long n, Rng& rng);
StepOutcome step_noisy(const AnnealerConfig& cfg, const Objective& objective,
                       const std::vector<double>& theta, long n, Rng& rng);

struct TrajectoryRecord {
    long n = 0;             // step index; theta is the state after this step
    double beta = 0.0;      // inverse temperature used at this step
    long n_particles = -1;  // approximation size, -1 when the objective is exact
    double psi = 0.0;       // decision value of the retained state
    bool accepted = false;
    std::vector<double> theta;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::vector<double> final_theta;
};

// Thrown when an objective or kernel fails mid-run; carries whatever was
// recorded before the failure.
struct RunAborted : std::runtime_error {
    RunAborted(const std::string& what, Trajectory partial_, long failed_at_)
        : std::runtime_error(what), partial(std::move(partial_)), failed_at(failed_at_) {}

    Trajectory partial;
    long failed_at;
};

// Reusable single-chain stepper; keeps all buffers across steps so driving
// it in a tight loop performs no per-step allocation.
class ChainState {
  public:
    ChainState(const AnnealerConfig& cfg, const Objective& objective, Rng rng);
    ChainState(const AnnealerConfig& cfg, const Objective& objective, Rng rng,
               std::vector<double> theta0);

    void step();

    std::span<const double> state() const { return x_; }
    long steps_done() const { return n_; }
    bool last_accepted() const { return last_accepted_; }
    double last_psi_retained() const { return last_psi_; }
    double last_beta() const { return last_beta_; }
    long last_particles() const { return last_particles_; }

  private:
    const AnnealerConfig* cfg_;
    const Objective* objective_;
    Rng rng_;
    std::vector<double> x_;
    std::vector<double> z_;
    long n_ = 0;
    bool last_accepted_ = false;
    double last_psi_ = 0.0;
    double last_beta_ = 0.0;
    long last_particles_ = -1;
};

// Full annealing run: theta_0 uniform on the box (from this run's stream),
// `iterations` steps, a record every `record_every` steps plus always the
// final state.  on_record, when given, sees each record as it is produced.
Trajectory run(const AnnealerConfig& cfg, const Objective& objective,
               const std::function<void(const TrajectoryRecord&)>& on_record = {},
               std::optional<std::vector<double>> theta0 = std::nullopt);

}  // namespace fsa
