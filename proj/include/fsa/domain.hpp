#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fsa/rng.hpp"

namespace fsa {

// Compact search box, optionally with per-coordinate log-scale proposals
// (useful for scale parameters whose box spans orders of magnitude).
class BoxDomain {
  public:
    BoxDomain(std::vector<double> lower, std::vector<double> upper);
    BoxDomain(std::vector<double> lower, std::vector<double> upper, std::vector<bool> log_scale);

    std::size_t dim() const { return lower_.size(); }
    double lower(std::size_t i) const { return lower_[i]; }
    double upper(std::size_t i) const { return upper_[i]; }
    bool log_scale(std::size_t i) const { return log_scale_[i]; }

    // Side length on the scale proposals are made on: upper - lower, or
    // log(upper/lower) for log-scale coordinates.
    double proposal_side(std::size_t i) const;

    bool contains(std::span<const double> x) const;
    void clamp(std::span<double> x) const;

  private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<bool> log_scale_;
};

// Per-coordinate random-walk standard deviations as a function of the
// iteration index (n >= 1), evaluated on the proposal scale.
struct StepScale {
    std::function<void(double n, std::span<double> out)> eval;
};

// The default rule: sigma_i(n) = proposal_side(i) / log(n + 1).
StepScale default_step_scale(const BoxDomain& domain);

// Constant per-coordinate scales (must be >= 0).
StepScale fixed_step_scale(std::vector<double> sigmas);

struct ProposalKernel {
    enum class Kind { gaussian_random_walk, uniform_independence };

    static ProposalKernel gaussian_random_walk(StepScale step);
    static ProposalKernel uniform_independence();

    Kind kind = Kind::uniform_independence;
    StepScale step;  // unused by uniform_independence
};

// Draw a proposal given current state x at iteration n (n >= 1 for the
// random walk; ignored by uniform independence).  Gaussian random walks add
// sigma_i(n) * Z_i on the proposal scale (normals drawn in coordinate order)
// and clamp the result to the box on the original scale; uniform
// independence redraws every coordinate uniformly.
void propose_into(const ProposalKernel& kernel, const BoxDomain& domain,
                  std::span<const double> x, double n, Rng& rng, std::span<double> out);

std::vector<double> propose(const ProposalKernel& kernel, const BoxDomain& domain,
                            const std::vector<double>& x, double n, Rng& rng);

void sample_uniform_into(const BoxDomain& domain, Rng& rng, std::span<double> out);
std::vector<double> sample_uniform(const BoxDomain& domain, Rng& rng);

}  // namespace fsa
