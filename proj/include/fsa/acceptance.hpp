#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsa {

// Acceptance function f: [0, inf) -> (0, 1] applied to beta * (gap)+.
// f(t) = exp(-t) recovers the classical Metropolis rule; heavier-tailed
// choices such as 1/(1 + t/tau) accept deep downhill moves more often, which
// is what lets the chain track a fast (polynomial) cooling schedule.
class AcceptanceFunction {
  public:
    enum class Kind { classical, polynomial, custom };

    static AcceptanceFunction classical() { return AcceptanceFunction(Kind::classical, 1.0); }

    static AcceptanceFunction polynomial(double tau) {
        if (!(tau > 0.0)) throw std::invalid_argument("AcceptanceFunction: tau must be > 0");
        return AcceptanceFunction(Kind::polynomial, tau);
    }

    // Custom pair (f, f'); f must satisfy the admissibility conditions that
    // verify_admissible() checks.
    static AcceptanceFunction custom(std::function<double(double)> f,
                                     std::function<double(double)> fprime) {
        if (!f || !fprime) throw std::invalid_argument("AcceptanceFunction: custom needs f and f'");
        AcceptanceFunction a(Kind::custom, 0.0);
        a.f_ = std::move(f);
        a.fprime_ = std::move(fprime);
        return a;
    }

    Kind kind() const { return kind_; }
    double tau() const { return tau_; }

    double f(double t) const {
        if (t < 0.0) throw std::domain_error("AcceptanceFunction::f: t must be >= 0");
        switch (kind_) {
            case Kind::classical:
                return std::exp(-t);
            case Kind::polynomial:
                return 1.0 / (1.0 + t / tau_);
            case Kind::custom:
                return f_(t);
        }
        return 0.0;  // unreachable
    }

    // g = 1/f, the growth function paired with f in the admissibility bounds.
    double g(double t) const {
        if (t < 0.0) throw std::domain_error("AcceptanceFunction::g: t must be >= 0");
        switch (kind_) {
            case Kind::classical:
                return std::exp(t);
            case Kind::polynomial:
                return 1.0 + t / tau_;
            case Kind::custom:
                return 1.0 / f_(t);
        }
        return 0.0;  // unreachable
    }

    double fprime(double t) const {
        if (t < 0.0) throw std::domain_error("AcceptanceFunction::fprime: t must be >= 0");
        switch (kind_) {
            case Kind::classical:
                return -std::exp(-t);
            case Kind::polynomial: {
                const double u = 1.0 + t / tau_;
                return -1.0 / (tau_ * u * u);
            }
            case Kind::custom:
                return fprime_(t);
        }
        return 0.0;  // unreachable
    }

    // sup_t |t f'(t)|: 1/e for the classical rule, 1/4 for the polynomial
    // family (attained at t = tau).
    double max_abs_tfprime() const {
        switch (kind_) {
            case Kind::classical:
                return std::exp(-1.0);
            case Kind::polynomial:
                return 0.25;
            case Kind::custom:
                throw std::logic_error("max_abs_tfprime: not defined for custom functions");
        }
        return 0.0;  // unreachable
    }

    const char* kind_name() const {
        switch (kind_) {
            case Kind::classical:
                return "classical";
            case Kind::polynomial:
                return "polynomial";
            case Kind::custom:
                return "custom";
        }
        return "";  // unreachable
    }

  private:
    AcceptanceFunction(Kind kind, double tau) : kind_(kind), tau_(tau) {}

    Kind kind_;
    double tau_;
    std::function<double(double)> f_;
    std::function<double(double)> fprime_;
};

// Probability of accepting a proposal with objective value psi_proposal from
// a state with value psi_current (the chain maximizes psi): f(beta * gap+).
inline double acceptance_prob(const AcceptanceFunction& fn, double beta, double psi_current,
                              double psi_proposal) {
    if (!(beta > 0.0)) throw std::invalid_argument("acceptance_prob: beta must be > 0");
    const double gap = psi_current - psi_proposal;
    return fn.f(gap > 0.0 ? beta * gap : 0.0);
}

struct AdmissibilityReport {
    bool f0_is_one = false;
    bool positive = false;
    bool nonincreasing = false;
    bool convex_midpoint = false;
    bool tfprime_bounded = false;
    double max_abs_tfprime = 0.0;
    double argmax_t = 0.0;

    bool ok() const { return f0_is_one && positive && nonincreasing && convex_midpoint && tfprime_bounded; }
};

// Grid diagnostics of the admissibility conditions (f(0)=1, positivity,
// monotonicity, midpoint convexity, bounded |t f'(t)|).
AdmissibilityReport verify_admissible(const AcceptanceFunction& fn,
                                      std::span<const double> grid = {});

}  // namespace fsa
