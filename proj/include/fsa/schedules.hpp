#pragma once

#include <cmath>
#include <stdexcept>

namespace fsa {

// Inverse temperature as a pure function of the iteration index.
//
// Power cooling beta_n = scale * (n^alpha v 1) is the fast regime this
// library is built around; Logarithmic cooling beta_n = beta0 * log(n + e)
// is the classical baseline the comparisons run against.
class CoolingSchedule {
  public:
    enum class Kind { power, logarithmic };

    static CoolingSchedule power(double alpha, double scale) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("CoolingSchedule: alpha must be in (0,1)");
        if (!(scale > 0.0)) throw std::invalid_argument("CoolingSchedule: scale must be > 0");
        return CoolingSchedule(Kind::power, alpha, scale);
    }

    static CoolingSchedule logarithmic(double beta0) {
        if (!(beta0 > 0.0)) throw std::invalid_argument("CoolingSchedule: beta0 must be > 0");
        return CoolingSchedule(Kind::logarithmic, 0.0, beta0);
    }

    double beta_at(long n) const {
        if (n < 0) throw std::domain_error("CoolingSchedule::beta_at: n must be >= 0");
        const double nd = static_cast<double>(n);
        if (kind_ == Kind::power) {
            const double p = std::pow(nd, alpha_);
            return scale_ * (p > 1.0 ? p : 1.0);
        }
        return scale_ * std::log(nd + 2.718281828459045235360287);
    }

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    // Power: multiplier on n^alpha.  Logarithmic: beta0.
    double scale() const { return scale_; }

  private:
    CoolingSchedule(Kind kind, double alpha, double scale) : kind_(kind), alpha_(alpha), scale_(scale) {}

    Kind kind_;
    double alpha_;
    double scale_;
};

// Per-iteration sample size N_n for noisy objective evaluations, again a pure
// function of n.  All variants are clamped below by `floor` and by 1.
class PrecisionSchedule {
  public:
    enum class Kind { constant, affine, power };

    static PrecisionSchedule constant(long n_particles) {
        if (n_particles < 1)
            throw std::invalid_argument("PrecisionSchedule: constant size must be >= 1");
        return PrecisionSchedule(Kind::constant, static_cast<double>(n_particles), 0.0, 1.0, 1);
    }

    // N_n = ceil(n0 + n1 * n)
    static PrecisionSchedule affine(double n0, double n1, long floor = 1) {
        validate(n0, n1, floor);
        return PrecisionSchedule(Kind::affine, n0, n1, 1.0, floor);
    }

    // N_n = ceil(n0 + n1 * n^delta)
    static PrecisionSchedule power(double n0, double n1, double delta, long floor = 1) {
        validate(n0, n1, floor);
        if (!(delta > 0.0)) throw std::invalid_argument("PrecisionSchedule: delta must be > 0");
        return PrecisionSchedule(Kind::power, n0, n1, delta, floor);
    }

    long particles_at(long n) const {
        if (n < 0) throw std::domain_error("PrecisionSchedule::particles_at: n must be >= 0");
        double raw = 0.0;
        switch (kind_) {
            case Kind::constant:
                raw = n0_;
                break;
            case Kind::affine:
                raw = n0_ + n1_ * static_cast<double>(n);
                break;
            case Kind::power:
                raw = n0_ + n1_ * std::pow(static_cast<double>(n), delta_);
                break;
        }
        long out = static_cast<long>(std::ceil(raw));
        if (out < floor_) out = floor_;
        return out < 1 ? 1 : out;
    }

    Kind kind() const { return kind_; }
    long floor() const { return floor_; }

  private:
    static void validate(double n0, double n1, long floor) {
        if (!(n0 >= 0.0)) throw std::invalid_argument("PrecisionSchedule: n0 must be >= 0");
        if (!(n1 > 0.0)) throw std::invalid_argument("PrecisionSchedule: n1 must be > 0");
        if (floor < 1) throw std::invalid_argument("PrecisionSchedule: floor must be >= 1");
    }

    PrecisionSchedule(Kind kind, double n0, double n1, double delta, long floor)
        : kind_(kind), n0_(n0), n1_(n1), delta_(delta), floor_(floor) {}

    Kind kind_;
    double n0_;
    double n1_;
    double delta_;
    long floor_;
};

}  // namespace fsa
