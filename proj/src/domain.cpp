#include "fsa/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace fsa {

BoxDomain::BoxDomain(std::vector<double> lower, std::vector<double> upper)
    : BoxDomain(std::move(lower), std::move(upper), {}) {}

BoxDomain::BoxDomain(std::vector<double> lower, std::vector<double> upper, std::vector<bool> log_scale)
    : lower_(std::move(lower)), upper_(std::move(upper)), log_scale_(std::move(log_scale)) {
    if (lower_.empty()) throw std::invalid_argument("BoxDomain: dimension must be >= 1");
    if (upper_.size() != lower_.size()) throw std::invalid_argument("BoxDomain: bound size mismatch");
    if (log_scale_.empty()) log_scale_.assign(lower_.size(), false);
    if (log_scale_.size() != lower_.size())
        throw std::invalid_argument("BoxDomain: log_scale size mismatch");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
            throw std::invalid_argument("BoxDomain: bounds must be finite");
        if (!(lower_[i] < upper_[i]))
            throw std::invalid_argument("BoxDomain: need lower < upper in every coordinate");
        if (log_scale_[i] && !(lower_[i] > 0.0))
            throw std::invalid_argument("BoxDomain: log-scale coordinate needs lower > 0");
    }
}

double BoxDomain::proposal_side(std::size_t i) const {
    return log_scale_[i] ? std::log(upper_[i] / lower_[i]) : upper_[i] - lower_[i];
}

bool BoxDomain::contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
    return true;
}

void BoxDomain::clamp(std::span<double> x) const {
    for (std::size_t i = 0; i < dim(); ++i) {
        if (x[i] < lower_[i]) x[i] = lower_[i];
        if (x[i] > upper_[i]) x[i] = upper_[i];
    }
}

StepScale default_step_scale(const BoxDomain& domain) {
    std::vector<double> sides(domain.dim());
    for (std::size_t i = 0; i < domain.dim(); ++i) sides[i] = domain.proposal_side(i);
    return StepScale{[sides = std::move(sides)](double n, std::span<double> out) {
        if (!(n >= 1.0)) throw std::domain_error("step_scale: n must be >= 1");
        const double inv = 1.0 / std::log(n + 1.0);
        for (std::size_t i = 0; i < sides.size(); ++i) out[i] = sides[i] * inv;
    }};
}

StepScale fixed_step_scale(std::vector<double> sigmas) {
    for (double s : sigmas)
        if (!(s >= 0.0)) throw std::invalid_argument("fixed_step_scale: scales must be >= 0");
    return StepScale{[sigmas = std::move(sigmas)](double, std::span<double> out) {
        for (std::size_t i = 0; i < sigmas.size(); ++i) out[i] = sigmas[i];
    }};
}

ProposalKernel ProposalKernel::gaussian_random_walk(StepScale step) {
    if (!step.eval) throw std::invalid_argument("ProposalKernel: step scale required");
    ProposalKernel k;
    k.kind = Kind::gaussian_random_walk;
    k.step = std::move(step);
    return k;
}

ProposalKernel ProposalKernel::uniform_independence() { return ProposalKernel{}; }

void propose_into(const ProposalKernel& kernel, const BoxDomain& domain, std::span<const double> x,
                  double n, Rng& rng, std::span<double> out) {
    const std::size_t d = domain.dim();
    if (x.size() != d || out.size() != d) throw std::invalid_argument("propose_into: size mismatch");
    if (!domain.contains(x)) throw std::domain_error("propose_into: current state outside the box");

    if (kernel.kind == ProposalKernel::Kind::uniform_independence) {
        for (std::size_t i = 0; i < d; ++i) out[i] = rng.uniform(domain.lower(i), domain.upper(i));
        return;
    }

    thread_local std::vector<double> scale;
    scale.resize(d);
    kernel.step.eval(n, scale);
    for (std::size_t i = 0; i < d; ++i) {
        if (!(scale[i] >= 0.0)) throw std::domain_error("propose_into: negative step scale");
        const double z = rng.normal();
        out[i] = domain.log_scale(i) ? std::exp(std::log(x[i]) + scale[i] * z) : x[i] + scale[i] * z;
    }
    domain.clamp(out);
}

std::vector<double> propose(const ProposalKernel& kernel, const BoxDomain& domain,
                            const std::vector<double>& x, double n, Rng& rng) {
    std::vector<double> out(domain.dim());
    propose_into(kernel, domain, x, n, rng, out);
    return out;
}

void sample_uniform_into(const BoxDomain& domain, Rng& rng, std::span<double> out) {
    if (out.size() != domain.dim()) throw std::invalid_argument("sample_uniform_into: size mismatch");
    for (std::size_t i = 0; i < domain.dim(); ++i) out[i] = rng.uniform(domain.lower(i), domain.upper(i));
}

std::vector<double> sample_uniform(const BoxDomain& domain, Rng& rng) {
    std::vector<double> out(domain.dim());
    sample_uniform_into(domain, rng, out);
    return out;
}

}  // namespace fsa
