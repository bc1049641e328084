#include "fsa/acceptance.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fsa {

namespace {
constexpr std::array<double, 6> kDefaultGrid = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
constexpr double kTol = 1e-12;
}  // namespace

AdmissibilityReport verify_admissible(const AcceptanceFunction& fn, std::span<const double> grid) {
    std::vector<double> ts(grid.begin(), grid.end());
    if (ts.empty()) ts.assign(kDefaultGrid.begin(), kDefaultGrid.end());
    std::sort(ts.begin(), ts.end());
    if (ts.front() < 0.0) throw std::invalid_argument("verify_admissible: grid values must be >= 0");
    if (ts.front() != 0.0) ts.insert(ts.begin(), 0.0);

    AdmissibilityReport rep;
    std::vector<double> fv(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) fv[i] = fn.f(ts[i]);

    rep.f0_is_one = std::fabs(fv.front() - 1.0) <= kTol;
    rep.positive = std::all_of(fv.begin(), fv.end(), [](double v) { return v > 0.0; });

    rep.nonincreasing = true;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
        if (fv[i + 1] > fv[i] + kTol) rep.nonincreasing = false;

    rep.convex_midpoint = true;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t j = i + 1; j < ts.size(); ++j) {
            const double mid = 0.5 * (ts[i] + ts[j]);
            if (fn.f(mid) > 0.5 * (fv[i] + fv[j]) + kTol) rep.convex_midpoint = false;
        }
    }

    rep.tfprime_bounded = true;
    rep.max_abs_tfprime = 0.0;
    rep.argmax_t = ts.front();
    for (double t : ts) {
        const double v = std::fabs(t * fn.fprime(t));
        if (!std::isfinite(v)) {
            rep.tfprime_bounded = false;
            continue;
        }
        if (v > rep.max_abs_tfprime) {
            rep.max_abs_tfprime = v;
            rep.argmax_t = t;
        }
    }
    return rep;
}

}  // namespace fsa
