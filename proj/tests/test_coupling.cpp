#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fsa/coupling.hpp"
#include "fsa/stats.hpp"

using namespace fsa;

namespace {

double binomial_pmf(long n, long k, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                    k * std::log(p) + (n - k) * std::log1p(-p));
}

// Normalized-weight overlap mass on the shared slots, recomputed from the
// weight summaries the step itself uses.
double expected_match_mass(const StateSpaceModel& model, const CoupledFilterPair& pair, double y) {
    const WeightSummary ws = pf_weights(model, {}, pair.small, y);
    const WeightSummary wl = pf_weights(model, {}, pair.large, y);
    double mass = 0.0;
    for (std::size_t j = 0; j < pair.shared.size(); ++j)
        if (pair.shared[j]) mass += std::min(ws.shifted[j] / ws.sum, wl.shifted[j] / wl.sum);
    return mass;
}

}  // namespace

TEST_CASE("coupled sample means share exactly the first N summands") {
    long counter = 0;
    const auto h = [&counter](std::span<const double>, Rng&) {
        return static_cast<double>(counter++);
    };
    Rng rng(1);
    const auto [small, large] = coupled_mc_means(h, std::vector<double>{0.0}, 3, 5, rng);
    CHECK(small == doctest::Approx(1.0).epsilon(1e-15));  // (0+1+2)/3
    CHECK(large == doctest::Approx(2.0).epsilon(1e-15));  // (0+1+2+3+4)/5
    CHECK(counter == 5);
}

TEST_CASE("coupled sample means coincide when the sizes coincide") {
    const auto h = [](std::span<const double>, Rng& rng) { return rng.normal(); };
    Rng rng(2);
    const auto [small, large] = coupled_mc_means(h, std::vector<double>{0.0}, 17, 17, rng);
    CHECK(small == large);
}

TEST_CASE("constant summands average to the constant on both sides") {
    const auto h = [](std::span<const double>, Rng&) { return 0.25; };
    Rng rng(3);
    const auto [small, large] = coupled_mc_means(h, std::vector<double>{0.0}, 4, 16, rng);
    CHECK(small == 0.25);
    CHECK(large == 0.25);
}

TEST_CASE("coupled sample means obey the 2 E|h| (N'-N)/N' bound") {
    const long n_small = 50, n_large = 100, reps = 20000;
    const auto h = [](std::span<const double>, Rng& rng) { return 0.3 + rng.normal(); };
    Rng rng(4);
    const std::vector<double> x = {0.0};

    double sum_abs_h = 0.0;
    for (long i = 0; i < 10000; ++i) sum_abs_h += std::abs(h(x, rng));
    const double mean_abs_h = sum_abs_h / 10000.0;

    std::vector<double> gaps(reps);
    for (long r = 0; r < reps; ++r) {
        const auto [s, l] = coupled_mc_means(h, x, n_small, n_large, rng);
        gaps[r] = std::abs(s - l);
    }
    const auto mv = stats::summarize(gaps);
    const double bound = 2.0 * mean_abs_h * static_cast<double>(n_large - n_small) / n_large;
    CHECK(mv.mean < bound + 4.0 * mv.stderr_mean());
}

TEST_CASE("size validation on the coupled evaluators") {
    const auto h = [](std::span<const double>, Rng&) { return 0.0; };
    Rng rng(5);
    const std::vector<double> x = {0.0};
    CHECK_THROWS_AS((void)coupled_mc_means(h, x, 0, 5, rng), std::invalid_argument);
    CHECK_THROWS_AS((void)coupled_mc_means(h, x, 5, 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(coupled_sample_mean(nullptr), std::invalid_argument);
    CHECK_THROWS_AS(coupled_from_noisy(nullptr), std::invalid_argument);
}

TEST_CASE("equal sizes with shared draws never disagree") {
    const BoxDomain domain({-0.5}, {0.5});
    const auto mu = [&domain](Rng& rng) { return sample_uniform(domain, rng); };
    const CoupledObjective objective = coupled_sample_mean(
        [](std::span<const double> x, Rng& rng) { return -std::abs(x[0]) + rng.normal(); });
    Rng rng(6);
    const TvEstimate est =
        estimate_kernel_tv(mu, ProposalKernel::uniform_independence(), domain,
                           AcceptanceFunction::polynomial(1.0), 2.0, objective, 64, 64, 2000, rng);
    CHECK(est.rate == 0.0);
    CHECK(est.reps == 2000);
}

TEST_CASE("a noiseless objective never disagrees across sizes") {
    const BoxDomain domain({-0.5}, {0.5});
    const auto mu = [&domain](Rng& rng) { return sample_uniform(domain, rng); };
    const CoupledObjective objective = coupled_from_noisy(
        [](std::span<const double> x, long, Rng&) { return -std::abs(x[0]); });
    Rng rng(7);
    const TvEstimate est =
        estimate_kernel_tv(mu, ProposalKernel::uniform_independence(), domain,
                           AcceptanceFunction::classical(), 3.0, objective, 10, 1000, 2000, rng);
    CHECK(est.rate == 0.0);
}

TEST_CASE("kernel disagreement stays below its analytic bound") {
    const BoxDomain domain({-0.5}, {0.5});
    const auto mu = [&domain](Rng& rng) { return sample_uniform(domain, rng); };
    const CoupledObjective objective = coupled_sample_mean(
        [](std::span<const double> x, Rng& rng) { return -std::abs(x[0]) + rng.normal(); });
    const double beta = 2.0;
    const long n_small = 20, n_large = 40, reps = 20000;

    for (const auto& fn : {AcceptanceFunction::polynomial(1.0), AcceptanceFunction::classical()}) {
        // both families have sup |f'| = f'(0) magnitude 1 at these parameters
        Rng rng(8);
        long disagreements = 0;
        double sum_gap = 0.0;
        for (long r = 0; r < reps; ++r) {
            const auto out = coupled_kernel_sample(mu, ProposalKernel::uniform_independence(),
                                                   domain, fn, beta, objective, n_small, n_large,
                                                   rng);
            if (out.disagree) ++disagreements;
            sum_gap += 0.5 * (std::abs(out.psi_small_x - out.psi_large_x) +
                              std::abs(out.psi_small_z - out.psi_large_z));
        }
        const double rate = static_cast<double>(disagreements) / reps;
        const double bound = 2.0 * beta * 1.0 * (sum_gap / reps);
        CHECK(rate <= bound + 4.0 * stats::binomial_stderr(rate, reps));
        CHECK(rate > 0.0);  // the coupling is nontrivial at these sizes
    }
}

TEST_CASE("kernel disagreement grows with the inverse temperature") {
    const BoxDomain domain({-0.5}, {0.5});
    const auto mu = [&domain](Rng& rng) { return sample_uniform(domain, rng); };
    const CoupledObjective objective = coupled_sample_mean(
        [](std::span<const double> x, Rng& rng) { return -std::abs(x[0]) + rng.normal(); });
    Rng rng_lo(9), rng_hi(10);
    const TvEstimate lo = estimate_kernel_tv(mu, ProposalKernel::uniform_independence(), domain,
                                             AcceptanceFunction::polynomial(1.0), 0.5, objective,
                                             20, 40, 20000, rng_lo);
    const TvEstimate hi = estimate_kernel_tv(mu, ProposalKernel::uniform_independence(), domain,
                                             AcceptanceFunction::polynomial(1.0), 4.0, objective,
                                             20, 40, 20000, rng_hi);
    CHECK(lo.rate < hi.rate + 4.0 * std::sqrt(lo.stderr_ * lo.stderr_ + hi.stderr_ * hi.stderr_));
    CHECK(hi.rate > lo.rate);  // strict at this separation and rep count
}

TEST_CASE("coupled filter initialization shares the first N draws") {
    const StateSpaceModel model = compact_coupling_model();
    Rng rng(11);
    const CoupledFilterPair pair = coupled_pf_init(model, {}, 30, 50, rng);
    REQUIRE(pair.small.size() == 30);
    REQUIRE(pair.large.size() == 50);
    CHECK(pair.shared_count() == 30);
    for (long i = 0; i < 30; ++i)
        CHECK(pair.small.positions[static_cast<std::size_t>(i)] ==
              pair.large.positions[static_cast<std::size_t>(i)]);
    CHECK(pair.small.t == 1);
    CHECK(pair.large.t == 1);
}

TEST_CASE("shared slots remain bit-identical as the coupled filters advance") {
    const StateSpaceModel model = compact_coupling_model();
    Rng data_rng(12);
    const SimulatedPath path = simulate(model, {}, 12, data_rng);

    Rng rng(13);
    CoupledFilterPair pair = coupled_pf_init(model, {}, 60, 90, rng);
    for (long t = 0; t < 11; ++t) {
        const CoupledStepStats st =
            coupled_pf_step(model, {}, pair, path.observations[static_cast<std::size_t>(t)], rng);
        CHECK(st.shared_count == pair.shared_count());
        long matches = 0;
        for (std::size_t i = 0; i < pair.shared.size(); ++i) {
            if (!pair.shared[i]) continue;
            ++matches;
            REQUIRE(pair.small.positions[i] == pair.large.positions[i]);
        }
        CHECK(matches == st.shared_count);
        CHECK(pair.small.t == pair.large.t);
    }
}

TEST_CASE("the coupling probability equals the shared-slot overlap mass") {
    const StateSpaceModel model = compact_coupling_model();
    Rng data_rng(14);
    const SimulatedPath path = simulate(model, {}, 4, data_rng);
    Rng rng(15);
    CoupledFilterPair pair = coupled_pf_init(model, {}, 40, 64, rng);
    (void)coupled_pf_step(model, {}, pair, path.observations[0], rng);  // desynchronize some slots

    const double expected = expected_match_mass(model, pair, path.observations[1]);
    CoupledFilterPair copy = pair;
    const CoupledStepStats st = coupled_pf_step(model, {}, copy, path.observations[1], rng);
    CHECK(st.match_mass == doctest::Approx(expected).epsilon(1e-12));
    CHECK(st.match_mass > 0.0);
    CHECK(st.match_mass <= 1.0 + 1e-12);
}

TEST_CASE("the number of surviving couplings is binomial in the overlap mass") {
    const StateSpaceModel model = compact_coupling_model();
    Rng data_rng(16);
    const SimulatedPath path = simulate(model, {}, 4, data_rng);
    Rng rng(17);
    CoupledFilterPair frozen = coupled_pf_init(model, {}, 40, 60, rng);
    (void)coupled_pf_step(model, {}, frozen, path.observations[0], rng);
    (void)coupled_pf_step(model, {}, frozen, path.observations[1], rng);

    const double p = expected_match_mass(model, frozen, path.observations[2]);
    REQUIRE(p > 0.0);
    REQUIRE(p < 1.0);

    const long reps = 4000, n = 40;
    std::vector<double> observed(static_cast<std::size_t>(n) + 1, 0.0);
    for (long r = 0; r < reps; ++r) {
        CoupledFilterPair pair = frozen;
        Rng step_rng = Rng::stream(1800, static_cast<std::uint64_t>(r));
        const CoupledStepStats st = coupled_pf_step(model, {}, pair, path.observations[2], step_rng);
        observed[static_cast<std::size_t>(st.shared_count)] += 1.0;
    }
    std::vector<double> expected(static_cast<std::size_t>(n) + 1, 0.0);
    for (long k = 0; k <= n; ++k) expected[static_cast<std::size_t>(k)] = reps * binomial_pmf(n, k, p);
    CHECK(stats::chi_square_gof_p(observed, expected) > 1e-4);
}

TEST_CASE("each coupled filter is marginally an ordinary bootstrap filter") {
    const StateSpaceModel model = compact_coupling_model();
    Rng data_rng(18);
    const SimulatedPath path = simulate(model, {}, 10, data_rng);
    const long n_small = 100, n_large = 150, seeds = 300;

    const auto standalone = [&](long n_particles, std::uint64_t root, std::vector<double>& logliks,
                                std::vector<double>& means) {
        for (long s = 0; s < seeds; ++s) {
            Rng rng = Rng::stream(root, static_cast<std::uint64_t>(s));
            ParticleCloud cloud = pf_init(model, {}, n_particles, rng);
            double ll = 0.0;
            for (long t = 0; t + 1 < 10; ++t)
                ll += pf_step(model, {}, cloud, path.observations[static_cast<std::size_t>(t)], rng);
            logliks.push_back(ll);
            double m = 0.0;
            for (double v : cloud.positions) m += v;
            means.push_back(m / static_cast<double>(n_particles));
        }
    };

    std::vector<double> ll_alone_s, mean_alone_s, ll_alone_l, mean_alone_l;
    standalone(n_small, 1900, ll_alone_s, mean_alone_s);
    standalone(n_large, 1901, ll_alone_l, mean_alone_l);

    std::vector<double> ll_coupled_s, mean_coupled_s, ll_coupled_l, mean_coupled_l;
    for (long s = 0; s < seeds; ++s) {
        Rng rng = Rng::stream(1902, static_cast<std::uint64_t>(s));
        CoupledFilterPair pair = coupled_pf_init(model, {}, n_small, n_large, rng);
        double ls = 0.0, ll = 0.0;
        for (long t = 0; t + 1 < 10; ++t) {
            const CoupledStepStats st =
                coupled_pf_step(model, {}, pair, path.observations[static_cast<std::size_t>(t)], rng);
            ls += st.log_inc_small;
            ll += st.log_inc_large;
        }
        ll_coupled_s.push_back(ls);
        ll_coupled_l.push_back(ll);
        double ms = 0.0, mlg = 0.0;
        for (double v : pair.small.positions) ms += v;
        for (double v : pair.large.positions) mlg += v;
        mean_coupled_s.push_back(ms / static_cast<double>(n_small));
        mean_coupled_l.push_back(mlg / static_cast<double>(n_large));
    }

    // 0.1% two-sided threshold
    CHECK(std::abs(stats::welch_z(ll_alone_s, ll_coupled_s)) < 3.29);
    CHECK(std::abs(stats::welch_z(ll_alone_l, ll_coupled_l)) < 3.29);
    CHECK(std::abs(stats::welch_z(mean_alone_s, mean_coupled_s)) < 3.29);
    CHECK(std::abs(stats::welch_z(mean_alone_l, mean_coupled_l)) < 3.29);
}

TEST_CASE("equal-size coupled filters never decouple") {
    const StateSpaceModel model = compact_coupling_model();
    Rng data_rng(19);
    const SimulatedPath path = simulate(model, {}, 8, data_rng);
    Rng rng(20);
    const auto trace = run_coupled_filters(model, {}, path.observations, 50, 50, rng);
    REQUIRE(trace.size() == 8);
    for (const auto& row : trace) {
        CHECK(row.shared_count == 50);
        CHECK(row.tv_bound == 0.0);
    }
}

TEST_CASE("the coupled trace starts from a fully shared prefix") {
    const StateSpaceModel model = compact_coupling_model();
    Rng data_rng(21);
    const SimulatedPath path = simulate(model, {}, 6, data_rng);
    Rng rng(22);
    const long n = 40, np = 70;
    const auto trace = run_coupled_filters(model, {}, path.observations, n, np, rng);
    REQUIRE(trace.size() == 6);
    CHECK(trace[0].t == 1);
    CHECK(trace[0].shared_count == n);
    const double expect =
        1.0 - static_cast<double>(n) / np + static_cast<double>(np - n) * (1.0 / n + 1.0 / np);
    CHECK(trace[0].tv_bound == expect);
    for (std::size_t i = 0; i < trace.size(); ++i) CHECK(trace[i].t == static_cast<long>(i) + 1);
    for (const auto& row : trace) {
        CHECK(row.shared_count >= 0);
        CHECK(row.shared_count <= n);
        CHECK(row.tv_bound >= 0.0);
    }
}

TEST_CASE("tv bound arithmetic and validation") {
    CHECK(coupled_tv_bound(40, 70, 40) ==
          1.0 - 40.0 / 70.0 + 30.0 * (1.0 / 40.0 + 1.0 / 70.0));
    CHECK(coupled_tv_bound(50, 50, 50) == 0.0);
    CHECK_THROWS_AS((void)coupled_tv_bound(50, 40, 10), std::invalid_argument);
    CHECK_THROWS_AS((void)coupled_tv_bound(50, 60, 51), std::invalid_argument);
    CHECK_THROWS_AS((void)coupled_tv_bound(50, 60, -1), std::invalid_argument);
}

TEST_CASE("malformed filter pairs are rejected") {
    const StateSpaceModel model = compact_coupling_model();
    Rng rng(23);
    CoupledFilterPair pair = coupled_pf_init(model, {}, 10, 20, rng);
    pair.shared.resize(5);
    CHECK_THROWS_AS((void)coupled_pf_step(model, {}, pair, 0.0, rng), std::invalid_argument);

    CoupledFilterPair desync = coupled_pf_init(model, {}, 10, 20, rng);
    desync.large.t = 3;
    CHECK_THROWS_AS((void)coupled_pf_step(model, {}, desync, 0.0, rng), std::invalid_argument);

    std::vector<double> no_obs;
    CHECK_THROWS_AS((void)run_coupled_filters(model, {}, no_obs, 10, 20, rng),
                    std::invalid_argument);
}
