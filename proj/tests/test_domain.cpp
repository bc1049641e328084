#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fsa/domain.hpp"
#include "fsa/rng.hpp"
#include "fsa/stats.hpp"

using namespace fsa;

namespace {

BoxDomain unit_interval() { return BoxDomain({-0.5}, {0.5}); }

BoxDomain mixed_box() {
    return BoxDomain({0.0, 0.5}, {2.0, 2.0}, {false, true});
}

}  // namespace

TEST_CASE("box construction validates its bounds") {
    CHECK_THROWS_AS(BoxDomain({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(BoxDomain({0.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(BoxDomain({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(BoxDomain({2.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(BoxDomain({0.0}, {1.0}, {true}), std::invalid_argument);  // log needs lower > 0
    CHECK_THROWS_AS(BoxDomain({0.0}, {std::numeric_limits<double>::infinity()}),
                    std::invalid_argument);
    CHECK_THROWS_AS(BoxDomain({0.0, 1.0}, {1.0, 2.0}, {true}), std::invalid_argument);
}

TEST_CASE("proposal side is linear width or log width") {
    const BoxDomain box = mixed_box();
    CHECK(box.proposal_side(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(box.proposal_side(1) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
}

TEST_CASE("contains and clamp agree on the box") {
    const BoxDomain box = mixed_box();
    CHECK(box.contains(std::vector<double>{1.0, 1.0}));
    CHECK(box.contains(std::vector<double>{0.0, 0.5}));  // boundary included
    CHECK_FALSE(box.contains(std::vector<double>{-0.1, 1.0}));
    CHECK_FALSE(box.contains(std::vector<double>{1.0, 2.1}));
    CHECK_FALSE(box.contains(std::vector<double>{1.0}));  // wrong arity

    std::vector<double> x = {-3.0, 10.0};
    box.clamp(x);
    CHECK(x[0] == 0.0);
    CHECK(x[1] == 2.0);

    std::vector<double> interior = {1.25, 0.75};
    box.clamp(interior);
    CHECK(interior[0] == 1.25);
    CHECK(interior[1] == 0.75);
}

TEST_CASE("default step scale is side over log(n + 1)") {
    const BoxDomain box = mixed_box();
    const StepScale scale = default_step_scale(box);
    std::vector<double> out(2);

    const double e = 2.718281828459045235360287;
    scale.eval(e - 1.0, out);  // log(n + 1) = 1
    CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    scale.eval(1.0, out);
    CHECK(out[0] == doctest::Approx(2.0 / std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(scale.eval(0.5, out), std::domain_error);
}

TEST_CASE("fixed step scale rejects negative entries and ignores n") {
    CHECK_THROWS_AS(fixed_step_scale({1.0, -0.1}), std::invalid_argument);
    const StepScale scale = fixed_step_scale({0.25, 0.75});
    std::vector<double> out(2);
    scale.eval(1.0, out);
    CHECK(out[0] == 0.25);
    CHECK(out[1] == 0.75);
    scale.eval(1e9, out);
    CHECK(out[0] == 0.25);
}

TEST_CASE("uniform proposals fill the box uniformly") {
    const BoxDomain box = mixed_box();
    const ProposalKernel kernel = ProposalKernel::uniform_independence();
    Rng rng(404);
    const std::vector<double> x = {1.0, 1.0};

    const std::size_t n = 20000;
    std::vector<double> u0(n), u1(n);
    double mean0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto z = propose(kernel, box, x, 1.0, rng);
        REQUIRE(box.contains(z));
        u0[i] = (z[0] - 0.0) / 2.0;
        u1[i] = (z[1] - 0.5) / 1.5;
        mean0 += z[0];
    }
    mean0 /= static_cast<double>(n);
    // mean of U(0,2) is 1, sd of the mean is (2/sqrt(12))/sqrt(n)
    CHECK(std::abs(mean0 - 1.0) < 4.0 * 2.0 / std::sqrt(12.0 * n));

    const double sqn = std::sqrt(static_cast<double>(n));
    CHECK(stats::ks_sf(stats::ks_statistic_uniform(u0) * sqn) > 1e-3);
    // the second coordinate proposes uniformly on the original scale too
    CHECK(stats::ks_sf(stats::ks_statistic_uniform(u1) * sqn) > 1e-3);
}

TEST_CASE("uniform proposals do not depend on the current state") {
    const BoxDomain box = unit_interval();
    const ProposalKernel kernel = ProposalKernel::uniform_independence();
    Rng rng(405);
    const std::size_t n = 20000;
    std::vector<double> from_left(n), from_right(n);
    for (std::size_t i = 0; i < n; ++i)
        from_left[i] = propose(kernel, box, {-0.49}, 1.0, rng)[0];
    for (std::size_t i = 0; i < n; ++i)
        from_right[i] = propose(kernel, box, {0.49}, 1.0, rng)[0];
    CHECK(std::abs(stats::welch_z(from_left, from_right)) < 3.3);
}

TEST_CASE("random walk with zero step stays put") {
    const BoxDomain box = mixed_box();
    const ProposalKernel kernel = ProposalKernel::gaussian_random_walk(fixed_step_scale({0.0, 0.0}));
    Rng rng(1);
    const std::vector<double> x = {0.75, 1.3};
    const auto z = propose(kernel, box, x, 5.0, rng);
    CHECK(z[0] == x[0]);  // linear coordinate: exact
    CHECK(z[1] == doctest::Approx(x[1]).epsilon(1e-15));  // log coordinate: exp(log(x))
}

TEST_CASE("random walk proposals are clamped into the box") {
    const BoxDomain box = mixed_box();
    const ProposalKernel kernel =
        ProposalKernel::gaussian_random_walk(fixed_step_scale({100.0, 50.0}));
    Rng rng(2);
    const std::vector<double> x = {1.0, 1.0};
    for (int i = 0; i < 2000; ++i) {
        const auto z = propose(kernel, box, x, 1.0, rng);
        REQUIRE(box.contains(z));
    }
}

TEST_CASE("random walk moves multiplicatively on log-scale coordinates") {
    const BoxDomain box = BoxDomain({1e-3}, {1e3}, {true});
    const ProposalKernel kernel = ProposalKernel::gaussian_random_walk(fixed_step_scale({0.5}));
    Rng rng(3);
    Rng replay = rng;
    const std::vector<double> x = {10.0};
    const auto z = propose(kernel, box, x, 1.0, rng);
    const double expected = std::exp(std::log(10.0) + 0.5 * replay.normal());
    CHECK(z[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("random walk proposals center on the current state") {
    const BoxDomain box = BoxDomain({-10.0}, {10.0});
    const ProposalKernel kernel = ProposalKernel::gaussian_random_walk(fixed_step_scale({0.3}));
    Rng rng(6);
    const std::size_t n = 40000;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += propose(kernel, box, {2.0}, 1.0, rng)[0];
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean - 2.0) < 4.0 * 0.3 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("proposals require a valid current state") {
    const BoxDomain box = unit_interval();
    const ProposalKernel kernel = ProposalKernel::uniform_independence();
    Rng rng(4);
    CHECK_THROWS_AS((void)propose(kernel, box, {0.6}, 1.0, rng), std::domain_error);
    CHECK_THROWS_AS((void)propose(kernel, box, {0.0, 0.0}, 1.0, rng), std::invalid_argument);
}

TEST_CASE("uniform box sampling covers the box") {
    const BoxDomain box = mixed_box();
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const auto x = sample_uniform(box, rng);
        REQUIRE(box.contains(x));
    }
}
