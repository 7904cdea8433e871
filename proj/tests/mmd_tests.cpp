#include <cmath>

#include "doctest.h"
#include "mmdpair/mmd.hpp"
#include "mmdpair/rng.hpp"
#include "test_support.hpp"

using namespace mmdpair;
using test_support::thrown_errc;

TEST_CASE("two-sample statistic matches the naive double-loop oracle") {
    RngStream rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t p = 1 + rng.below(8);
        const std::size_t q = 1 + rng.below(8);
        const auto a = test_support::random_block(p, 2, rng);
        const auto b = test_support::random_block(q, 2, rng);
        const KernelSpec spec(rng.uniform(0.5, 5.0), MetricKind::euclidean);
        const double got = mmd_two_sample(a, b, spec).value;
        const double want = test_support::naive_mmd_two_sample(a, b, spec);
        CHECK(std::fabs(got - want) <= 1e-12);
    }
}

TEST_CASE("paired statistic matches the naive oracle") {
    RngStream rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        const auto x = test_support::random_block(n, 3, rng);
        const auto y = test_support::random_block(n, 3, rng);
        const KernelSpec spec(rng.uniform(0.5, 5.0), MetricKind::euclidean);
        const double got = mmd_paired(x, y, spec).value;
        const double want = test_support::naive_mmd_paired(x, y, spec);
        CHECK(std::fabs(got - want) <= 1e-12);
    }
}

TEST_CASE("weighted statistic matches the naive oracle") {
    RngStream rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        const auto x = test_support::random_block(n, 2, rng);
        const auto y = test_support::random_block(n, 2, rng);
        std::vector<double> w(n);
        for (auto& wi : w) wi = rng.uniform01();
        const KernelSpec spec(rng.uniform(0.5, 5.0), MetricKind::euclidean);
        const double got = mmd_weighted(x, y, w, spec).value;
        const double want = test_support::naive_mmd_weighted(x, y, w, spec);
        CHECK(std::fabs(got - want) <= 1e-12);
    }
}

TEST_CASE("identical samples give exactly zero") {
    RngStream rng(43);
    const auto x = test_support::random_block(5, 2, rng);
    const KernelSpec spec(2.0, MetricKind::euclidean);
    CHECK(mmd_paired(x, x, spec).value == 0.0);
    CHECK(mmd_two_sample(x, x, spec).value == 0.0);
    const std::vector<double> w(5, 0.3);
    CHECK(mmd_weighted(x, x, w, spec).value == 0.0);
}

TEST_CASE("two-sample statistic is symmetric bit for bit") {
    RngStream rng(47);
    const KernelSpec spec(1.5, MetricKind::euclidean);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = test_support::random_block(1 + rng.below(7), 2, rng);
        const auto b = test_support::random_block(1 + rng.below(7), 2, rng);
        CHECK(mmd_two_sample(a, b, spec).value == mmd_two_sample(b, a, spec).value);
    }
}

TEST_CASE("paired equals weighted under uniform weights, bit for bit") {
    RngStream rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        const auto x = test_support::random_block(n, 2, rng);
        const auto y = test_support::random_block(n, 2, rng);
        const KernelSpec spec(2.5, MetricKind::euclidean);
        const std::vector<double> w(n, 1.0 / static_cast<double>(n));
        CHECK(mmd_paired(x, y, spec).value == mmd_weighted(x, y, w, spec).value);
    }
}

TEST_CASE("statistics are nonnegative on random inputs") {
    RngStream rng(59);
    const KernelSpec spec(1.0, MetricKind::euclidean);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(6);
        const auto x = test_support::random_block(n, 1, rng);
        const auto y = test_support::random_block(n, 1, rng);
        CHECK(mmd_paired(x, y, spec).value >= 0.0);
        CHECK(mmd_two_sample(x, y, spec).value >= 0.0);
    }
}

TEST_CASE("clamp maps round-off to zero but flags real negatives") {
    CHECK(clamp_mmd(0.5) == 0.5);
    CHECK(clamp_mmd(0.0) == 0.0);
    CHECK(clamp_mmd(-1e-13) == 0.0);
    CHECK(clamp_mmd(-1e-12) == 0.0);
    CHECK(thrown_errc([] { clamp_mmd(-1e-9); }) == Errc::InternalError);
}

TEST_CASE("degenerate inputs are rejected") {
    const KernelSpec spec(1.0, MetricKind::euclidean);
    const std::vector<Observation> x = {Observation(1.0)};
    const std::vector<Observation> none;
    CHECK(thrown_errc([&] { mmd_two_sample(none, x, spec); }) == Errc::EmptyInput);
    CHECK(thrown_errc([&] { mmd_paired(none, none, spec); }) == Errc::EmptyInput);

    const std::vector<Observation> y = {Observation(2.0)};
    const std::vector<double> zero = {0.0};
    CHECK(thrown_errc([&] { mmd_weighted(x, y, zero, spec); }) == Errc::DegenerateWeights);
    const std::vector<double> neg = {-0.5};
    CHECK(thrown_errc([&] { mmd_weighted(x, y, neg, spec); }) == Errc::InvalidArgument);

    const std::vector<Observation> longer = {Observation(1.0), Observation(2.0)};
    CHECK(thrown_errc([&] { mmd_paired(x, longer, spec); }) == Errc::InvalidArgument);
}

TEST_CASE("difference gram is positive semidefinite") {
    RngStream rng(61);
    const auto x = test_support::random_block(7, 2, rng);
    const auto y = test_support::random_block(7, 2, rng);
    const KernelSpec spec(2.0, MetricKind::euclidean);
    const Matrix k11 = gram_self(x, spec);
    const Matrix k22 = gram_self(y, spec);
    const Matrix k12 = gram(x, y, spec);
    const Matrix a = paired_difference_gram(k11, k22, k12);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) CHECK(a(i, j) == a(j, i));
    CHECK(test_support::min_eigenvalue(a) >= -1e-10);
}

TEST_CASE("quadratic form agrees with a plain double loop") {
    RngStream rng(67);
    Matrix sym(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i; j < 5; ++j) sym(i, j) = sym(j, i) = rng.uniform(-1.0, 1.0);
    std::vector<double> u(5);
    for (auto& v : u) v = rng.uniform(-1.0, 1.0);
    double want = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) want += u[i] * u[j] * sym(i, j);
    CHECK(quadratic_form(sym, u) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("separated distributions score higher than matched ones") {
    RngStream rng(71);
    std::vector<Observation> near_a, near_b, far;
    for (int i = 0; i < 12; ++i) {
        near_a.push_back(Observation(rng.normal()));
        near_b.push_back(Observation(rng.normal()));
        far.push_back(Observation(rng.normal() + 6.0));
    }
    const KernelSpec spec(2.0, MetricKind::euclidean);
    CHECK(mmd_two_sample(near_a, far, spec).value > mmd_two_sample(near_a, near_b, spec).value);
}
