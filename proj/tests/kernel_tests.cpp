#include <cmath>

#include "doctest.h"
#include "mmdpair/kernel.hpp"
#include "mmdpair/rng.hpp"
#include "test_support.hpp"

using namespace mmdpair;
using test_support::thrown_errc;

TEST_CASE("squared euclidean distance on scalars and vectors") {
    CHECK(squared_distance(Observation(1.0), Observation(4.0), MetricKind::euclidean) == 9.0);
    const Observation u(std::vector<double>{1.0, 2.0, 3.0});
    const Observation v(std::vector<double>{2.0, 0.0, 3.0});
    CHECK(squared_distance(u, v, MetricKind::euclidean) == 5.0);
    CHECK(squared_distance(u, u, MetricKind::euclidean) == 0.0);
}

TEST_CASE("metric and observation kind must agree") {
    const Observation s(1.0);
    const Observation v(std::vector<double>{1.0, 2.0});
    auto grid = QuantileFunction::midpoint_grid(3);
    const Observation q(QuantileFunction(grid, {1.0, 2.0, 3.0}));

    CHECK(thrown_errc([&] { squared_distance(s, v, MetricKind::euclidean); }) ==
          Errc::KindMismatch);
    CHECK(thrown_errc([&] { squared_distance(q, q, MetricKind::euclidean); }) ==
          Errc::KindMismatch);
    CHECK(thrown_errc([&] { squared_distance(s, s, MetricKind::wasserstein2); }) ==
          Errc::KindMismatch);

    auto other = std::make_shared<const std::vector<double>>(std::vector<double>{0.2, 0.5, 0.8});
    const Observation q2(QuantileFunction(other, {1.0, 2.0, 3.0}));
    CHECK(thrown_errc([&] { squared_distance(q, q2, MetricKind::wasserstein2); }) ==
          Errc::GridMismatch);
}

TEST_CASE("kernel evaluation follows exp(-d^2/sigma^2)") {
    const KernelSpec spec(4.0, MetricKind::euclidean);
    CHECK(kernel_eval(Observation(0.0), Observation(2.0), spec) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(kernel_eval(Observation(3.0), Observation(3.0), spec) == 1.0);
    CHECK(thrown_errc([] { KernelSpec(0.0, MetricKind::euclidean); }) == Errc::InvalidArgument);
    CHECK(thrown_errc([] { KernelSpec(-1.0, MetricKind::euclidean); }) == Errc::InvalidArgument);
}

TEST_CASE("median heuristic matches hand enumeration") {
    // 4 points -> 6 pairwise squared distances {1,9,49,4,36,16}; even count,
    // so the mean of the central pair (9+16)/2.
    const std::vector<Observation> four = {Observation(0.0), Observation(1.0), Observation(3.0),
                                           Observation(7.0)};
    CHECK(median_heuristic(four, MetricKind::euclidean) == doctest::Approx(12.5).epsilon(1e-15));

    // 3 points -> odd count {1,9,4}; plain median 4.
    const std::vector<Observation> three = {Observation(0.0), Observation(1.0), Observation(3.0)};
    CHECK(median_heuristic(three, MetricKind::euclidean) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("median heuristic rejects degenerate data") {
    const std::vector<Observation> constant = {Observation(2.0), Observation(2.0),
                                               Observation(2.0)};
    CHECK(thrown_errc([&] { median_heuristic(constant, MetricKind::euclidean); }) ==
          Errc::DegenerateBandwidth);
    const std::vector<Observation> one = {Observation(2.0)};
    CHECK(thrown_errc([&] { median_heuristic(one, MetricKind::euclidean); }) ==
          Errc::InvalidArgument);

    // Four duplicates out of five points: 6 of the 10 pairwise distances are
    // zero, so both central order statistics are zero and the median collapses.
    const std::vector<Observation> mostly = {Observation(1.0), Observation(1.0), Observation(1.0),
                                             Observation(1.0), Observation(9.0)};
    CHECK(thrown_errc([&] { median_heuristic(mostly, MetricKind::euclidean); }) ==
          Errc::DegenerateBandwidth);

    // One short of a majority keeps it positive: 3 zeros of 6, median 32.
    const std::vector<Observation> half = {Observation(1.0), Observation(1.0), Observation(1.0),
                                           Observation(9.0)};
    CHECK(median_heuristic(half, MetricKind::euclidean) == doctest::Approx(32.0).epsilon(1e-15));
}

TEST_CASE("matrix-based median agrees with the direct heuristic") {
    RngStream rng(3);
    const auto pts = test_support::random_block(9, 3, rng);
    const Matrix d2 = squared_distance_matrix(pts, MetricKind::euclidean);
    CHECK(median_heuristic_from_matrix(d2) == median_heuristic(pts, MetricKind::euclidean));
}

TEST_CASE("distance matrix is symmetric and thread-count invariant") {
    RngStream rng(5);
    const auto pts = test_support::random_block(13, 2, rng);
    const Matrix serial = squared_distance_matrix(pts, MetricKind::euclidean, 1);
    const Matrix parallel = squared_distance_matrix(pts, MetricKind::euclidean, 4);
    REQUIRE(serial.rows() == 13);
    for (std::size_t i = 0; i < serial.rows(); ++i)
        for (std::size_t j = 0; j < serial.cols(); ++j) {
            CHECK(serial(i, j) == parallel(i, j));  // bit-identical
            CHECK(serial(i, j) == serial(j, i));
            CHECK(serial(i, j) ==
                  test_support::oracle_sq_dist(pts[i], pts[j], MetricKind::euclidean));
        }
}

TEST_CASE("gram matrix has unit diagonal and is positive semidefinite") {
    RngStream rng(17);
    const auto pts = test_support::random_block(10, 2, rng);
    const KernelSpec spec(2.0, MetricKind::euclidean);
    const Matrix k = gram_self(pts, spec);
    for (std::size_t i = 0; i < k.rows(); ++i) CHECK(k(i, i) == 1.0);  // exact
    for (std::size_t i = 0; i < k.rows(); ++i)
        for (std::size_t j = 0; j < k.cols(); ++j) {
            CHECK(k(i, j) == k(j, i));
            CHECK(k(i, j) > 0.0);
            CHECK(k(i, j) <= 1.0);
        }
    CHECK(test_support::min_eigenvalue(k) >= -1e-10);
}

TEST_CASE("rectangular gram agrees with pointwise kernel evaluation") {
    RngStream rng(23);
    const auto a = test_support::random_block(4, 2, rng);
    const auto b = test_support::random_block(6, 2, rng);
    const KernelSpec spec(3.0, MetricKind::euclidean);
    const Matrix k = gram(a, b, spec);
    REQUIRE(k.rows() == 4);
    REQUIRE(k.cols() == 6);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(k(i, j) == doctest::Approx(test_support::oracle_kernel(a[i], b[j], spec))
                                 .epsilon(1e-15));
}

TEST_CASE("block extraction copies the right window") {
    Matrix m(3, 4);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) m(i, j) = static_cast<double>(10 * i + j);
    const Matrix b = block(m, 1, 2, 2, 2);
    CHECK(b(0, 0) == 12.0);
    CHECK(b(0, 1) == 13.0);
    CHECK(b(1, 0) == 22.0);
    CHECK(b(1, 1) == 23.0);
}

TEST_CASE("wasserstein kernel path works end to end") {
    RngStream rng(29);
    auto grid = QuantileFunction::midpoint_grid(25);
    std::vector<Observation> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(test_support::random_quantile(grid, rng));
    const double sigma_sq = median_heuristic(pts, MetricKind::wasserstein2);
    CHECK(sigma_sq > 0.0);
    const KernelSpec spec(sigma_sq, MetricKind::wasserstein2);
    const Matrix k = gram_self(pts, spec);
    CHECK(test_support::min_eigenvalue(k) >= -1e-10);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
            CHECK(k(i, j) == doctest::Approx(test_support::oracle_kernel(pts[i], pts[j], spec))
                                 .epsilon(1e-14));
}
