#pragma once

#include <span>

#include "mmdpair/data_model.hpp"
#include "mmdpair/numeric.hpp"

namespace mmdpair {

// Gaussian kernel k(x,y) = exp(-d^2(x,y) / sigma_sq) over a base metric.
struct KernelSpec {
    double sigma_sq = 1.0;
    MetricKind metric = MetricKind::euclidean;

    KernelSpec(double sigma_sq_, MetricKind metric_) : sigma_sq(sigma_sq_), metric(metric_) {
        if (!(sigma_sq > 0.0)) fail(Errc::InvalidArgument, "kernel bandwidth sigma_sq must be > 0");
    }
};

// Squared base-metric distance.  Euclidean metric requires scalar/vector
// observations; wasserstein2 requires quantile observations on a shared grid.
double squared_distance(const Observation& x, const Observation& y, MetricKind metric);

// k(x,y) = exp(-d^2/sigma_sq); always in (0,1], and 1 iff d = 0.
double kernel_eval(const Observation& x, const Observation& y, const KernelSpec& spec);

// Median of the n(n-1)/2 pairwise squared distances; for an even count of
// pairs, the mean of the two central order statistics.  Errors: fewer than 2
// points; median <= 0 (constant or majority-duplicated data) ->
// DegenerateBandwidth.
double median_heuristic(std::span<const Observation> points, MetricKind metric);

// Symmetric matrix of pairwise squared distances (rows computed in parallel
// when threads != 1; every entry depends only on its pair, so the result is
// identical for any thread count).
Matrix squared_distance_matrix(std::span<const Observation> points, MetricKind metric,
                               unsigned threads = 1);

// Median of the strict upper triangle of a symmetric squared-distance matrix;
// same convention and errors as median_heuristic.
double median_heuristic_from_matrix(const Matrix& d2);

// Entrywise exp(-d2/sigma_sq).
Matrix gram_from_sq_dist(const Matrix& d2, double sigma_sq);

// Gram matrix k(A_i, B_j).  When A and B alias the same data the result is
// symmetric with unit diagonal; gram_self enforces that by construction.
Matrix gram(std::span<const Observation> a, std::span<const Observation> b,
            const KernelSpec& spec);
Matrix gram_self(std::span<const Observation> a, const KernelSpec& spec);

// Rectangular block copy out of a larger matrix.
Matrix block(const Matrix& m, std::size_t r0, std::size_t c0, std::size_t rows,
             std::size_t cols);

}  // namespace mmdpair
