#include "mmdpair/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "mmdpair/metric.hpp"
#include "mmdpair/parallel.hpp"

namespace mmdpair {

double squared_distance(const Observation& x, const Observation& y, MetricKind metric) {
    if (metric == MetricKind::euclidean) {
        if (x.kind() == ObsKind::quantile || y.kind() == ObsKind::quantile)
            fail(Errc::KindMismatch,
                 "euclidean metric on distributional observations (use wasserstein2)");
        if (x.kind() != y.kind() || x.flat().size() != y.flat().size())
            fail(Errc::KindMismatch, "euclidean distance between incompatible observations");
        return sum_squared_diff(x.flat(), y.flat());
    }
    if (x.kind() != ObsKind::quantile || y.kind() != ObsKind::quantile)
        fail(Errc::KindMismatch, "wasserstein2 metric requires quantile observations");
    return wasserstein2_sq(x.quantile(), y.quantile());
}

double kernel_eval(const Observation& x, const Observation& y, const KernelSpec& spec) {
    return std::exp(-squared_distance(x, y, spec.metric) / spec.sigma_sq);
}

namespace {

// Median of a scratch vector (consumed); mean of the two central order
// statistics for even length.
double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double checked_median(std::vector<double>&& dists) {
    const double med = median_inplace(dists);
    if (!(med > 0.0))
        fail(Errc::DegenerateBandwidth,
             "median pairwise squared distance is not positive; supply an explicit bandwidth");
    return med;
}

}  // namespace

double median_heuristic(std::span<const Observation> points, MetricKind metric) {
    const std::size_t n = points.size();
    if (n < 2) fail(Errc::InvalidArgument, "median_heuristic: need at least 2 points");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dists.push_back(squared_distance(points[i], points[j], metric));
    return checked_median(std::move(dists));
}

double median_heuristic_from_matrix(const Matrix& d2) {
    const std::size_t n = d2.rows();
    if (n != d2.cols()) fail(Errc::InvalidArgument, "median_heuristic_from_matrix: square matrix required");
    if (n < 2) fail(Errc::InvalidArgument, "median_heuristic: need at least 2 points");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dists.push_back(d2(i, j));
    return checked_median(std::move(dists));
}

Matrix squared_distance_matrix(std::span<const Observation> points, MetricKind metric,
                               unsigned threads) {
    const std::size_t n = points.size();
    Matrix d2(n, n, 0.0);
    // Validate kinds once up front so worker threads cannot race on throws.
    for (std::size_t i = 1; i < n; ++i)
        if (!points[0].compatible_with(points[i]))
            (void)squared_distance(points[0], points[i], metric);  // throws with context
    parallel_for(0, n, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = squared_distance(points[i], points[j], metric);
            d2(i, j) = d;
            d2(j, i) = d;
        }
    });
    return d2;
}

Matrix gram_from_sq_dist(const Matrix& d2, double sigma_sq) {
    if (!(sigma_sq > 0.0)) fail(Errc::InvalidArgument, "gram: sigma_sq must be > 0");
    Matrix g(d2.rows(), d2.cols());
    for (std::size_t i = 0; i < d2.rows(); ++i)
        for (std::size_t j = 0; j < d2.cols(); ++j) g(i, j) = std::exp(-d2(i, j) / sigma_sq);
    return g;
}

Matrix gram(std::span<const Observation> a, std::span<const Observation> b,
            const KernelSpec& spec) {
    if (a.data() == b.data() && a.size() == b.size()) return gram_self(a, spec);
    Matrix g(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) g(i, j) = kernel_eval(a[i], b[j], spec);
    return g;
}

Matrix gram_self(std::span<const Observation> a, const KernelSpec& spec) {
    Matrix g(a.size(), a.size(), 1.0);  // unit diagonal by construction
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const double v = kernel_eval(a[i], a[j], spec);
            g(i, j) = v;
            g(j, i) = v;
        }
    return g;
}

Matrix block(const Matrix& m, std::size_t r0, std::size_t c0, std::size_t rows,
             std::size_t cols) {
    if (r0 + rows > m.rows() || c0 + cols > m.cols())
        fail(Errc::InvalidArgument, "block: out of range");
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = m(r0 + i, c0 + j);
    return out;
}

}  // namespace mmdpair
