#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mmdpair/errors.hpp"

namespace mmdpair {

// Dense row-major matrix of doubles.  Deliberately minimal: the library only
// needs storage, element access, and a handful of small solves.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> flat() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Sum in a fixed pairwise (tree) order.  Used for every reduction whose value
// is part of a reported result, so totals do not depend on how work was
// partitioned across threads and carry O(log n) rounding error.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

// Population variance (divides by n).
double variance(std::span<const double> xs);

// Solve A x = b for symmetric positive definite A via Cholesky.
// Throws DegenerateScale if a pivot is not strictly positive.
inline std::vector<double> solve_spd(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    if (n != a.cols() || b.size() != n) fail(Errc::InvalidArgument, "solve_spd: shape mismatch");
    // In-place Cholesky: a becomes L in the lower triangle.
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0)) fail(Errc::DegenerateScale, "solve_spd: matrix is not positive definite");
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / ljj;
        }
    }
    // Forward solve L y = b (into b), then back solve L^T x = y.
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
        b[i] = s / a(i, i);
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
        b[i] = s / a(i, i);
    }
    return b;
}

// Sum of (a[i]-b[i])^2, reduced in the same fixed tree order everywhere it is
// used (kernel evaluations, Gram builders, Wasserstein distances), so the
// different code paths agree bit-for-bit.
double sum_squared_diff(std::span<const double> a, std::span<const double> b);

namespace detail {
inline double ssd_range(const double* a, const double* b, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return s;
    }
    const std::size_t half = n / 2;
    return ssd_range(a, b, half) + ssd_range(a + half, b + half, n - half);
}

inline double pairwise_sum_range(const double* xs, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xs[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_range(xs, half) + pairwise_sum_range(xs + half, n - half);
}
}  // namespace detail

inline double pairwise_sum(std::span<const double> xs) {
    return detail::pairwise_sum_range(xs.data(), xs.size());
}

inline double sum_squared_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(Errc::InvalidArgument, "sum_squared_diff: length mismatch");
    return detail::ssd_range(a.data(), b.data(), a.size());
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) fail(Errc::EmptyInput, "mean of empty range");
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
    if (xs.empty()) fail(Errc::EmptyInput, "variance of empty range");
    const double m = mean(xs);
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
    return pairwise_sum(sq) / static_cast<double>(xs.size());
}

}  // namespace mmdpair
