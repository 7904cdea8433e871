#include "mmdpair/mmd.hpp"

#include <vector>

namespace mmdpair {

double clamp_mmd(double v) {
    if (v >= 0.0) return v;
    if (v >= -1e-12) return 0.0;
    fail(Errc::InternalError, "MMD statistic below -1e-12: " + std::to_string(v));
}

Matrix paired_difference_gram(const Matrix& g11, const Matrix& g22, const Matrix& g12) {
    const std::size_t n = g11.rows();
    if (g11.cols() != n || g22.rows() != n || g22.cols() != n || g12.rows() != n || g12.cols() != n)
        fail(Errc::InvalidArgument, "paired_difference_gram: block shapes differ");
    // Fill each unordered pair once and mirror, so the result is symmetric to
    // the bit even though the two cross terms are subtracted in one order.
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = g11(i, j) + g22(i, j) - g12(i, j) - g12(j, i);
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

double quadratic_form(const Matrix& sym, std::span<const double> u) {
    const std::size_t n = sym.rows();
    if (sym.cols() != n || u.size() != n) fail(Errc::InvalidArgument, "quadratic_form: shape mismatch");
    std::vector<double> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const auto row = sym.row(i);
        for (std::size_t j = 0; j < n; ++j) s += u[j] * row[j];
        rows[i] = u[i] * s;
    }
    return pairwise_sum(rows);
}

double mmd_two_sample_from_grams(const Matrix& gaa, const Matrix& gbb, const Matrix& gab) {
    const double p = static_cast<double>(gaa.rows());
    const double q = static_cast<double>(gbb.rows());
    const double saa = pairwise_sum(gaa.flat());
    const double sbb = pairwise_sum(gbb.flat());
    const double sab = pairwise_sum(gab.flat());
    return clamp_mmd(saa / (p * p) + sbb / (q * q) - 2.0 * sab / (p * q));
}

namespace {

// Canonical ordering of the two sides so mmd_two_sample(A,B) and
// mmd_two_sample(B,A) execute the identical reduction (bit-exact symmetry).
bool side_precedes(std::span<const Observation> a, std::span<const Observation> b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto fa = a[i].flat();
        const auto fb = b[i].flat();
        if (fa.size() != fb.size()) return fa.size() < fb.size();
        for (std::size_t j = 0; j < fa.size(); ++j) {
            if (fa[j] < fb[j]) return true;
            if (fb[j] < fa[j]) return false;
        }
    }
    return false;  // equal
}

}  // namespace

MmdValue mmd_two_sample(std::span<const Observation> a, std::span<const Observation> b,
                        const KernelSpec& spec) {
    if (a.empty() || b.empty()) fail(Errc::EmptyInput, "mmd_two_sample: empty sample side");
    if (side_precedes(b, a)) std::swap(a, b);
    const Matrix gaa = gram_self(a, spec);
    const Matrix gbb = gram_self(b, spec);
    const Matrix gab = gram(a, b, spec);
    return {mmd_two_sample_from_grams(gaa, gbb, gab)};
}

MmdValue mmd_paired(std::span<const Observation> first, std::span<const Observation> second,
                    const KernelSpec& spec) {
    if (first.empty()) fail(Errc::EmptyInput, "mmd_paired: empty input");
    if (first.size() != second.size())
        fail(Errc::InvalidArgument, "mmd_paired: columns differ in length");
    const std::vector<double> w(first.size(), 1.0 / static_cast<double>(first.size()));
    return mmd_weighted(first, second, w, spec);
}

MmdValue mmd_weighted(std::span<const Observation> first, std::span<const Observation> second,
                      std::span<const double> weights, const KernelSpec& spec) {
    if (first.empty()) fail(Errc::EmptyInput, "mmd_weighted: empty input");
    if (first.size() != second.size() || weights.size() != first.size())
        fail(Errc::InvalidArgument, "mmd_weighted: columns and weights must share length");
    bool any_positive = false;
    for (double w : weights) {
        if (w < 0.0) fail(Errc::InvalidArgument, "mmd_weighted: negative weight");
        if (w > 0.0) any_positive = true;
    }
    if (!any_positive) fail(Errc::DegenerateWeights, "mmd_weighted: all weights are zero");
    const Matrix g11 = gram_self(first, spec);
    const Matrix g22 = gram_self(second, spec);
    const Matrix g12 = gram(first, second, spec);
    const Matrix a = paired_difference_gram(g11, g22, g12);
    return {clamp_mmd(quadratic_form(a, weights))};
}

}  // namespace mmdpair
