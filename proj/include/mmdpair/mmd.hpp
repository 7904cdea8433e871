#pragma once

#include <span>

#include "mmdpair/kernel.hpp"

namespace mmdpair {

// Value of an MMD V-statistic.  Nonnegative by construction; tiny negative
// round-off (>= -1e-12) is clamped to 0, anything more negative indicates a
// bug and raises InternalError.
struct MmdValue {
    double value = 0.0;
};

// Clamp rule shared by all statistics.
double clamp_mmd(double v);

// Biased two-sample V-statistic (diagonals included):
//   (1/p^2) sum k(a,a') + (1/q^2) sum k(b,b') - (2/(pq)) sum k(a,b).
// Symmetric in (A,B) bit-for-bit: the two sides are ordered canonically
// before computing, so both argument orders run the identical reduction.
MmdValue mmd_two_sample(std::span<const Observation> a, std::span<const Observation> b,
                        const KernelSpec& spec);

// Paired-combined V-statistic over n1 matched pairs:
//   (1/n1^2) sum_ij [k(x1_i,x1_j) + k(x2_i,x2_j) - 2 k(x1_i,x2_j)].
// Implemented as mmd_weighted with uniform weights 1/n1, which it therefore
// equals exactly.
MmdValue mmd_paired(std::span<const Observation> first, std::span<const Observation> second,
                    const KernelSpec& spec);

// Weighted V-statistic:
//   sum_ij w_i w_j [k(x1_i,x1_j) + k(x2_i,x2_j) - 2 k(x1_i,x2_j)].
// Weights must be nonnegative with at least one positive.
MmdValue mmd_weighted(std::span<const Observation> first, std::span<const Observation> second,
                      std::span<const double> weights, const KernelSpec& spec);

// --- Gram-level cores (shared by the statistics above and the bootstrap) ---

// Symmetrized difference Gram A = K11 + K22 - K12 - K12^T.  This is the Gram
// matrix of the feature differences phi(x1_i) - phi(x2_i), hence positive
// semidefinite, which keeps every quadratic form below nonnegative.
Matrix paired_difference_gram(const Matrix& g11, const Matrix& g22, const Matrix& g12);

// sum_ij u_i u_j sym(i,j), reduced row-by-row then by pairwise tree.
double quadratic_form(const Matrix& sym, std::span<const double> u);

// Two-sample statistic from precomputed Gram blocks.
double mmd_two_sample_from_grams(const Matrix& gaa, const Matrix& gbb, const Matrix& gab);

}  // namespace mmdpair
