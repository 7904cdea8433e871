#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mmdpair/data_model.hpp"
#include "mmdpair/numeric.hpp"

namespace mmdpair {

// ---------------------------------------------------------------------------
// Weighted kernel clustering of complete pairs
// ---------------------------------------------------------------------------
//
// Bivariate kernel over pairs of distributional observations:
//   k((x1_a,x2_a),(x1_b,x2_b)) = exp(-(d2(x1_a,x1_b) + d2(x2_a,x2_b))/sigma_sq)
// with d2 the squared 2-Wasserstein distance.  Clustering maximizes
//   sum_i (1/v_i) * sum_{j,h in C_i} w_j w_h k(j,h),   v_i = sum_{j in C_i} w_j
// by single-pair local search with incremental cache updates.

double pair_kernel(const Observation& x1a, const Observation& x2a, const Observation& x1b,
                   const Observation& x2b, double sigma_sq);

// Median of the n(n-1)/2 summed squared distances d2(x1_j,x1_h)+d2(x2_j,x2_h);
// same conventions/errors as the univariate median heuristic.
double bivariate_median_heuristic(std::span<const Observation> first,
                                  std::span<const Observation> second);

// Full bivariate-kernel Gram matrix over the pairs.
Matrix pair_gram(std::span<const Observation> first, std::span<const Observation> second,
                 double sigma_sq, unsigned threads = 1);

struct ClusterState {
    std::vector<int> assignment;      // cluster index per clustered pair, in [0,k)
    std::size_t k = 0;
    std::vector<double> similarity;   // S_i = sum_{j,h in C_i} w_j w_h k(j,h)
    std::vector<double> weight_mass;  // v_i
    std::vector<std::size_t> counts;  // |C_i|
    double objective = 0.0;           // sum of S_i/v_i over nonempty clusters
};

// From-scratch objective for a given assignment; the reference every
// incremental update is checked against.  Errors: assignment index outside
// [0,k); weight/assignment length mismatch.
double cluster_objective(std::span<const int> assignment, std::size_t k, const Matrix& gram,
                         std::span<const double> w);
double cluster_objective(const ClusterState& state, const Matrix& gram,
                         std::span<const double> w);

// Objective change from moving pair j from cluster `from` to `to`:
//   dS = S_to+/(v_to+w_j) + S_from-/(v_from-w_j) - S_to/v_to - S_from/v_from
//   S_to+   = S_to   + 2*S_to(X_j)   + w_j^2 k(j,j)
//   S_from- = S_from - 2*S_from(X_j) + w_j^2 k(j,j)
// where S_i(X_j) = sum_{h in C_i} w_j w_h k(j,h) (including h=j when j is in
// C_i).  Empty-cluster terms S/v are defined as 0, both for an empty target
// and for a source emptied by the move.  Does not mutate state.
double delta_move(std::size_t j, int from, int to, const ClusterState& state, const Matrix& gram,
                  std::span<const double> w);

struct MoveEvent {
    std::size_t restart = 0;
    std::size_t sweep = 0;   // 1-based sweep number
    std::size_t index = 0;   // clustered-pair index moved
    int from = 0, to = 0;
    double delta = 0.0;
    double objective_after = 0.0;
};
using MoveObserver = std::function<void(const MoveEvent&)>;

struct ClusterOptions {
    std::size_t k = 2;
    std::size_t max_sweeps = 50;
    std::uint64_t seed = 1;
    std::size_t restarts = 5;            // best objective wins; ties -> lowest restart
    std::optional<double> sigma_sq;      // default: bivariate median heuristic
    unsigned threads = 0;                // parallel restarts (serial when observing)
    MoveObserver observer;               // called after every accepted move
};

struct ClusterResult {
    ClusterState state;                   // over the clustered (w>0) pairs
    std::vector<std::size_t> clustered;   // original pair indices, in order
    std::vector<std::size_t> dropped;     // zero-weight pair indices ("unassigned")
    double sigma_sq = 0.0;
    std::size_t sweeps_run = 0;           // winning restart's sweep count
    std::size_t restarts_run = 0;
    std::vector<double> trace;            // winning restart: objective at init + after each move
};

// Local search: seeded initialization (a random pair per cluster, remainder
// uniform), index-order sweeps, move to argmax_l dS when dS > 0 (ties to the
// lowest cluster index), incremental cache updates; stops on a moveless sweep
// or after max_sweeps.  Pairs with w_j = 0 are excluded and reported in
// `dropped`.  Errors: k < 1 or k exceeding the positive-weight pair count.
ClusterResult cluster(std::span<const Observation> first, std::span<const Observation> second,
                      std::span<const double> weights, const ClusterOptions& options);

}  // namespace mmdpair
