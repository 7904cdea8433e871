#pragma once

#include <functional>
#include <optional>
#include <span>

#include "mmdpair/data_model.hpp"
#include "mmdpair/kernel.hpp"
#include "mmdpair/missingness.hpp"
#include "mmdpair/rng.hpp"

namespace mmdpair {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct McarConfig {
    std::optional<double> alpha;  // default: n1 / (n1+n2+n3)
    int bootstrap = 2000;         // B >= 1
    std::optional<double> l;      // AR(1) dependence parameter; default sqrt(n1) (1 if n1=0)
    std::uint64_t seed = 1;
    bool plus_one = false;  // p = (1+count)/(1+B) instead of count/B
    unsigned threads = 0;   // parallelism cap; never changes results
};

struct MarConfig {
    int bootstrap = 2000;
    std::optional<double> l;  // default sqrt(n1)
    std::uint64_t seed = 1;
    bool plus_one = false;
    double pi_floor = 0.01;               // clipping floor for estimated pi, in (0, 0.5)
    double ridge = 1e-6;                  // logistic ridge stabilizer
    WeightMode mode = WeightMode::raw;    // raw (1/(n pi)) or self-normalized
    unsigned threads = 0;
};

double default_alpha(const PairedDataset& ds);
double default_l(std::size_t n1);

// Resolve metric (from the observation kind when unset) and bandwidth (median
// heuristic over all observed observations when unset).
KernelSpec resolve_kernel(const PairedDataset& ds, std::optional<MetricKind> metric,
                          std::optional<double> bandwidth, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Wild bootstrap weights
// ---------------------------------------------------------------------------

// AR(1) Gaussian process: w_i = e^{-1/l} w_{i-1} + sqrt(1-e^{-2/l}) eps_i,
// with w_0 and all eps_i standard normal; returns (w_1, ..., w_n).  Each w_i
// is marginally N(0,1) with lag-1 autocorrelation e^{-1/l}.
std::vector<double> wild_weights(std::size_t n, double l, RngStream& rng);

// Deterministic variant for verification: `normal` supplies w_0 on its first
// call, then eps_1, ..., eps_n.
std::vector<double> wild_weights_with(std::size_t n, double l,
                                      const std::function<double()>& normal);

// Scale factor applied to mean-centered wild weights inside bootstrap
// replicas.  Centering w_i - w_bar removes the sample-mean leak but also
// shrinks the multipliers: averaged over positions, E[(w_i - w_bar)^2] =
// 1 - Var(w_bar), and for the AR(1) process Var(w_bar) =
// (n + 2 sum_{h<n} (n-h) e^{-h/l}) / n^2 is substantial when l is of order
// sqrt(n).  Dividing by sqrt(1 - Var(w_bar)) restores the unit second moment
// exactly (the dependent-weights analog of the Bessel correction), which
// keeps the calibration distribution on the statistic's scale.  Returns 1
// for n = 1, where the centered weight is identically zero.
double centered_wild_scale(std::size_t n, double l);

// ---------------------------------------------------------------------------
// MCAR procedure
// ---------------------------------------------------------------------------
//
// Statistic  T = alpha * T1 + (1-alpha) * T2, where T1 is the paired
// V-statistic over complete pairs and T2 the two-sample V-statistic between
// the first-only and second-only blocks.  Calibration: per replica, T1 is
// recomputed with AR(1) wild weights that are mean-centered and rescaled by
// centered_wild_scale, and T2 with a fresh random relabeling of the pooled
// incomplete observations into groups of sizes (n2, n3).  Both adjustments
// matter: without centering each replica leaks the squared sample mean and
// rejection rates collapse toward zero; without the rescale the centered
// multipliers run below unit variance and the test over-rejects.
//
// Preconditions are coefficient-weighted: alpha > 0 requires n1 >= 1, and
// alpha < 1 requires n2 >= 1 and n3 >= 1 (IncompatibleAlpha otherwise); the
// skipped side of a degenerate alpha is never touched, so alpha=0 works with
// n1=0 and alpha=1 works with no incomplete data.

double mcar_statistic(const PairedDataset& ds, const KernelSpec& spec, double alpha);

// One bootstrap replica.  Stream layout: wild weights first (n1+1 normals,
// skipped entirely when alpha=0), then the permutation shuffle (skipped when
// alpha=1).
double mcar_bootstrap_replica(const PairedDataset& ds, const KernelSpec& spec, double alpha,
                              double l, RngStream& rng);

// Replica value from explicit ingredients (verification hook): `wild` are the
// n1 raw wild weights (centered and rescaled internally, like the sampled
// path; `l` must be the dependence parameter that generated them so the
// rescale matches), `pool_order` a permutation of 0..n2+n3-1 whose first n2
// entries form the relabeled first-only group.  Pool indices refer to the
// concatenation [first_only, second_only].
double mcar_replica_given(const PairedDataset& ds, const KernelSpec& spec, double alpha,
                          double l, std::span<const double> wild,
                          std::span<const std::size_t> pool_order);

// Full test: B replicas on independent streams derived from (seed, b);
// p = #{T^b >= T}/B (ties count toward rejection), or (1+count)/(1+B) with
// plus_one.  Bit-reproducible for any thread count.
TestResult mcar_test(const PairedDataset& ds, const KernelSpec& spec, const McarConfig& config);

// Convenience overload resolving metric/bandwidth internally (single pooled
// distance-matrix pass shared between the heuristic and the Gram blocks).
TestResult mcar_test(const PairedDataset& ds, std::optional<MetricKind> metric,
                     std::optional<double> bandwidth, const McarConfig& config);

// ---------------------------------------------------------------------------
// MAR procedure
// ---------------------------------------------------------------------------
//
// Statistic T = sum_ij w~_i w~_j [k11 + k22 - 2 k12] over complete pairs with
// IPW weights w~ from `missingness`; replicas multiply the weights by AR(1)
// wild weights that are mean-centered and rescaled by centered_wild_scale,
// holding w~ fixed across replicas.
// The layout must have n3 = 0 (no second-only block) and n1 >= 2.  When every
// record is complete the observation probability is identically 1 (no model
// is fitted).

double mar_statistic(const PairedDataset& ds, std::span<const double> complete_weights,
                     const KernelSpec& spec);

TestResult mar_test(const PairedDataset& ds, const KernelSpec& spec, const MarConfig& config);
TestResult mar_test(const PairedDataset& ds, std::optional<MetricKind> metric,
                    std::optional<double> bandwidth, const MarConfig& config);

// p-value from replicas (ties rejection-side).
double p_value_from(double statistic, std::span<const double> replicas, bool plus_one);

}  // namespace mmdpair
