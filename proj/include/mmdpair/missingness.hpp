#pragma once

#include <array>
#include <span>
#include <vector>

#include "mmdpair/data_model.hpp"
#include "mmdpair/numeric.hpp"

namespace mmdpair {

// ---------------------------------------------------------------------------
// Logistic regression (ridge-stabilized IRLS)
// ---------------------------------------------------------------------------

struct LogisticModel {
    std::vector<double> beta;  // intercept first, then one slope per feature
    bool converged = false;
    int iterations = 0;
};

// Maximize the ridge-penalized Bernoulli log-likelihood by iteratively
// reweighted least squares; convergence when the max coefficient change is
// <= 1e-8, at most 100 iterations.  Errors: single-class labels ->
// DegenerateLabels; non-convergence (e.g. perfect separation with ridge=0) ->
// SeparationError advising ridge > 0.
LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels, double ridge);

// sigmoid(beta0 + beta . x)
double logistic_predict(const LogisticModel& model, std::span<const double> x);

double sigmoid(double t);

// ---------------------------------------------------------------------------
// Inverse probability weights
// ---------------------------------------------------------------------------

enum class WeightMode { raw, self_normalized };

struct IpwWeights {
    // One weight per complete pair: 1/(n * max(pi_obs, pi_floor)); under
    // self_normalized mode, rescaled to sum to exactly 1.
    std::vector<double> complete;
    // One weight per record with an observed first element (complete block
    // then first-only block); incomplete records carry 0.
    std::vector<double> per_record;
    WeightMode mode = WeightMode::raw;
    double sum = 0.0;     // sum of complete-pair weights (pre-normalization = post for raw)
    double pi_min = 1.0;  // range of clipped observation probabilities, complete pairs
    double pi_max = 1.0;
};

// Feature matrix for the observation-probability model: one row per record
// with an observed first element (complete block, then first-only block).
// User covariates when the dataset has them; otherwise automatic features of
// the first observation: the scalar itself / the vector coordinates /
// (mean, sd, skewness) of the quantile values.
Matrix pi_feature_matrix(const PairedDataset& ds);

// Labels aligned with pi_feature_matrix rows: 1 = second element observed.
std::vector<int> observation_labels(const PairedDataset& ds);

// Weights from a fitted model: predicts pi_obs on each complete pair's
// features and applies the formula above.  n is the dataset's total record
// count n1+n2+n3.
IpwWeights ipw_weights(const PairedDataset& ds, const LogisticModel& model, double pi_floor,
                       WeightMode mode);

// Same, with externally supplied observation probabilities (one per record
// with an observed first element, block order).  Used with known/true pi.
IpwWeights ipw_weights_from_probs(const PairedDataset& ds, std::span<const double> pi_obs,
                                  double pi_floor, WeightMode mode);

// (mean, sd, skewness) of the quantile values; skewness of a zero-spread
// function is defined as 0.
std::array<double, 3> quantile_summaries(const QuantileFunction& q);

}  // namespace mmdpair
