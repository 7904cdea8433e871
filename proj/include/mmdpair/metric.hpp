#pragma once

#include <span>
#include <vector>

#include "mmdpair/data_model.hpp"

namespace mmdpair {

// Gaussian kernel density estimate evaluated on a fixed grid.
struct DensityEstimate {
    std::vector<double> grid;    // strictly increasing evaluation points
    std::vector<double> values;  // f_hat(grid[g]) >= 0
    double bandwidth = 0.0;      // h > 0
};

// f_hat(y) = (1/(m*h)) * sum_j phi((Y_j - y)/h), phi the standard normal
// density.  Errors: empty sample, nonpositive bandwidth, non-increasing grid.
DensityEstimate kde_density(std::span<const double> samples, double bandwidth,
                            std::vector<double> grid);

// Silverman's rule-of-thumb bandwidth: 0.9 * min(sd, IQR/1.34) * m^(-1/5).
// Errors: fewer than 2 samples or zero spread.
double silverman_bandwidth(std::span<const double> samples);

// Left-continuous (type-1) inverse of the empirical CDF on the given grid:
// Q_hat(t) = the ceil(t*m)-th order statistic of the m samples.
QuantileFunction empirical_quantile(std::span<const double> samples,
                                    QuantileFunction::GridPtr grid);

// Squared 2-Wasserstein distance between two quantile functions on a shared
// grid: the mean of squared value differences (midpoint quadrature of
// the squared L2 distance between quantile functions).
double wasserstein2_sq(const QuantileFunction& f, const QuantileFunction& g);

}  // namespace mmdpair
