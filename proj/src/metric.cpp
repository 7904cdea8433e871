#include "mmdpair/metric.hpp"

#include <algorithm>
#include <cmath>

#include "mmdpair/numeric.hpp"

namespace mmdpair {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2*pi)
}

DensityEstimate kde_density(std::span<const double> samples, double bandwidth,
                            std::vector<double> grid) {
    if (samples.empty()) fail(Errc::EmptyInput, "kde_density: empty sample");
    if (!(bandwidth > 0.0)) fail(Errc::InvalidArgument, "kde_density: bandwidth must be > 0");
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (!(grid[g] > grid[g - 1]))
            fail(Errc::InvalidArgument, "kde_density: evaluation grid must be strictly increasing");

    const double m = static_cast<double>(samples.size());
    DensityEstimate out;
    out.bandwidth = bandwidth;
    out.values.resize(grid.size());
    std::vector<double> terms(samples.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double y = grid[g];
        for (std::size_t j = 0; j < samples.size(); ++j) {
            const double u = (samples[j] - y) / bandwidth;
            terms[j] = kInvSqrt2Pi * std::exp(-0.5 * u * u);
        }
        out.values[g] = pairwise_sum(terms) / (m * bandwidth);
    }
    out.grid = std::move(grid);
    return out;
}

double silverman_bandwidth(std::span<const double> samples) {
    if (samples.size() < 2) fail(Errc::EmptyInput, "silverman_bandwidth: need at least 2 samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = std::sqrt(variance(sorted));
    // Quartiles by the type-1 convention used throughout (order statistics).
    const std::size_t m = sorted.size();
    auto order_stat = [&](double t) {
        std::size_t r = static_cast<std::size_t>(std::ceil(t * static_cast<double>(m)));
        if (r == 0) r = 1;
        if (r > m) r = m;
        return sorted[r - 1];
    };
    const double iqr = order_stat(0.75) - order_stat(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) fail(Errc::DegenerateBandwidth, "silverman_bandwidth: sample has zero spread");
    return 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
}

QuantileFunction empirical_quantile(std::span<const double> samples,
                                    QuantileFunction::GridPtr grid) {
    if (samples.empty()) fail(Errc::EmptyInput, "empirical_quantile: empty sample");
    if (!grid) fail(Errc::InvalidArgument, "empirical_quantile: null grid");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    std::vector<double> values(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        std::size_t r = static_cast<std::size_t>(std::ceil((*grid)[i] * static_cast<double>(m)));
        if (r == 0) r = 1;  // t*m can round to 0 for tiny t; first order statistic
        if (r > m) r = m;
        values[i] = sorted[r - 1];
    }
    return QuantileFunction(std::move(grid), std::move(values));
}

double wasserstein2_sq(const QuantileFunction& f, const QuantileFunction& g) {
    if (!f.same_grid(g)) fail(Errc::GridMismatch, "wasserstein2_sq: quantile grids differ");
    const auto& fv = f.values();
    const auto& gv = g.values();
    return sum_squared_diff(fv, gv) / static_cast<double>(fv.size());
}

}  // namespace mmdpair
