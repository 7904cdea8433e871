#include "mmdpair/missingness.hpp"

#include <algorithm>
#include <cmath>

namespace mmdpair {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

LogisticModel fit_logistic(const Matrix& features, std::span<const int> labels, double ridge) {
    const std::size_t n = features.rows();
    const std::size_t p = features.cols();
    if (labels.size() != n) fail(Errc::InvalidArgument, "fit_logistic: label count mismatch");
    if (ridge < 0.0) fail(Errc::InvalidArgument, "fit_logistic: ridge must be >= 0");
    if (n < p + 1) fail(Errc::InvalidArgument, "fit_logistic: need at least p+1 observations");
    bool any0 = false, any1 = false;
    for (int y : labels) {
        if (y != 0 && y != 1) fail(Errc::InvalidArgument, "fit_logistic: labels must be 0/1");
        (y ? any1 : any0) = true;
    }
    if (!any0 || !any1) fail(Errc::DegenerateLabels, "fit_logistic: labels contain a single class");

    const std::size_t d = p + 1;  // intercept + slopes
    std::vector<double> beta(d, 0.0);
    std::vector<double> eta(n), mu(n);
    constexpr double kTol = 1e-8;
    constexpr int kMaxIter = 100;
    constexpr double kMuClip = 1e-10;

    LogisticModel model;
    for (int iter = 1; iter <= kMaxIter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double e = beta[0];
            const auto row = features.row(i);
            for (std::size_t j = 0; j < p; ++j) e += beta[j + 1] * row[j];
            eta[i] = e;
            mu[i] = std::clamp(sigmoid(e), kMuClip, 1.0 - kMuClip);
        }
        // Normal equations of the weighted least-squares step:
        //   (D^T W D + ridge I) beta_new = D^T W z,  z = eta + (y - mu)/w.
        Matrix a(d, d, 0.0);
        std::vector<double> rhs(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = mu[i] * (1.0 - mu[i]);
            const double z = eta[i] + (static_cast<double>(labels[i]) - mu[i]) / w;
            const auto row = features.row(i);
            auto dj = [&](std::size_t j) { return j == 0 ? 1.0 : row[j - 1]; };
            for (std::size_t j = 0; j < d; ++j) {
                const double wdj = w * dj(j);
                rhs[j] += wdj * z;
                for (std::size_t k = j; k < d; ++k) a(j, k) += wdj * dj(k);
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            a(j, j) += ridge;
            for (std::size_t k = j + 1; k < d; ++k) a(k, j) = a(j, k);
        }
        std::vector<double> beta_new = solve_spd(std::move(a), rhs);
        double delta = 0.0;
        for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::abs(beta_new[j] - beta[j]));
        beta = std::move(beta_new);
        if (delta <= kTol) {
            for (double b : beta)
                if (!std::isfinite(b))
                    fail(Errc::SeparationError, "fit_logistic: non-finite coefficients");
            model.beta = std::move(beta);
            model.converged = true;
            model.iterations = iter;
            return model;
        }
    }
    fail(Errc::SeparationError,
         ridge == 0.0
             ? "fit_logistic: no convergence in 100 iterations (perfect separation?); set ridge > 0"
             : "fit_logistic: no convergence in 100 iterations; increase ridge");
}

double logistic_predict(const LogisticModel& model, std::span<const double> x) {
    if (model.beta.size() != x.size() + 1)
        fail(Errc::InvalidArgument, "logistic_predict: feature width mismatch");
    double e = model.beta[0];
    for (std::size_t j = 0; j < x.size(); ++j) e += model.beta[j + 1] * x[j];
    return sigmoid(e);
}

std::array<double, 3> quantile_summaries(const QuantileFunction& q) {
    const auto& v = q.values();
    const double m = mean(v);
    const double var = variance(v);
    const double sd = std::sqrt(var);
    double skew = 0.0;
    if (sd > 0.0) {
        std::vector<double> cubes(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double c = (v[i] - m) / sd;
            cubes[i] = c * c * c;
        }
        skew = pairwise_sum(cubes) / static_cast<double>(v.size());
    }
    return {m, sd, skew};
}

namespace {

std::vector<double> auto_features(const Observation& x) {
    switch (x.kind()) {
        case ObsKind::scalar: return {x.scalar()};
        case ObsKind::vector: return x.vector();
        case ObsKind::quantile: {
            const auto s = quantile_summaries(x.quantile());
            return {s[0], s[1], s[2]};
        }
    }
    return {};
}

}  // namespace

Matrix pi_feature_matrix(const PairedDataset& ds) {
    const std::size_t rows = ds.n1() + ds.n2();
    if (rows == 0) fail(Errc::EmptyInput, "pi_feature_matrix: no records with observed first element");
    std::vector<std::vector<double>> feat;
    feat.reserve(rows);
    if (ds.has_covariates()) {
        for (const auto& r : ds.covariates_complete()) feat.push_back(r);
        for (const auto& r : ds.covariates_first_only()) feat.push_back(r);
    } else {
        for (const auto& x : ds.complete_first()) feat.push_back(auto_features(x));
        for (const auto& x : ds.first_only()) feat.push_back(auto_features(x));
    }
    Matrix m(rows, feat.front().size());
    for (std::size_t i = 0; i < rows; ++i) {
        if (feat[i].size() != m.cols())
            fail(Errc::InvalidArgument, "pi_feature_matrix: ragged feature rows");
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = feat[i][j];
    }
    return m;
}

std::vector<int> observation_labels(const PairedDataset& ds) {
    std::vector<int> y;
    y.reserve(ds.n1() + ds.n2());
    y.insert(y.end(), ds.n1(), 1);
    y.insert(y.end(), ds.n2(), 0);
    return y;
}

namespace {

IpwWeights weights_from_pi_complete(const PairedDataset& ds, std::vector<double> pi_complete,
                                    double pi_floor, WeightMode mode) {
    if (pi_floor < 0.0 || pi_floor >= 0.5)
        fail(Errc::InvalidArgument, "ipw_weights: pi_floor must lie in [0, 0.5)");
    const double n = static_cast<double>(ds.n());
    IpwWeights out;
    out.mode = mode;
    out.complete.resize(ds.n1());
    double lo = 1.0, hi = 0.0;
    for (std::size_t j = 0; j < ds.n1(); ++j) {
        const double pi = pi_complete[j];
        if (!(pi > 0.0) || pi > 1.0)
            fail(Errc::InvalidArgument, "ipw_weights: observation probabilities must lie in (0,1]");
        const double clipped = std::max(pi, pi_floor);
        lo = std::min(lo, clipped);
        hi = std::max(hi, clipped);
        out.complete[j] = 1.0 / (n * clipped);
    }
    if (ds.n1() == 0) fail(Errc::DegenerateWeights, "ipw_weights: no complete pairs");
    out.pi_min = lo;
    out.pi_max = hi;
    out.sum = pairwise_sum(out.complete);
    if (mode == WeightMode::self_normalized) {
        if (!(out.sum > 0.0)) fail(Errc::DegenerateWeights, "ipw_weights: zero weight mass");
        for (double& w : out.complete) w /= out.sum;
    }
    out.per_record.assign(ds.n(), 0.0);
    for (std::size_t j = 0; j < ds.n1(); ++j) out.per_record[j] = out.complete[j];
    return out;
}

}  // namespace

IpwWeights ipw_weights(const PairedDataset& ds, const LogisticModel& model, double pi_floor,
                       WeightMode mode) {
    const Matrix feats = pi_feature_matrix(ds);
    std::vector<double> pi(ds.n1());
    for (std::size_t j = 0; j < ds.n1(); ++j) pi[j] = logistic_predict(model, feats.row(j));
    return weights_from_pi_complete(ds, std::move(pi), pi_floor, mode);
}

IpwWeights ipw_weights_from_probs(const PairedDataset& ds, std::span<const double> pi_obs,
                                  double pi_floor, WeightMode mode) {
    if (pi_obs.size() != ds.n1() + ds.n2())
        fail(Errc::InvalidArgument,
             "ipw_weights_from_probs: need one probability per record with observed first element");
    std::vector<double> pi(pi_obs.begin(), pi_obs.begin() + static_cast<std::ptrdiff_t>(ds.n1()));
    return weights_from_pi_complete(ds, std::move(pi), pi_floor, mode);
}

}  // namespace mmdpair
