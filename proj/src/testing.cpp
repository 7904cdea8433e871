#include "mmdpair/testing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmdpair/mmd.hpp"
#include "mmdpair/parallel.hpp"

namespace mmdpair {

double default_alpha(const PairedDataset& ds) {
    if (ds.n() == 0) fail(Errc::EmptyInput, "default_alpha: empty dataset");
    return static_cast<double>(ds.n1()) / static_cast<double>(ds.n());
}

double default_l(std::size_t n1) {
    return n1 >= 1 ? std::sqrt(static_cast<double>(n1)) : 1.0;
}

KernelSpec resolve_kernel(const PairedDataset& ds, std::optional<MetricKind> metric,
                          std::optional<double> bandwidth, unsigned threads) {
    const MetricKind m = metric.value_or(
        ds.kind() == ObsKind::quantile ? MetricKind::wasserstein2 : MetricKind::euclidean);
    if (bandwidth) return KernelSpec(*bandwidth, m);
    const auto pooled = ds.pooled_observed();
    const Matrix d2 = squared_distance_matrix(pooled, m, threads);
    return KernelSpec(median_heuristic_from_matrix(d2), m);
}

// ---------------------------------------------------------------------------
// Wild bootstrap weights
// ---------------------------------------------------------------------------

std::vector<double> wild_weights_with(std::size_t n, double l,
                                      const std::function<double()>& normal) {
    if (n < 1) fail(Errc::InvalidArgument, "wild_weights: need n >= 1");
    if (!(l > 0.0)) fail(Errc::InvalidArgument, "wild_weights: l must be > 0");
    const double a = std::exp(-1.0 / l);
    const double s = std::sqrt(1.0 - std::exp(-2.0 / l));
    double w = normal();  // w_0
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        w = a * w + s * normal();
        out[i] = w;
    }
    return out;
}

std::vector<double> wild_weights(std::size_t n, double l, RngStream& rng) {
    return wild_weights_with(n, l, [&rng] { return rng.normal(); });
}

double centered_wild_scale(std::size_t n, double l) {
    if (n < 1) fail(Errc::InvalidArgument, "centered_wild_scale: need n >= 1");
    if (!(l > 0.0)) fail(Errc::InvalidArgument, "centered_wild_scale: l must be > 0");
    if (n == 1) return 1.0;
    // Var(w_bar) = (n + 2 sum_{h=1}^{n-1} (n-h) rho^h) / n^2 with rho = e^{-1/l}.
    const double rho = std::exp(-1.0 / l);
    double sum = static_cast<double>(n);
    double pow = 1.0;
    for (std::size_t h = 1; h < n; ++h) {
        pow *= rho;
        sum += 2.0 * static_cast<double>(n - h) * pow;
    }
    const double var_mean = sum / (static_cast<double>(n) * static_cast<double>(n));
    return 1.0 / std::sqrt(std::max(1.0 - var_mean, 1e-12));
}

// ---------------------------------------------------------------------------
// MCAR engine
// ---------------------------------------------------------------------------

namespace {

// Precomputed state for one dataset/kernel/alpha: the complete-block
// difference Gram for the wild part and the pooled incomplete Gram for the
// permutation part.  Immutable after construction; replica() is const and
// safe to call concurrently with distinct streams.
class McarEngine {
public:
    McarEngine(const PairedDataset& ds, MetricKind metric, std::optional<double> bandwidth,
               double alpha, double l, unsigned threads)
        : alpha_(alpha), l_(l), n1_(ds.n1()), n2_(ds.n2()), n3_(ds.n3()),
          wild_scale_(n1_ >= 1 && l > 0.0 ? centered_wild_scale(n1_, l) : 1.0) {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            fail(Errc::InvalidArgument, "alpha must lie in [0,1]");
        if (alpha > 0.0 && n1_ == 0)
            fail(Errc::IncompatibleAlpha, "alpha > 0 requires complete pairs (n1 >= 1)");
        if (alpha < 1.0 && (n2_ == 0 || n3_ == 0))
            fail(Errc::IncompatibleAlpha,
                 "alpha < 1 requires both incomplete blocks (n2 >= 1 and n3 >= 1)");
        if (!(l > 0.0)) fail(Errc::InvalidArgument, "l must be > 0");

        // One pooled distance pass feeds the bandwidth heuristic and every
        // Gram block: pooled order is [complete 1st | complete 2nd |
        // first-only | second-only].
        const auto pooled = ds.pooled_observed();
        const Matrix d2 = squared_distance_matrix(pooled, metric, threads);
        sigma_sq_ = bandwidth ? *bandwidth : median_heuristic_from_matrix(d2);
        if (!(sigma_sq_ > 0.0)) fail(Errc::InvalidArgument, "bandwidth sigma_sq must be > 0");
        const KernelSpec spec(sigma_sq_, metric);

        if (alpha > 0.0) {
            const Matrix k11 = gram_from_sq_dist(block(d2, 0, 0, n1_, n1_), sigma_sq_);
            const Matrix k22 = gram_from_sq_dist(block(d2, n1_, n1_, n1_, n1_), sigma_sq_);
            const Matrix k12 = gram_from_sq_dist(block(d2, 0, n1_, n1_, n1_), sigma_sq_);
            a_sym_ = paired_difference_gram(k11, k22, k12);
            std::vector<double> uniform(n1_, 1.0 / static_cast<double>(n1_));
            t1_ = clamp_mmd(quadratic_form(a_sym_, uniform));
        }
        if (alpha < 1.0) {
            const std::size_t off = 2 * n1_;
            const std::size_t q = n2_ + n3_;
            g_inc_ = gram_from_sq_dist(block(d2, off, off, q, q), sigma_sq_);
            s_tot_ = pairwise_sum(g_inc_.flat());
            // The reported T2 runs through the public two-sample path so the
            // alpha=0 statistic matches mmd_two_sample bit-for-bit.
            t2_ = mmd_two_sample(ds.first_only(), ds.second_only(), spec).value;
        }
        statistic_ = combine(t1_, t2_);
    }

    double statistic() const noexcept { return statistic_; }
    double sigma_sq() const noexcept { return sigma_sq_; }
    double l_param() const noexcept { return l_; }
    double alpha() const noexcept { return alpha_; }

    double t1_replica(std::span<const double> wild) const {
        if (wild.size() != n1_) fail(Errc::InvalidArgument, "wild weight count must equal n1");
        // Center the multipliers so they sum to zero — otherwise each replica
        // leaks the squared sample mean and the calibration distribution
        // dwarfs the statistic — then rescale so their second moment is unit
        // again, since centering alone deflates it by Var(w_bar) and the
        // deflated replicas over-reject.
        double mean = 0.0;
        for (double w : wild) mean += w;
        mean /= static_cast<double>(n1_);
        std::vector<double> u(n1_);
        for (std::size_t i = 0; i < n1_; ++i)
            u[i] = wild_scale_ * (wild[i] - mean) / static_cast<double>(n1_);
        return clamp_mmd(quadratic_form(a_sym_, u));
    }

    double t2_replica(std::span<const std::size_t> order) const {
        const std::size_t q = n2_ + n3_;
        if (order.size() != q) fail(Errc::InvalidArgument, "pool order must cover n2+n3 entries");
        double saa = 0.0;
        for (std::size_t i = 0; i < n2_; ++i) {
            const auto row = g_inc_.row(order[i]);
            for (std::size_t j = 0; j < n2_; ++j) saa += row[order[j]];
        }
        double sbb = 0.0;
        for (std::size_t i = n2_; i < q; ++i) {
            const auto row = g_inc_.row(order[i]);
            for (std::size_t j = n2_; j < q; ++j) sbb += row[order[j]];
        }
        const double p = static_cast<double>(n2_);
        const double r = static_cast<double>(n3_);
        const double cross = (s_tot_ - saa - sbb) / 2.0;
        return clamp_mmd(saa / (p * p) + sbb / (r * r) - 2.0 * cross / (p * r));
    }

    double combine(double x1, double x2) const {
        if (alpha_ == 1.0) return x1;
        if (alpha_ == 0.0) return x2;
        return alpha_ * x1 + (1.0 - alpha_) * x2;
    }

    // Stream layout per replica: wild weights first (alpha > 0 only), then
    // the incomplete-pool shuffle (alpha < 1 only).
    double replica(RngStream& rng) const {
        double x1 = 0.0, x2 = 0.0;
        if (alpha_ > 0.0) {
            const auto wild = wild_weights(n1_, l_, rng);
            x1 = t1_replica(wild);
        }
        if (alpha_ < 1.0) {
            std::vector<std::size_t> order(n2_ + n3_);
            std::iota(order.begin(), order.end(), std::size_t{0});
            rng.shuffle(std::span<std::size_t>(order));
            x2 = t2_replica(order);
        }
        return combine(x1, x2);
    }

private:
    double alpha_;
    double l_;
    std::size_t n1_, n2_, n3_;
    double wild_scale_ = 1.0;
    double sigma_sq_ = 1.0;
    Matrix a_sym_;
    Matrix g_inc_;
    double s_tot_ = 0.0;
    double t1_ = 0.0, t2_ = 0.0, statistic_ = 0.0;
};

void check_permutation(std::span<const std::size_t> order, std::size_t q) {
    if (order.size() != q) fail(Errc::InvalidArgument, "pool order must cover n2+n3 entries");
    std::vector<char> seen(q, 0);
    for (std::size_t v : order) {
        if (v >= q || seen[v]) fail(Errc::InvalidArgument, "pool order is not a permutation");
        seen[v] = 1;
    }
}

}  // namespace

double p_value_from(double statistic, std::span<const double> replicas, bool plus_one) {
    if (replicas.empty()) fail(Errc::InvalidArgument, "p_value_from: no replicas");
    std::size_t count = 0;
    for (double r : replicas)
        if (r >= statistic) ++count;
    const double b = static_cast<double>(replicas.size());
    if (plus_one) return (1.0 + static_cast<double>(count)) / (1.0 + b);
    return static_cast<double>(count) / b;
}

double mcar_statistic(const PairedDataset& ds, const KernelSpec& spec, double alpha) {
    McarEngine engine(ds, spec.metric, spec.sigma_sq, alpha, 1.0, 0);
    return engine.statistic();
}

double mcar_bootstrap_replica(const PairedDataset& ds, const KernelSpec& spec, double alpha,
                              double l, RngStream& rng) {
    McarEngine engine(ds, spec.metric, spec.sigma_sq, alpha, l, 0);
    return engine.replica(rng);
}

double mcar_replica_given(const PairedDataset& ds, const KernelSpec& spec, double alpha,
                          double l, std::span<const double> wild,
                          std::span<const std::size_t> pool_order) {
    McarEngine engine(ds, spec.metric, spec.sigma_sq, alpha, l, 0);
    double x1 = 0.0, x2 = 0.0;
    if (alpha > 0.0) x1 = engine.t1_replica(wild);
    if (alpha < 1.0) {
        check_permutation(pool_order, ds.n2() + ds.n3());
        x2 = engine.t2_replica(pool_order);
    }
    return engine.combine(x1, x2);
}

namespace {

TestResult mcar_test_impl(const PairedDataset& ds, MetricKind metric,
                          std::optional<double> bandwidth, const McarConfig& config) {
    if (config.bootstrap < 1) fail(Errc::InvalidArgument, "bootstrap count must be >= 1");
    const double alpha = config.alpha.value_or(default_alpha(ds));
    const double l = config.l.value_or(default_l(ds.n1()));
    const McarEngine engine(ds, metric, bandwidth, alpha, l, config.threads);

    const std::size_t b = static_cast<std::size_t>(config.bootstrap);
    std::vector<double> replicas(b);
    parallel_for(0, b, config.threads, [&](std::size_t i) {
        RngStream stream(RngStream::derive(config.seed, i));
        replicas[i] = engine.replica(stream);
    });

    TestResult res;
    res.statistic = engine.statistic();
    res.p_value = p_value_from(res.statistic, replicas, config.plus_one);
    res.replicas = std::move(replicas);
    res.alpha = alpha;
    res.bootstrap = config.bootstrap;
    res.l_param = l;
    res.sigma_sq = engine.sigma_sq();
    res.metric = metric;
    res.seed = config.seed;
    res.plus_one = config.plus_one;
    res.n1 = ds.n1();
    res.n2 = ds.n2();
    res.n3 = ds.n3();
    return res;
}

}  // namespace

TestResult mcar_test(const PairedDataset& ds, const KernelSpec& spec, const McarConfig& config) {
    return mcar_test_impl(ds, spec.metric, spec.sigma_sq, config);
}

TestResult mcar_test(const PairedDataset& ds, std::optional<MetricKind> metric,
                     std::optional<double> bandwidth, const McarConfig& config) {
    const MetricKind m = metric.value_or(
        ds.kind() == ObsKind::quantile ? MetricKind::wasserstein2 : MetricKind::euclidean);
    return mcar_test_impl(ds, m, bandwidth, config);
}

// ---------------------------------------------------------------------------
// MAR procedure
// ---------------------------------------------------------------------------

double mar_statistic(const PairedDataset& ds, std::span<const double> complete_weights,
                     const KernelSpec& spec) {
    if (complete_weights.size() != ds.n1())
        fail(Errc::InvalidArgument, "mar_statistic: one weight per complete pair required");
    return mmd_weighted(ds.complete_first(), ds.complete_second(), complete_weights, spec).value;
}

namespace {

TestResult mar_test_impl(const PairedDataset& ds, MetricKind metric,
                         std::optional<double> bandwidth, const MarConfig& config) {
    if (ds.n3() > 0)
        fail(Errc::IncompatibleLayout,
             "MAR layout admits no second-only block (n3 must be 0)");
    if (ds.n1() < 2) fail(Errc::InvalidArgument, "MAR test needs at least 2 complete pairs");
    if (config.bootstrap < 1) fail(Errc::InvalidArgument, "bootstrap count must be >= 1");
    if (!(config.pi_floor > 0.0 && config.pi_floor < 0.5))
        fail(Errc::InvalidArgument, "pi_floor must lie in (0, 0.5)");
    const double l = config.l.value_or(default_l(ds.n1()));
    if (!(l > 0.0)) fail(Errc::InvalidArgument, "l must be > 0");

    // Observation-probability model and IPW weights (held fixed across
    // replicas).  With no missing second elements there is nothing to fit:
    // pi is identically 1 and the weights reduce to 1/n.
    MarDetails details;
    details.self_normalized = config.mode == WeightMode::self_normalized;
    details.pi_floor = config.pi_floor;
    details.ridge = config.ridge;
    IpwWeights ipw;
    if (ds.n2() == 0) {
        const std::vector<double> ones(ds.n1(), 1.0);
        ipw = ipw_weights_from_probs(ds, ones, config.pi_floor, config.mode);
    } else {
        const Matrix feats = pi_feature_matrix(ds);
        const auto labels = observation_labels(ds);
        const LogisticModel model = fit_logistic(feats, labels, config.ridge);
        details.logistic_fitted = true;
        details.logistic_converged = model.converged;
        details.logistic_iterations = model.iterations;
        ipw = ipw_weights(ds, model, config.pi_floor, config.mode);
    }
    details.weight_sum = ipw.sum;
    details.pi_min = ipw.pi_min;
    details.pi_max = ipw.pi_max;

    // Pooled distance pass (complete pairs + first-only block) for bandwidth
    // and the complete-block difference Gram.
    const auto pooled = ds.pooled_observed();
    const Matrix d2 = squared_distance_matrix(pooled, metric, config.threads);
    const double sigma_sq = bandwidth ? *bandwidth : median_heuristic_from_matrix(d2);
    if (!(sigma_sq > 0.0)) fail(Errc::InvalidArgument, "bandwidth sigma_sq must be > 0");
    const std::size_t n1 = ds.n1();
    const Matrix k11 = gram_from_sq_dist(block(d2, 0, 0, n1, n1), sigma_sq);
    const Matrix k22 = gram_from_sq_dist(block(d2, n1, n1, n1, n1), sigma_sq);
    const Matrix k12 = gram_from_sq_dist(block(d2, 0, n1, n1, n1), sigma_sq);
    const Matrix a_sym = paired_difference_gram(k11, k22, k12);

    const double statistic = clamp_mmd(quadratic_form(a_sym, ipw.complete));

    const std::size_t b = static_cast<std::size_t>(config.bootstrap);
    const double wild_scale = centered_wild_scale(n1, l);
    std::vector<double> replicas(b);
    parallel_for(0, b, config.threads, [&](std::size_t i) {
        RngStream stream(RngStream::derive(config.seed, i));
        const auto wild = wild_weights(n1, l, stream);
        // Same adjustment as the paired-block replica: center the multipliers
        // to zero sum (kills the sample-mean leak that would dwarf the
        // statistic), then restore their unit second moment (centering alone
        // deflates it and the test would over-reject).
        double mean = 0.0;
        for (double w : wild) mean += w;
        mean /= static_cast<double>(n1);
        std::vector<double> u(n1);
        for (std::size_t j = 0; j < n1; ++j)
            u[j] = wild_scale * (wild[j] - mean) * ipw.complete[j];
        replicas[i] = clamp_mmd(quadratic_form(a_sym, u));
    });

    TestResult res;
    res.statistic = statistic;
    res.p_value = p_value_from(statistic, replicas, config.plus_one);
    res.replicas = std::move(replicas);
    res.alpha = 1.0;  // complete-block statistic; no two-sample part
    res.bootstrap = config.bootstrap;
    res.l_param = l;
    res.sigma_sq = sigma_sq;
    res.metric = metric;
    res.seed = config.seed;
    res.plus_one = config.plus_one;
    res.n1 = ds.n1();
    res.n2 = ds.n2();
    res.n3 = ds.n3();
    res.mar = details;
    return res;
}

}  // namespace

TestResult mar_test(const PairedDataset& ds, const KernelSpec& spec, const MarConfig& config) {
    return mar_test_impl(ds, spec.metric, spec.sigma_sq, config);
}

TestResult mar_test(const PairedDataset& ds, std::optional<MetricKind> metric,
                    std::optional<double> bandwidth, const MarConfig& config) {
    const MetricKind m = metric.value_or(
        ds.kind() == ObsKind::quantile ? MetricKind::wasserstein2 : MetricKind::euclidean);
    return mar_test_impl(ds, m, bandwidth, config);
}

}  // namespace mmdpair
