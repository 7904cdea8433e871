#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mmdpair/mmd.hpp"
#include "mmdpair/testing.hpp"
#include "test_support.hpp"

using namespace mmdpair;
using test_support::thrown_errc;

namespace {

PairedDataset scalar_dataset(std::size_t n1, std::size_t n2, std::size_t n3, RngStream& rng,
                             double second_shift = 0.0) {
    std::vector<Observation> cf, cs, fo, so;
    for (std::size_t i = 0; i < n1; ++i) {
        cf.push_back(Observation(rng.normal()));
        cs.push_back(Observation(rng.normal() + second_shift));
    }
    for (std::size_t i = 0; i < n2; ++i) fo.push_back(Observation(rng.normal()));
    for (std::size_t i = 0; i < n3; ++i) so.push_back(Observation(rng.normal() + second_shift));
    return make_dataset(std::move(cf), std::move(cs), std::move(fo), std::move(so));
}

}  // namespace

TEST_CASE("wild weights with silenced noise decay geometrically") {
    const double l = 2.0;
    int calls = 0;
    const auto w = wild_weights_with(6, l, [&] { return calls++ == 0 ? 1.0 : 0.0; });
    REQUIRE(w.size() == 6);
    for (std::size_t i = 0; i < w.size(); ++i)
        CHECK(w[i] ==
              doctest::Approx(std::exp(-static_cast<double>(i + 1) / l)).epsilon(1e-12));
    CHECK(calls == 7);  // w_0 plus one innovation per step
}

TEST_CASE("wild weights are marginally standard normal with AR(1) memory") {
    const double l = 5.0;
    const std::size_t n = 40, seqs = 4000;
    std::vector<std::vector<double>> all(seqs);
    RngStream rng(7);
    for (auto& seq : all) seq = wild_weights(n, l, rng);

    for (std::size_t i = 0; i < n; i += 13) {
        std::vector<double> slice(seqs);
        for (std::size_t s = 0; s < seqs; ++s) slice[s] = all[s][i];
        CHECK(test_support::mean_of(slice) == doctest::Approx(0.0).scale(1.0).epsilon(0.06));
        CHECK(test_support::variance_of(slice) == doctest::Approx(1.0).epsilon(0.1));
    }

    double num = 0.0, den = 0.0;
    for (const auto& seq : all)
        for (std::size_t i = 0; i + 1 < n; ++i) {
            num += seq[i] * seq[i + 1];
            den += seq[i] * seq[i];
        }
    CHECK(num / den == doctest::Approx(std::exp(-1.0 / l)).epsilon(0.05));
}

TEST_CASE("defaults: combination weight and dependence parameter") {
    RngStream rng(5);
    const PairedDataset ds = scalar_dataset(3, 1, 1, rng);
    CHECK(default_alpha(ds) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(default_l(9) == 3.0);
    CHECK(default_l(0) == 1.0);  // no pairs: neutral decay
}

TEST_CASE("kernel resolution picks the metric from the data kind") {
    RngStream rng(11);
    const PairedDataset scalars = scalar_dataset(4, 2, 2, rng);
    const KernelSpec a = resolve_kernel(scalars, std::nullopt, std::nullopt);
    CHECK(a.metric == MetricKind::euclidean);
    CHECK(a.sigma_sq > 0.0);

    const KernelSpec b = resolve_kernel(scalars, std::nullopt, 7.5);
    CHECK(b.sigma_sq == 7.5);

    auto grid = QuantileFunction::midpoint_grid(12);
    std::vector<Observation> cf, cs;
    for (int i = 0; i < 4; ++i) {
        cf.push_back(test_support::random_quantile(grid, rng));
        cs.push_back(test_support::random_quantile(grid, rng));
    }
    const PairedDataset quants = make_dataset(std::move(cf), std::move(cs), {}, {});
    CHECK(resolve_kernel(quants, std::nullopt, std::nullopt).metric == MetricKind::wasserstein2);
}

TEST_CASE("combined statistic reduces to its ends exactly") {
    RngStream rng(13);
    const PairedDataset ds = scalar_dataset(6, 4, 3, rng);
    const KernelSpec spec(2.0, MetricKind::euclidean);

    const double t1 = mmd_paired(ds.complete_first(), ds.complete_second(), spec).value;
    const double t2 = mmd_two_sample(ds.first_only(), ds.second_only(), spec).value;

    CHECK(mcar_statistic(ds, spec, 1.0) == t1);  // bit-exact reduction
    CHECK(mcar_statistic(ds, spec, 0.0) == t2);
    CHECK(mcar_statistic(ds, spec, 0.3) == 0.3 * t1 + (1.0 - 0.3) * t2);
}

TEST_CASE("constant wild weights are annihilated by centering") {
    RngStream rng(17);
    const PairedDataset ds = scalar_dataset(7, 0, 0, rng);
    const KernelSpec spec(1.5, MetricKind::euclidean);
    const std::vector<std::size_t> no_pool;
    // A constant multiplier vector carries no calibration signal: centering
    // maps it to exactly zero, and the replica with it.
    for (const double c : {1.0, 3.75, -2.0}) {
        const std::vector<double> constant(ds.n1(), c);
        CHECK(mcar_replica_given(ds, spec, 1.0, 2.0, constant, no_pool) == 0.0);
    }
}

TEST_CASE("replicas are invariant under a common wild-weight shift") {
    RngStream rng(18);
    const PairedDataset ds = scalar_dataset(9, 0, 0, rng);
    const KernelSpec spec(2.5, MetricKind::euclidean);
    const std::vector<std::size_t> no_pool;
    RngStream wrng(404);
    const auto wild = wild_weights(ds.n1(), 3.0, wrng);
    const double base = mcar_replica_given(ds, spec, 1.0, 3.0, wild, no_pool);
    for (const double shift : {0.5, -4.0, 100.0}) {
        std::vector<double> shifted(wild.begin(), wild.end());
        for (double& w : shifted) w += shift;
        CHECK(mcar_replica_given(ds, spec, 1.0, 3.0, shifted, no_pool) ==
              doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("zero-sum wild weights pick up only the variance-restoring scale") {
    RngStream rng(21);
    const PairedDataset ds = scalar_dataset(2, 0, 0, rng);
    const KernelSpec spec(1.5, MetricKind::euclidean);
    const double l = 1.0;
    const std::vector<double> wild{1.0, -1.0};
    const std::vector<std::size_t> no_pool;
    // Independent reconstruction of the expected quadratic form.  For n = 2
    // the scale has a hand-computable closed form: Var(w_bar) = (1+rho)/2
    // with rho = e^{-1/l}, so the factor is sqrt(2/(1-rho)).
    const double scale = std::sqrt(2.0 / (1.0 - std::exp(-1.0 / l)));
    CHECK(centered_wild_scale(2, l) == doctest::Approx(scale).epsilon(1e-12));
    const Matrix k11 = gram_self(ds.complete_first(), spec);
    const Matrix k22 = gram_self(ds.complete_second(), spec);
    const Matrix k12 = gram(ds.complete_first(), ds.complete_second(), spec);
    const Matrix a = paired_difference_gram(k11, k22, k12);
    const std::vector<double> u{scale * 0.5, scale * -0.5};  // scale * wild / n1
    const double expected = quadratic_form(a, u);
    CHECK(mcar_replica_given(ds, spec, 1.0, l, wild, no_pool) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("scaled centered wild weights average a unit second moment") {
    // The scale factor exists to undo the variance lost to centering; verify
    // E[(1/n) sum_i (scale * (w_i - w_bar))^2] = 1 by Monte Carlo at the
    // dependence level the tests actually run with (l = sqrt(n)).
    const std::size_t n = 40;
    const double l = std::sqrt(static_cast<double>(n));
    const double scale = centered_wild_scale(n, l);
    RngStream rng(909);
    double acc = 0.0;
    const int draws = 20000;
    for (int d = 0; d < draws; ++d) {
        const auto w = wild_weights(n, l, rng);
        double mean = 0.0;
        for (double x : w) mean += x;
        mean /= static_cast<double>(n);
        double sq = 0.0;
        for (double x : w) sq += (x - mean) * (x - mean);
        acc += scale * scale * sq / static_cast<double>(n);
    }
    CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("identity relabeling reproduces the two-sample statistic") {
    RngStream rng(19);
    const PairedDataset ds = scalar_dataset(0, 5, 4, rng);
    const KernelSpec spec(1.5, MetricKind::euclidean);
    std::vector<std::size_t> identity(9);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    const double replica = mcar_replica_given(ds, spec, 0.0, 1.0, {}, identity);
    CHECK(replica == doctest::Approx(mcar_statistic(ds, spec, 0.0)).epsilon(1e-14));
}

TEST_CASE("constant data yields zero statistic and p-value one") {
    std::vector<Observation> cf(4, Observation(3.0)), cs(4, Observation(3.0));
    std::vector<Observation> fo(3, Observation(3.0)), so(2, Observation(3.0));
    const PairedDataset ds = make_dataset(cf, cs, fo, so);
    const KernelSpec spec(1.0, MetricKind::euclidean);  // explicit: median degenerates here
    McarConfig config;
    config.bootstrap = 25;
    const TestResult res = mcar_test(ds, spec, config);
    CHECK(res.statistic == 0.0);
    for (double r : res.replicas) CHECK(r == 0.0);
    CHECK(res.p_value == 1.0);
}

TEST_CASE("p-value counts rejection-side ties") {
    const std::vector<double> replicas = {0.1, 0.5, 0.9, 0.2};
    CHECK(p_value_from(0.5, replicas, false) == 0.5);    // 0.5 and 0.9 count
    CHECK(p_value_from(0.95, replicas, false) == 0.0);   // nothing reaches it
    CHECK(p_value_from(0.0, replicas, false) == 1.0);
    CHECK(p_value_from(0.5, replicas, true) == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
}

TEST_CASE("two-point permutation group gives p = 1 exactly") {
    // With one observation per incomplete block, both relabelings produce the
    // same two-sample value, so every replica ties the statistic.
    RngStream rng(23);
    const PairedDataset ds = scalar_dataset(0, 1, 1, rng);
    McarConfig config;
    config.alpha = 0.0;
    config.bootstrap = 64;
    const TestResult res = mcar_test(ds, std::nullopt, std::nullopt, config);
    CHECK(res.p_value == 1.0);
}

TEST_CASE("pair relabeling is uniform over its two outcomes") {
    RngStream rng(29);
    std::size_t identity_count = 0;
    const std::size_t draws = 10000;
    for (std::size_t d = 0; d < draws; ++d) {
        std::vector<std::size_t> idx = {0, 1};
        rng.shuffle(std::span<std::size_t>(idx));
        if (idx[0] == 0) ++identity_count;
    }
    const double freq = static_cast<double>(identity_count) / static_cast<double>(draws);
    CHECK(freq > 0.45);
    CHECK(freq < 0.55);
}

TEST_CASE("mcar test is reproducible and thread-count invariant") {
    RngStream rng(31);
    const PairedDataset ds = scalar_dataset(8, 5, 6, rng);
    McarConfig config;
    config.bootstrap = 40;
    config.seed = 123;

    config.threads = 1;
    const TestResult serial = mcar_test(ds, std::nullopt, std::nullopt, config);
    config.threads = 3;
    const TestResult threaded = mcar_test(ds, std::nullopt, std::nullopt, config);

    CHECK(serial.statistic == threaded.statistic);
    CHECK(serial.p_value == threaded.p_value);
    REQUIRE(serial.replicas.size() == threaded.replicas.size());
    for (std::size_t b = 0; b < serial.replicas.size(); ++b)
        CHECK(serial.replicas[b] == threaded.replicas[b]);

    // Config echo carries the resolved defaults.
    CHECK(serial.alpha == doctest::Approx(8.0 / 19.0).epsilon(1e-15));
    CHECK(serial.l_param == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
    CHECK(serial.n1 == 8);
    CHECK(serial.n2 == 5);
    CHECK(serial.n3 == 6);
}

TEST_CASE("each replica comes from its own derived stream") {
    RngStream rng(37);
    const PairedDataset ds = scalar_dataset(5, 4, 3, rng);
    const KernelSpec spec(2.0, MetricKind::euclidean);
    McarConfig config;
    config.bootstrap = 9;
    config.seed = 99;
    const TestResult res = mcar_test(ds, spec, config);
    for (std::size_t b = 0; b < res.replicas.size(); ++b) {
        RngStream stream(RngStream::derive(99, b));
        CHECK(res.replicas[b] ==
              mcar_bootstrap_replica(ds, spec, res.alpha, res.l_param, stream));
    }
}

TEST_CASE("p-values live on the bootstrap lattice") {
    RngStream rng(41);
    const PairedDataset ds = scalar_dataset(6, 3, 3, rng, 1.5);
    McarConfig config;
    config.bootstrap = 37;
    const TestResult res = mcar_test(ds, std::nullopt, std::nullopt, config);
    const double scaled = res.p_value * 37.0;
    CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-9));
    CHECK(res.p_value >= 0.0);
    CHECK(res.p_value <= 1.0);
    CHECK(res.replicas.size() == 37);
}

TEST_CASE("alpha must match the available blocks") {
    RngStream rng(43);
    const PairedDataset no_complete = scalar_dataset(0, 3, 3, rng);
    McarConfig config;
    config.bootstrap = 5;
    config.alpha = 0.5;
    CHECK(thrown_errc([&] { mcar_test(no_complete, std::nullopt, std::nullopt, config); }) ==
          Errc::IncompatibleAlpha);

    const PairedDataset no_second_only = scalar_dataset(4, 3, 0, rng);
    CHECK(thrown_errc([&] { mcar_test(no_second_only, std::nullopt, std::nullopt, config); }) ==
          Errc::IncompatibleAlpha);

    // The skipped side of a degenerate alpha is never touched.
    config.alpha = 1.0;
    CHECK_NOTHROW(mcar_test(no_second_only, std::nullopt, std::nullopt, config));
    config.alpha = 0.0;
    CHECK_NOTHROW(mcar_test(no_complete, std::nullopt, std::nullopt, config));

    config.alpha = 1.5;
    CHECK(thrown_errc([&] { mcar_test(no_second_only, std::nullopt, std::nullopt, config); }) ==
          Errc::InvalidArgument);
}

TEST_CASE("mar test validates its layout") {
    RngStream rng(47);
    const PairedDataset with_second_only = scalar_dataset(4, 2, 1, rng);
    MarConfig config;
    config.bootstrap = 5;
    CHECK(thrown_errc([&] { mar_test(with_second_only, std::nullopt, std::nullopt, config); }) ==
          Errc::IncompatibleLayout);

    const PairedDataset tiny = scalar_dataset(1, 2, 0, rng);
    CHECK(thrown_errc([&] { mar_test(tiny, std::nullopt, std::nullopt, config); }) ==
          Errc::InvalidArgument);

    const PairedDataset ok = scalar_dataset(5, 3, 0, rng);
    config.pi_floor = 0.7;
    CHECK(thrown_errc([&] { mar_test(ok, std::nullopt, std::nullopt, config); }) ==
          Errc::InvalidArgument);
}

TEST_CASE("fully observed data needs no fitted model") {
    RngStream rng(53);
    const PairedDataset ds = scalar_dataset(6, 0, 0, rng);
    const KernelSpec spec(2.0, MetricKind::euclidean);
    MarConfig config;
    config.bootstrap = 16;
    const TestResult res = mar_test(ds, spec, config);
    REQUIRE(res.mar.has_value());
    CHECK_FALSE(res.mar->logistic_fitted);
    CHECK(res.mar->pi_min == 1.0);
    CHECK(res.mar->pi_max == 1.0);
    CHECK(res.mar->weight_sum == doctest::Approx(1.0).epsilon(1e-12));
    // Uniform 1/n weights reduce the statistic to the paired one.
    CHECK(res.statistic ==
          mmd_paired(ds.complete_first(), ds.complete_second(), spec).value);
}

TEST_CASE("mar statistic equals the weighted form under the same weights") {
    RngStream rng(59);
    const PairedDataset ds = scalar_dataset(10, 6, 0, rng);
    const KernelSpec spec(1.8, MetricKind::euclidean);
    const LogisticModel model =
        fit_logistic(pi_feature_matrix(ds), observation_labels(ds), 1e-6);
    const IpwWeights ipw = ipw_weights(ds, model, 0.01, WeightMode::raw);
    CHECK(mar_statistic(ds, ipw.complete, spec) ==
          mmd_weighted(ds.complete_first(), ds.complete_second(), ipw.complete, spec).value);
}

TEST_CASE("mar test fills in its diagnostics and stays deterministic") {
    RngStream rng(61);
    const PairedDataset ds = scalar_dataset(14, 9, 0, rng);
    MarConfig config;
    config.bootstrap = 30;
    config.seed = 7;

    config.threads = 1;
    const TestResult a = mar_test(ds, std::nullopt, std::nullopt, config);
    config.threads = 4;
    const TestResult b = mar_test(ds, std::nullopt, std::nullopt, config);

    CHECK(a.statistic == b.statistic);
    CHECK(a.p_value == b.p_value);
    for (std::size_t i = 0; i < a.replicas.size(); ++i) CHECK(a.replicas[i] == b.replicas[i]);

    REQUIRE(a.mar.has_value());
    CHECK(a.mar->logistic_fitted);
    CHECK(a.mar->logistic_converged);
    CHECK(a.mar->logistic_iterations > 0);
    CHECK(a.mar->pi_floor == 0.01);
    CHECK(a.mar->ridge == 1e-6);
    CHECK(a.mar->pi_min > 0.0);
    CHECK(a.mar->pi_max <= 1.0);
    CHECK(a.alpha == 1.0);  // echo: the paired component carries all weight
    CHECK(a.n3 == 0);
}

TEST_CASE("self-normalization rescales weights without moving the p-value") {
    RngStream rng(67);
    const PairedDataset ds = scalar_dataset(12, 8, 0, rng);
    MarConfig config;
    config.bootstrap = 50;
    config.seed = 11;
    const TestResult raw = mar_test(ds, std::nullopt, std::nullopt, config);
    config.mode = WeightMode::self_normalized;
    const TestResult norm = mar_test(ds, std::nullopt, std::nullopt, config);
    REQUIRE(norm.mar.has_value());
    CHECK(norm.mar->self_normalized);
    // Rescaling all weights by a positive constant scales statistic and
    // replicas alike, so the rank comparisons agree.
    CHECK(raw.p_value == norm.p_value);
    CHECK(norm.statistic != raw.statistic);
}

TEST_CASE("bootstrap count of one is legal") {
    RngStream rng(71);
    const PairedDataset ds = scalar_dataset(4, 2, 2, rng);
    McarConfig config;
    config.bootstrap = 1;
    const TestResult res = mcar_test(ds, std::nullopt, std::nullopt, config);
    CHECK(res.replicas.size() == 1);
    CHECK((res.p_value == 0.0 || res.p_value == 1.0));

    config.bootstrap = 0;
    CHECK(thrown_errc([&] { mcar_test(ds, std::nullopt, std::nullopt, config); }) ==
          Errc::InvalidArgument);
}
