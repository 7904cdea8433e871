#include "mmdpair/simgen.hpp"

#include <cmath>
#include <cstdio>

#include "mmdpair/parallel.hpp"

namespace mmdpair {

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Gaussian copula sampler producing uniform pairs with Pearson correlation
// rho; consumes exactly two normals per pair in a fixed order.
class CopulaSampler {
public:
    explicit CopulaSampler(double rho) {
        if (!(rho >= 0.0 && rho < 1.0))
            fail(Errc::InvalidArgument, "correlation rho must lie in [0, 1)");
        r_ = 2.0 * std::sin(kPi * rho / 6.0);
        s_ = std::sqrt(1.0 - r_ * r_);
    }

    std::pair<double, double> sample(RngStream& rng) const {
        const double g1 = rng.normal();
        const double g2 = rng.normal();
        return {normal_cdf(g1), normal_cdf(r_ * g1 + s_ * g2)};
    }

private:
    double r_ = 0.0, s_ = 1.0;
};

std::string padded_id(char prefix, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%06zu", prefix, i + 1);
    return buf;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> correlated_uniforms(double rho, std::size_t n,
                                                                        RngStream& rng) {
    const CopulaSampler copula(rho);
    std::vector<double> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [a, b] = copula.sample(rng);
        u[i] = a;
        v[i] = b;
    }
    return {std::move(u), std::move(v)};
}

QuantileFunction sample_quantile_obs(const LocationScaleModel& model, double v1, double v2,
                                     double z) {
    const double scale = v2 * model.tau(z);
    if (!(scale > 0.0))
        fail(Errc::DegenerateScale, "sample_quantile_obs: V2*tau(Z) must be > 0");
    auto grid = model.effective_grid();
    const double loc = v1 + v2 * model.eta(z);
    std::vector<double> values(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i)
        values[i] = loc + scale * (model.q0_intercept + model.q0_slope * (*grid)[i]);
    return QuantileFunction(std::move(grid), std::move(values));
}

namespace {

struct SubjectDraw {
    QuantileFunction first;
    QuantileFunction second;
};

// One complete subject: (V1*, V2*) correlated across timepoints, Z drawn per
// timepoint.  Consumes 4 normals then 2 uniforms.
SubjectDraw draw_complete_subject(const ScenarioConfig& config, const LocationScaleModel& model,
                                  const CopulaSampler& copula, RngStream& rng) {
    const auto [u1, u2] = copula.sample(rng);  // V1* at timepoints 1, 2
    const auto [w1, w2] = copula.sample(rng);  // V2* at timepoints 1, 2
    const double z1 = rng.uniform(config.z1.lo, config.z1.hi);
    const double z2 = rng.uniform(config.z2.lo, config.z2.hi);
    auto v1 = [&](double u) { return model.v1_shift + model.v1_scale * u; };
    auto v2 = [&](double u) { return model.v2_shift + model.v2_scale * u; };
    return {sample_quantile_obs(model, v1(u1), v2(w1), z1),
            sample_quantile_obs(model, v1(u2), v2(w2), z2)};
}

// One incomplete subject: fresh independent draws, Z from the given range.
QuantileFunction draw_single(const LocationScaleModel& model, const Range& z_range,
                             RngStream& rng) {
    const double u = rng.uniform01();
    const double w = rng.uniform01();
    const double z = rng.uniform(z_range.lo, z_range.hi);
    return sample_quantile_obs(model, model.v1_shift + model.v1_scale * u,
                               model.v2_shift + model.v2_scale * w, z);
}

}  // namespace

PairedDataset generate_mcar(const ScenarioConfig& config, RngStream& rng) {
    LocationScaleModel model = config.model;
    model.grid = model.effective_grid();  // one shared grid for the dataset
    const CopulaSampler copula(config.rho);

    std::vector<RawRecord> records;
    records.reserve(2 * config.n1 + config.n2 + config.n3);
    for (std::size_t i = 0; i < config.n1; ++i) {
        auto subj = draw_complete_subject(config, model, copula, rng);
        const std::string id = padded_id('c', i);
        records.push_back({id, 1, Observation(std::move(subj.first))});
        records.push_back({id, 2, Observation(std::move(subj.second))});
    }
    for (std::size_t i = 0; i < config.n2; ++i)
        records.push_back({padded_id('f', i), 1, Observation(draw_single(model, config.z1, rng))});
    for (std::size_t i = 0; i < config.n3; ++i)
        records.push_back({padded_id('s', i), 2, Observation(draw_single(model, config.z2, rng))});
    return validate_dataset(records);
}

MarSample generate_mar(const ScenarioConfig& config, RngStream& rng,
                       const std::function<double(double, double)>* miss_prob_override) {
    if (config.n == 0) fail(Errc::InvalidArgument, "generate_mar: n must be >= 1");
    LocationScaleModel model = config.model;
    model.grid = model.effective_grid();
    const CopulaSampler copula(config.rho);

    for (int attempt = 0; attempt < 10; ++attempt) {
        std::vector<RawRecord> records;
        records.reserve(2 * config.n);
        std::vector<double> pi_complete, pi_first_only;
        std::size_t complete_count = 0;
        for (std::size_t i = 0; i < config.n; ++i) {
            auto subj = draw_complete_subject(config, model, copula, rng);
            const double y1 = rng.normal();
            const double y2 = rng.normal();
            const double p_miss = miss_prob_override ? (*miss_prob_override)(y1, y2)
                                                     : sigmoid(1.0 - y1 - y2);
            if (!(p_miss >= 0.0 && p_miss <= 1.0))
                fail(Errc::InvalidArgument, "generate_mar: missingness probability outside [0,1]");
            const bool missing = rng.uniform01() < p_miss;
            const std::string id = padded_id('p', i);
            records.push_back({id, 1, Observation(std::move(subj.first))});
            if (missing) {
                pi_first_only.push_back(1.0 - p_miss);
            } else {
                records.push_back({id, 2, Observation(std::move(subj.second))});
                pi_complete.push_back(1.0 - p_miss);
                ++complete_count;
            }
        }
        if (complete_count == 0) continue;  // all second elements dropped; redraw
        MarSample out;
        out.data = validate_dataset(records);
        out.observe_prob = std::move(pi_complete);
        out.observe_prob.insert(out.observe_prob.end(), pi_first_only.begin(),
                                pi_first_only.end());
        return out;
    }
    fail(Errc::EmptyInput, "generate_mar: no complete pairs after 10 attempts");
}

std::vector<StudyRow> run_study(std::span<const ScenarioConfig> configs, double level,
                                unsigned threads) {
    if (!(level > 0.0 && level < 1.0)) fail(Errc::InvalidArgument, "study level must lie in (0,1)");
    std::vector<StudyRow> rows;
    rows.reserve(configs.size());
    for (const ScenarioConfig& config : configs) {
        if (config.replications == 0)
            fail(Errc::InvalidArgument, "study needs at least 1 replication");
        StudyRow row;
        row.config = config;
        row.level = level;
        row.details.resize(config.replications);
        // Outer parallelism across replications; the inner test runs
        // single-threaded to keep cores busy without oversubscription.
        parallel_for(0, config.replications, threads, [&](std::size_t rep) {
            const std::uint64_t master = RngStream::derive(config.seed, rep);
            RngStream gen_rng(RngStream::derive(master, 0));
            StudyDetail d;
            d.rep = rep;
            TestResult res;
            if (config.mechanism == Mechanism::mcar) {
                const PairedDataset ds = generate_mcar(config, gen_rng);
                McarConfig tc;
                tc.alpha = config.alpha;
                tc.bootstrap = config.bootstrap;
                tc.l = config.l;
                tc.seed = RngStream::derive(master, 1);
                tc.plus_one = config.plus_one;
                tc.threads = 1;
                res = mcar_test(ds, MetricKind::wasserstein2, config.bandwidth, tc);
            } else {
                const MarSample sample = generate_mar(config, gen_rng);
                MarConfig tc;
                tc.bootstrap = config.bootstrap;
                tc.l = config.l;
                tc.seed = RngStream::derive(master, 1);
                tc.plus_one = config.plus_one;
                tc.pi_floor = config.pi_floor;
                tc.ridge = config.ridge;
                tc.mode = config.mode;
                tc.threads = 1;
                res = mar_test(sample.data, MetricKind::wasserstein2, config.bandwidth, tc);
            }
            d.n1 = res.n1;
            d.n2 = res.n2;
            d.n3 = res.n3;
            d.statistic = res.statistic;
            d.p_value = res.p_value;
            row.details[rep] = d;
        });
        const double reps = static_cast<double>(config.replications);
        std::size_t rejections = 0, sum1 = 0, sum2 = 0, sum3 = 0;
        for (const auto& d : row.details) {
            if (d.p_value <= level) ++rejections;
            sum1 += d.n1;
            sum2 += d.n2;
            sum3 += d.n3;
        }
        row.rejection_rate = static_cast<double>(rejections) / reps;
        row.mean_n1 = static_cast<double>(sum1) / reps;
        row.mean_n2 = static_cast<double>(sum2) / reps;
        row.mean_n3 = static_cast<double>(sum3) / reps;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mmdpair
