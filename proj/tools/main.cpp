#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmdpair/cluster.hpp"
#include "mmdpair/csv.hpp"
#include "mmdpair/metric.hpp"
#include "mmdpair/missingness.hpp"
#include "mmdpair/parallel.hpp"
#include "mmdpair/report.hpp"
#include "mmdpair/simgen.hpp"
#include "mmdpair/testing.hpp"

namespace {

using namespace mmdpair;

constexpr const char* kVersion = "1.0.0";

struct CommonTestArgs {
    std::string input;
    std::string covariates;
    std::string report;
    std::string metric = "auto";
    std::optional<double> bandwidth;
    std::optional<double> l;
    int bootstrap = 2000;
    std::uint64_t seed = 1;
    bool plus_one = false;
};

std::optional<MetricKind> parse_metric(const std::string& name) {
    if (name == "auto") return std::nullopt;
    if (name == "euclidean") return MetricKind::euclidean;
    return MetricKind::wasserstein2;
}

void add_common_test_flags(CLI::App* cmd, CommonTestArgs& a) {
    cmd->add_option("--input", a.input, "Paired dataset CSV (id,timepoint,<payload...>)")
        ->required();
    cmd->add_option("--covariates", a.covariates, "Covariates CSV (id,<feature...>)");
    cmd->add_option("--metric", a.metric, "Distance between observations")
        ->check(CLI::IsMember({"auto", "euclidean", "wasserstein2"}))
        ->capture_default_str();
    cmd->add_option("--bandwidth", a.bandwidth,
                    "Kernel bandwidth sigma^2 (default: median heuristic)");
    cmd->add_option("--l-param", a.l,
                    "Bootstrap AR(1) dependence parameter (default: sqrt(n1))");
    cmd->add_option("--bootstrap", a.bootstrap, "Bootstrap replica count B")
        ->capture_default_str();
    cmd->add_option("--seed", a.seed, "RNG seed")->capture_default_str();
    cmd->add_flag("--plus-one", a.plus_one, "Use p = (1+count)/(1+B)");
    cmd->add_option("--report", a.report,
                    "Write a key=value report here plus a <report>.replicas.csv sidecar");
}

// Dataset with optional covariate join.
PairedDataset load_dataset(const CommonTestArgs& a) {
    if (a.covariates.empty()) return read_dataset(a.input);
    const CovariateTable cov = read_covariates(a.covariates);
    return read_dataset(a.input, &cov);
}

ReportEntries common_entries(const char* command, const CommonTestArgs& a, const TestResult& res) {
    ReportEntries e;
    e.emplace_back("command", command);
    e.emplace_back("version", kVersion);
    e.emplace_back("input", a.input);
    e.emplace_back("covariates", a.covariates.empty() ? "none" : a.covariates);
    e.emplace_back("metric", metric_name(res.metric));
    e.emplace_back("bandwidth", format_double(res.sigma_sq));
    e.emplace_back("bootstrap", std::to_string(res.bootstrap));
    e.emplace_back("l_param", format_double(res.l_param));
    e.emplace_back("seed", std::to_string(res.seed));
    e.emplace_back("plus_one", format_bool(res.plus_one));
    e.emplace_back("n1", std::to_string(res.n1));
    e.emplace_back("n2", std::to_string(res.n2));
    e.emplace_back("n3", std::to_string(res.n3));
    return e;
}

void finish_report(const ReportEntries& entries, const std::string& report_path,
                   const std::vector<double>* replicas) {
    for (const auto& [key, value] : entries) std::cout << key << '=' << value << '\n';
    if (!report_path.empty()) {
        write_report(report_path, entries);
        if (replicas) write_replicas_csv(report_path + ".replicas.csv", *replicas);
    }
}

void run_test_mcar(const CommonTestArgs& a, std::optional<double> alpha, unsigned threads) {
    const PairedDataset ds = load_dataset(a);
    McarConfig tc;
    tc.alpha = alpha;
    tc.bootstrap = a.bootstrap;
    tc.l = a.l;
    tc.seed = a.seed;
    tc.plus_one = a.plus_one;
    tc.threads = threads;
    const TestResult res = mcar_test(ds, parse_metric(a.metric), a.bandwidth, tc);

    ReportEntries e = common_entries("test-mcar", a, res);
    e.emplace_back("alpha", format_double(res.alpha));
    e.emplace_back("statistic", format_double(res.statistic));
    e.emplace_back("p_value", format_double(res.p_value));
    e.emplace_back("replicas", std::to_string(res.replicas.size()));
    finish_report(e, a.report, &res.replicas);
}

void run_test_mar(const CommonTestArgs& a, double pi_floor, double ridge, bool self_normalize,
                  unsigned threads) {
    const PairedDataset ds = load_dataset(a);
    MarConfig tc;
    tc.bootstrap = a.bootstrap;
    tc.l = a.l;
    tc.seed = a.seed;
    tc.plus_one = a.plus_one;
    tc.pi_floor = pi_floor;
    tc.ridge = ridge;
    tc.mode = self_normalize ? WeightMode::self_normalized : WeightMode::raw;
    tc.threads = threads;
    const TestResult res = mar_test(ds, parse_metric(a.metric), a.bandwidth, tc);

    ReportEntries e = common_entries("test-mar", a, res);
    const MarDetails& mar = *res.mar;
    e.emplace_back("pi_floor", format_double(mar.pi_floor));
    e.emplace_back("ridge", format_double(mar.ridge));
    e.emplace_back("self_normalize", format_bool(mar.self_normalized));
    e.emplace_back("weights_sum", format_double(mar.weight_sum));
    e.emplace_back("pi_min", format_double(mar.pi_min));
    e.emplace_back("pi_max", format_double(mar.pi_max));
    e.emplace_back("logistic_fitted", format_bool(mar.logistic_fitted));
    e.emplace_back("logistic_converged", format_bool(mar.logistic_converged));
    e.emplace_back("logistic_iterations", std::to_string(mar.logistic_iterations));
    e.emplace_back("statistic", format_double(res.statistic));
    e.emplace_back("p_value", format_double(res.p_value));
    e.emplace_back("replicas", std::to_string(res.replicas.size()));
    finish_report(e, a.report, &res.replicas);
}

struct ClusterArgs {
    std::string input;
    std::string covariates;
    std::string out = "clusters.csv";
    std::string report;
    std::size_t k = 2;
    std::size_t max_sweeps = 50;
    std::size_t restarts = 5;
    std::uint64_t seed = 1;
    std::optional<double> bandwidth;
    double pi_floor = 0.01;
    double ridge = 1e-6;
    bool self_normalize = false;
};

void run_cluster(const ClusterArgs& a, unsigned threads) {
    CovariateTable cov;
    const CovariateTable* covp = nullptr;
    if (!a.covariates.empty()) {
        cov = read_covariates(a.covariates);
        covp = &cov;
    }
    const PairedDataset ds = read_dataset(a.input, covp);
    if (ds.n3() > 0)
        fail(Errc::IncompatibleLayout, "cluster requires a layout without second-only records");

    const WeightMode mode = a.self_normalize ? WeightMode::self_normalized : WeightMode::raw;
    IpwWeights ipw;
    if (ds.n2() == 0) {
        const std::vector<double> ones(ds.n1(), 1.0);
        ipw = ipw_weights_from_probs(ds, ones, a.pi_floor, mode);
    } else {
        const LogisticModel model =
            fit_logistic(pi_feature_matrix(ds), observation_labels(ds), a.ridge);
        ipw = ipw_weights(ds, model, a.pi_floor, mode);
    }

    ClusterOptions opts;
    opts.k = a.k;
    opts.max_sweeps = a.max_sweeps;
    opts.restarts = a.restarts;
    opts.seed = a.seed;
    opts.sigma_sq = a.bandwidth;
    opts.threads = threads;
    const ClusterResult res =
        cluster(ds.complete_first(), ds.complete_second(), ipw.complete, opts);

    // Assignments: complete pairs by cluster index, every other id unassigned.
    std::vector<std::string> label(ds.n1(), "unassigned");
    for (std::size_t pos = 0; pos < res.clustered.size(); ++pos)
        label[res.clustered[pos]] = std::to_string(res.state.assignment[pos]);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < ds.n1(); ++i) rows.push_back({ds.complete_ids()[i], label[i]});
    for (const auto& id : ds.first_only_ids()) rows.push_back({id, "unassigned"});
    write_table(a.out, {"id", "cluster"}, rows);

    // Weighted mean quantile curve per cluster and timepoint.
    const auto& grid = ds.complete_first().front().quantile().grid();
    std::vector<std::vector<std::string>> curves;
    for (std::size_t c = 0; c < a.k; ++c) {
        std::vector<double> mean1(grid.size(), 0.0), mean2(grid.size(), 0.0);
        double mass = 0.0;
        for (std::size_t pos = 0; pos < res.clustered.size(); ++pos) {
            if (static_cast<std::size_t>(res.state.assignment[pos]) != c) continue;
            const std::size_t j = res.clustered[pos];
            const double w = ipw.complete[j];
            mass += w;
            const auto& q1 = ds.complete_first()[j].quantile().values();
            const auto& q2 = ds.complete_second()[j].quantile().values();
            for (std::size_t g = 0; g < grid.size(); ++g) {
                mean1[g] += w * q1[g];
                mean2[g] += w * q2[g];
            }
        }
        if (mass <= 0.0) continue;  // empty cluster: no curve
        for (std::size_t g = 0; g < grid.size(); ++g)
            curves.push_back({std::to_string(c), "1", format_double(grid[g]),
                              format_double(mean1[g] / mass)});
        for (std::size_t g = 0; g < grid.size(); ++g)
            curves.push_back({std::to_string(c), "2", format_double(grid[g]),
                              format_double(mean2[g] / mass)});
    }
    write_table(a.out + ".curves.csv", {"cluster", "timepoint", "grid_t", "value"}, curves);

    ReportEntries e;
    e.emplace_back("command", "cluster");
    e.emplace_back("version", kVersion);
    e.emplace_back("input", a.input);
    e.emplace_back("covariates", a.covariates.empty() ? "none" : a.covariates);
    e.emplace_back("k", std::to_string(a.k));
    e.emplace_back("max_sweeps", std::to_string(a.max_sweeps));
    e.emplace_back("restarts", std::to_string(res.restarts_run));
    e.emplace_back("seed", std::to_string(a.seed));
    e.emplace_back("bandwidth", format_double(res.sigma_sq));
    e.emplace_back("pi_floor", format_double(a.pi_floor));
    e.emplace_back("ridge", format_double(a.ridge));
    e.emplace_back("self_normalize", format_bool(a.self_normalize));
    e.emplace_back("objective", format_double(res.state.objective));
    e.emplace_back("sweeps", std::to_string(res.sweeps_run));
    e.emplace_back("clustered", std::to_string(res.clustered.size()));
    e.emplace_back("unassigned", std::to_string(res.dropped.size() + ds.n2()));
    e.emplace_back("assignments", a.out);
    finish_report(e, a.report, nullptr);
}

struct SimulateArgs {
    std::string scenario = "mcar";
    double rho = 0.0;
    std::string z1 = "30,50";
    std::string z2 = "30,50";
    std::size_t n1 = 150, n2 = 150, n3 = 150, n = 300;
    std::size_t reps = 2000;
    int bootstrap = 2000;
    std::uint64_t seed = 1;
    double level = 0.05;
    std::string out = "table.csv";
    std::string emit_dataset;
    bool full_scale = false;
};

Range parse_range(const std::string& text, const char* flag) {
    const auto pos = text.find(',');
    if (pos == std::string::npos)
        fail(Errc::InvalidArgument, std::string(flag) + " expects 'lo,hi'");
    const Range r{parse_double_cell(text.substr(0, pos), flag),
                  parse_double_cell(text.substr(pos + 1), flag)};
    if (!(r.lo < r.hi)) fail(Errc::InvalidArgument, std::string(flag) + ": lo must be < hi");
    return r;
}

void run_simulate(const SimulateArgs& a, unsigned threads) {
    ScenarioConfig base;
    base.mechanism = a.scenario == "mar" ? Mechanism::mar : Mechanism::mcar;
    base.rho = a.rho;
    base.z1 = parse_range(a.z1, "--z1");
    base.z2 = parse_range(a.z2, "--z2");
    base.n1 = a.n1;
    base.n2 = a.n2;
    base.n3 = a.n3;
    base.n = a.n;
    base.replications = a.reps;
    base.bootstrap = a.bootstrap;
    base.seed = a.seed;

    if (!a.emit_dataset.empty()) {
        // Emit the dataset of replication 0 (the exact data the study tests).
        RngStream gen(RngStream::derive(RngStream::derive(base.seed, 0), 0));
        const PairedDataset ds = base.mechanism == Mechanism::mcar
                                     ? generate_mcar(base, gen)
                                     : generate_mar(base, gen).data;
        write_dataset(a.emit_dataset, ds);
        std::cout << "dataset=" << a.emit_dataset << '\n';
        return;
    }

    std::vector<ScenarioConfig> grid;
    if (a.full_scale) {
        // Both mechanisms, rho in {0, 0.4, 0.8}, null and shifted-age arms.
        std::size_t idx = 0;
        for (Mechanism mech : {Mechanism::mcar, Mechanism::mar})
            for (double rho : {0.0, 0.4, 0.8})
                for (bool alternative : {false, true}) {
                    ScenarioConfig c = base;
                    c.mechanism = mech;
                    c.rho = rho;
                    c.z1 = Range{30.0, 50.0};
                    c.z2 = alternative ? Range{50.0, 70.0} : Range{30.0, 50.0};
                    c.seed = RngStream::derive(a.seed, idx++);
                    grid.push_back(c);
                }
    } else {
        grid.push_back(base);
    }

    const auto rows = run_study(grid, a.level, threads);
    write_study_table(a.out, rows);
    write_study_details(a.out + ".details.csv", rows);
    for (std::size_t s = 0; s < rows.size(); ++s)
        std::cout << "scenario=" << s << " mechanism="
                  << (rows[s].config.mechanism == Mechanism::mcar ? "mcar" : "mar")
                  << " rho=" << format_double(rows[s].config.rho)
                  << " rejection_rate=" << format_double(rows[s].rejection_rate) << '\n';
    std::cout << "table=" << a.out << '\n';
}

struct KdeArgs {
    std::string input;
    std::string out = "density.csv";
    std::optional<double> bandwidth;
    std::size_t grid_points = 512;
};

void run_kde(const KdeArgs& a) {
    const std::vector<double> samples = read_samples(a.input);
    const double h = a.bandwidth ? *a.bandwidth : silverman_bandwidth(samples);
    if (a.grid_points < 2) fail(Errc::InvalidArgument, "--grid-points must be >= 2");
    double lo = samples.front(), hi = samples.front();
    for (double s : samples) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    lo -= 4.0 * h;
    hi += 4.0 * h;
    std::vector<double> grid(a.grid_points);
    const double step = (hi - lo) / static_cast<double>(a.grid_points - 1);
    for (std::size_t g = 0; g < a.grid_points; ++g)
        grid[g] = lo + step * static_cast<double>(g);
    grid.back() = hi;

    const DensityEstimate est = kde_density(samples, h, std::move(grid));
    std::vector<std::vector<std::string>> rows;
    rows.reserve(est.grid.size());
    for (std::size_t g = 0; g < est.grid.size(); ++g)
        rows.push_back({format_double(est.grid[g]), format_double(est.values[g])});
    write_table(a.out, {"y", "density"}, rows);
    std::cout << "bandwidth=" << format_double(est.bandwidth) << '\n'
              << "density=" << a.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel two-sample tests for matched pairs with missing observations"};
    app.set_version_flag("--version", std::string("mmdpair ") + kVersion);
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Max worker threads (0 = all cores)")
        ->capture_default_str();

    CommonTestArgs mcar_args;
    std::optional<double> alpha;
    CLI::App* mcar_cmd = app.add_subcommand("test-mcar", "Combined complete/incomplete test");
    add_common_test_flags(mcar_cmd, mcar_args);
    mcar_cmd->add_option("--alpha", alpha,
                         "Weight on the paired statistic (default: n1/(n1+n2+n3))");

    CommonTestArgs mar_args;
    double pi_floor = 0.01, ridge = 1e-6;
    bool self_normalize = false;
    CLI::App* mar_cmd = app.add_subcommand("test-mar", "Inverse-probability-weighted test");
    add_common_test_flags(mar_cmd, mar_args);
    mar_cmd->add_option("--pi-floor", pi_floor, "Clipping floor for estimated pi")
        ->capture_default_str();
    mar_cmd->add_option("--ridge", ridge, "Logistic ridge stabilizer")->capture_default_str();
    mar_cmd->add_flag("--self-normalize", self_normalize, "Rescale weights to sum to 1");

    ClusterArgs cl;
    CLI::App* cluster_cmd = app.add_subcommand("cluster", "Weighted kernel clustering of pairs");
    cluster_cmd->add_option("--input", cl.input, "Paired dataset CSV")->required();
    cluster_cmd->add_option("--covariates", cl.covariates, "Covariates CSV");
    cluster_cmd->add_option("--k", cl.k, "Cluster count")->capture_default_str();
    cluster_cmd->add_option("--max-sweeps", cl.max_sweeps, "Sweep cap per restart")
        ->capture_default_str();
    cluster_cmd->add_option("--restarts", cl.restarts, "Independent restarts")
        ->capture_default_str();
    cluster_cmd->add_option("--seed", cl.seed, "RNG seed")->capture_default_str();
    cluster_cmd->add_option("--bandwidth", cl.bandwidth,
                            "Pair-kernel sigma^2 (default: bivariate median heuristic)");
    cluster_cmd->add_option("--pi-floor", cl.pi_floor, "Clipping floor for estimated pi")
        ->capture_default_str();
    cluster_cmd->add_option("--ridge", cl.ridge, "Logistic ridge stabilizer")
        ->capture_default_str();
    cluster_cmd->add_flag("--self-normalize", cl.self_normalize, "Rescale weights to sum to 1");
    cluster_cmd->add_option("--out", cl.out, "Assignments CSV (id,cluster)")
        ->capture_default_str();
    cluster_cmd->add_option("--report", cl.report, "Write a key=value report here");

    SimulateArgs sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Rejection-rate study");
    sim_cmd->add_option("--scenario", sim.scenario, "Missingness mechanism")
        ->check(CLI::IsMember({"mcar", "mar"}))
        ->capture_default_str();
    sim_cmd->add_option("--rho", sim.rho, "Cross-timepoint correlation")->capture_default_str();
    sim_cmd->add_option("--z1", sim.z1, "First-timepoint age range lo,hi")->capture_default_str();
    sim_cmd->add_option("--z2", sim.z2, "Second-timepoint age range lo,hi")
        ->capture_default_str();
    sim_cmd->add_option("--n1", sim.n1, "Complete pairs (mcar)")->capture_default_str();
    sim_cmd->add_option("--n2", sim.n2, "First-only records (mcar)")->capture_default_str();
    sim_cmd->add_option("--n3", sim.n3, "Second-only records (mcar)")->capture_default_str();
    sim_cmd->add_option("--n", sim.n, "Subjects (mar)")->capture_default_str();
    sim_cmd->add_option("--reps", sim.reps, "Replications")->capture_default_str();
    sim_cmd->add_option("--bootstrap", sim.bootstrap, "Bootstrap replicas per test")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
    sim_cmd->add_option("--level", sim.level, "Rejection level")->capture_default_str();
    sim_cmd->add_option("--out", sim.out, "Study table CSV")->capture_default_str();
    sim_cmd->add_option("--emit-dataset", sim.emit_dataset,
                        "Write replication 0's dataset here and exit");
    sim_cmd->add_flag("--full-scale", sim.full_scale,
                      "Run the full 12-scenario grid (slow; overrides --scenario/--rho/--z2)");

    KdeArgs kde;
    CLI::App* kde_cmd = app.add_subcommand("kde", "Gaussian kernel density estimate");
    kde_cmd->add_option("--input", kde.input, "Sample CSV (single value column)")->required();
    kde_cmd->add_option("--bandwidth", kde.bandwidth, "Smoothing bandwidth (default: Silverman)");
    kde_cmd->add_option("--grid-points", kde.grid_points, "Evaluation grid size")
        ->capture_default_str();
    kde_cmd->add_option("--out", kde.out, "Output CSV (y,density)")->capture_default_str();

    const auto start = std::chrono::steady_clock::now();
    try {
        app.parse(argc, argv);
        if (mcar_cmd->parsed()) run_test_mcar(mcar_args, alpha, threads);
        else if (mar_cmd->parsed()) run_test_mar(mar_args, pi_floor, ridge, self_normalize, threads);
        else if (cluster_cmd->parsed()) run_cluster(cl, threads);
        else if (sim_cmd->parsed()) run_simulate(sim, threads);
        else if (kde_cmd->parsed()) run_kde(kde);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == Errc::InternalError ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    // Timing and thread count go to stderr only: report files stay
    // byte-identical across reruns and --threads values.
    std::cerr << "done in " << elapsed.count() << " ms using "
              << effective_threads(threads) << " thread(s)\n";
    return 0;
}
