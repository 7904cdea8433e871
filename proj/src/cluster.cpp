#include "mmdpair/cluster.hpp"

#include <cmath>
#include <numeric>

#include "mmdpair/kernel.hpp"
#include "mmdpair/parallel.hpp"
#include "mmdpair/rng.hpp"

namespace mmdpair {

double pair_kernel(const Observation& x1a, const Observation& x2a, const Observation& x1b,
                   const Observation& x2b, double sigma_sq) {
    if (!(sigma_sq > 0.0)) fail(Errc::InvalidArgument, "pair_kernel: sigma_sq must be > 0");
    const double d = squared_distance(x1a, x1b, MetricKind::wasserstein2) +
                     squared_distance(x2a, x2b, MetricKind::wasserstein2);
    return std::exp(-d / sigma_sq);
}

namespace {

Matrix summed_sq_dist(std::span<const Observation> first, std::span<const Observation> second,
                      unsigned threads) {
    if (first.size() != second.size())
        fail(Errc::InvalidArgument, "pair columns differ in length");
    Matrix d1 = squared_distance_matrix(first, MetricKind::wasserstein2, threads);
    const Matrix d2 = squared_distance_matrix(second, MetricKind::wasserstein2, threads);
    for (std::size_t i = 0; i < d1.rows(); ++i)
        for (std::size_t j = 0; j < d1.cols(); ++j) d1(i, j) += d2(i, j);
    return d1;
}

}  // namespace

double bivariate_median_heuristic(std::span<const Observation> first,
                                  std::span<const Observation> second) {
    if (first.size() < 2) fail(Errc::InvalidArgument, "bivariate median heuristic: need >= 2 pairs");
    return median_heuristic_from_matrix(summed_sq_dist(first, second, 1));
}

Matrix pair_gram(std::span<const Observation> first, std::span<const Observation> second,
                 double sigma_sq, unsigned threads) {
    if (!(sigma_sq > 0.0)) fail(Errc::InvalidArgument, "pair_gram: sigma_sq must be > 0");
    return gram_from_sq_dist(summed_sq_dist(first, second, threads), sigma_sq);
}

// ---------------------------------------------------------------------------
// Objective and move deltas
// ---------------------------------------------------------------------------

namespace {

struct Caches {
    std::vector<double> similarity;   // S_i
    std::vector<double> weight_mass;  // v_i
    std::vector<std::size_t> counts;
    double objective = 0.0;
};

void validate_assignment(std::span<const int> assignment, std::size_t k, const Matrix& gram,
                         std::span<const double> w) {
    if (k < 1) fail(Errc::InvalidArgument, "cluster count k must be >= 1");
    if (assignment.size() != w.size() || gram.rows() != w.size() || gram.cols() != w.size())
        fail(Errc::InvalidArgument, "assignment, weights, and gram sizes must agree");
    for (int a : assignment)
        if (a < 0 || static_cast<std::size_t>(a) >= k)
            fail(Errc::InvalidArgument, "assignment uses a cluster index outside [0,k)");
}

Caches build_caches(std::span<const int> assignment, std::size_t k, const Matrix& gram,
                    std::span<const double> w) {
    const std::size_t m = assignment.size();
    Caches c;
    c.similarity.assign(k, 0.0);
    c.weight_mass.assign(k, 0.0);
    c.counts.assign(k, 0);
    for (std::size_t j = 0; j < m; ++j) {
        const auto cj = static_cast<std::size_t>(assignment[j]);
        c.weight_mass[cj] += w[j];
        c.counts[cj] += 1;
        const auto row = gram.row(j);
        for (std::size_t h = 0; h < m; ++h)
            if (assignment[h] == assignment[j]) c.similarity[cj] += w[j] * w[h] * row[h];
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        if (c.counts[i] > 0) obj += c.similarity[i] / c.weight_mass[i];
    c.objective = obj;
    return c;
}

}  // namespace

double cluster_objective(std::span<const int> assignment, std::size_t k, const Matrix& gram,
                         std::span<const double> w) {
    validate_assignment(assignment, k, gram, w);
    return build_caches(assignment, k, gram, w).objective;
}

double cluster_objective(const ClusterState& state, const Matrix& gram,
                         std::span<const double> w) {
    return cluster_objective(state.assignment, state.k, gram, w);
}

double delta_move(std::size_t j, int from, int to, const ClusterState& state, const Matrix& gram,
                  std::span<const double> w) {
    validate_assignment(state.assignment, state.k, gram, w);
    if (j >= state.assignment.size()) fail(Errc::InvalidArgument, "delta_move: pair index out of range");
    if (from == to) fail(Errc::InvalidArgument, "delta_move: source and target clusters coincide");
    if (state.assignment[j] != from)
        fail(Errc::InvalidArgument, "delta_move: pair is not in the source cluster");
    if (to < 0 || static_cast<std::size_t>(to) >= state.k)
        fail(Errc::InvalidArgument, "delta_move: target cluster out of range");

    const auto row = gram.row(j);
    const double wj = w[j];
    double s_from_of_j = 0.0, s_to_of_j = 0.0;
    for (std::size_t h = 0; h < state.assignment.size(); ++h) {
        if (state.assignment[h] == from) s_from_of_j += wj * w[h] * row[h];
        else if (state.assignment[h] == to) s_to_of_j += wj * w[h] * row[h];
    }
    const double wj2kjj = wj * wj * row[j];
    const auto fi = static_cast<std::size_t>(from);
    const auto ti = static_cast<std::size_t>(to);
    const double s_to_plus = state.similarity[ti] + 2.0 * s_to_of_j + wj2kjj;
    const double s_from_minus = state.similarity[fi] - 2.0 * s_from_of_j + wj2kjj;
    const double add = s_to_plus / (state.weight_mass[ti] + wj);
    const double keep = state.counts[fi] == 1 ? 0.0 : s_from_minus / (state.weight_mass[fi] - wj);
    const double old_to = state.counts[ti] == 0 ? 0.0 : state.similarity[ti] / state.weight_mass[ti];
    const double old_from = state.similarity[fi] / state.weight_mass[fi];
    return add + keep - old_to - old_from;
}

// ---------------------------------------------------------------------------
// Local search
// ---------------------------------------------------------------------------

namespace {

struct RestartOutcome {
    ClusterState state;
    std::vector<double> trace;
    std::size_t sweeps = 0;
};

RestartOutcome local_search(const Matrix& gram, std::span<const double> w, std::size_t k,
                            std::size_t max_sweeps, std::uint64_t seed, std::size_t restart_index,
                            const MoveObserver& observer) {
    const std::size_t m = w.size();
    RngStream rng(seed);

    // Seeded init: a shuffled pair per cluster (nonempty guarantee), the rest
    // assigned uniformly.
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<int> assignment(m, 0);
    for (std::size_t i = 0; i < m; ++i)
        assignment[perm[i]] = i < k ? static_cast<int>(i) : static_cast<int>(rng.below(k));

    Caches c = build_caches(assignment, k, gram, w);
    RestartOutcome out;
    out.trace.push_back(c.objective);

    std::vector<double> s_of(k);
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        out.sweeps = sweep;
        std::size_t moves = 0;
        for (std::size_t j = 0; j < m && k > 1; ++j) {
            const auto i = static_cast<std::size_t>(assignment[j]);
            const auto row = gram.row(j);
            const double wj = w[j];
            std::fill(s_of.begin(), s_of.end(), 0.0);
            for (std::size_t h = 0; h < m; ++h)
                s_of[static_cast<std::size_t>(assignment[h])] += wj * w[h] * row[h];
            const double wj2kjj = wj * wj * row[j];
            const double s_i_minus = c.similarity[i] - 2.0 * s_of[i] + wj2kjj;
            const double keep = c.counts[i] == 1 ? 0.0 : s_i_minus / (c.weight_mass[i] - wj);
            const double old_i = c.similarity[i] / c.weight_mass[i];

            double best_delta = 0.0;
            std::size_t best_l = k;  // k = no move
            for (std::size_t l = 0; l < k; ++l) {
                if (l == i) continue;
                const double s_l_plus = c.similarity[l] + 2.0 * s_of[l] + wj2kjj;
                const double add = s_l_plus / (c.weight_mass[l] + wj);
                const double old_l = c.counts[l] == 0 ? 0.0 : c.similarity[l] / c.weight_mass[l];
                const double delta = add + keep - old_l - old_i;
                if (delta > best_delta) {  // strict: ties keep the lowest index
                    best_delta = delta;
                    best_l = l;
                }
            }
            if (best_l == k) continue;  // no strictly improving move

            c.similarity[best_l] += 2.0 * s_of[best_l] + wj2kjj;
            c.weight_mass[best_l] += wj;
            c.counts[best_l] += 1;
            if (c.counts[i] == 1) {  // source becomes empty: exact zeros
                c.similarity[i] = 0.0;
                c.weight_mass[i] = 0.0;
            } else {
                c.similarity[i] = s_i_minus;
                c.weight_mass[i] -= wj;
            }
            c.counts[i] -= 1;
            assignment[j] = static_cast<int>(best_l);
            c.objective += best_delta;
            out.trace.push_back(c.objective);
            ++moves;
            if (observer)
                observer(MoveEvent{restart_index, sweep, j, static_cast<int>(i),
                                   static_cast<int>(best_l), best_delta, c.objective});
        }
        if (moves == 0) break;
    }

    out.state.assignment = std::move(assignment);
    out.state.k = k;
    out.state.similarity = std::move(c.similarity);
    out.state.weight_mass = std::move(c.weight_mass);
    out.state.counts = std::move(c.counts);
    out.state.objective = c.objective;
    return out;
}

}  // namespace

ClusterResult cluster(std::span<const Observation> first, std::span<const Observation> second,
                      std::span<const double> weights, const ClusterOptions& options) {
    if (first.size() != second.size() || weights.size() != first.size())
        fail(Errc::InvalidArgument, "cluster: pair columns and weights must share length");
    if (options.k < 1) fail(Errc::InvalidArgument, "cluster: k must be >= 1");
    if (options.max_sweeps < 1) fail(Errc::InvalidArgument, "cluster: max_sweeps must be >= 1");

    ClusterResult result;
    std::vector<Observation> cf, cs;
    std::vector<double> cw;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] < 0.0) fail(Errc::InvalidArgument, "cluster: negative weight");
        if (weights[j] > 0.0) {
            result.clustered.push_back(j);
            cf.push_back(first[j]);
            cs.push_back(second[j]);
            cw.push_back(weights[j]);
        } else {
            result.dropped.push_back(j);
        }
    }
    const std::size_t m = cw.size();
    if (m == 0) fail(Errc::DegenerateWeights, "cluster: no pairs with positive weight");
    if (options.k > m)
        fail(Errc::InvalidArgument, "cluster: k exceeds the number of positive-weight pairs");

    result.sigma_sq = options.sigma_sq ? *options.sigma_sq : bivariate_median_heuristic(cf, cs);
    const Matrix gram = pair_gram(cf, cs, result.sigma_sq, options.threads);

    const std::size_t restarts = options.restarts == 0 ? 1 : options.restarts;
    std::vector<RestartOutcome> outcomes(restarts);
    auto run_one = [&](std::size_t t) {
        outcomes[t] = local_search(gram, cw, options.k, options.max_sweeps,
                                   RngStream::derive(options.seed, t), t, options.observer);
    };
    if (options.observer) {
        // Serial restarts keep the observed move sequence well-ordered.
        for (std::size_t t = 0; t < restarts; ++t) run_one(t);
    } else {
        parallel_for(0, restarts, options.threads, run_one);
    }

    std::size_t best = 0;
    for (std::size_t t = 1; t < restarts; ++t)
        if (outcomes[t].state.objective > outcomes[best].state.objective) best = t;

    result.state = std::move(outcomes[best].state);
    result.trace = std::move(outcomes[best].trace);
    result.sweeps_run = outcomes[best].sweeps;
    result.restarts_run = restarts;
    return result;
}

}  // namespace mmdpair
