#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mmdpair/errors.hpp"

namespace mmdpair {

// ---------------------------------------------------------------------------
// Observation kinds
// ---------------------------------------------------------------------------

enum class ObsKind { scalar, vector, quantile };

const char* obs_kind_name(ObsKind k);

// A distributional observation stored as quantile values on a fixed
// probability grid.  The grid is shared (via shared_ptr) across all
// observations of a dataset so grid identity checks and storage stay cheap.
class QuantileFunction {
public:
    using GridPtr = std::shared_ptr<const std::vector<double>>;

    // Validates: grid strictly increasing within (0,1), values nondecreasing
    // (ties allowed), both of equal length m >= 2, all entries finite.
    QuantileFunction(GridPtr grid, std::vector<double> values);

    // Equispaced midpoint grid t_i = (i - 0.5) / m.
    static GridPtr midpoint_grid(std::size_t m);

    const std::vector<double>& grid() const noexcept { return *grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    bool same_grid(const QuantileFunction& other) const;

    friend bool operator==(const QuantileFunction& a, const QuantileFunction& b) {
        return a.same_grid(b) && a.values_ == b.values_;
    }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

// One observed element of a matched pair: a scalar, a Euclidean vector, or a
// quantile function.  Datasets are homogeneous in this choice.
class Observation {
public:
    explicit Observation(double scalar) : payload_(scalar) {}
    explicit Observation(std::vector<double> vec);
    explicit Observation(QuantileFunction q) : payload_(std::move(q)) {}

    ObsKind kind() const noexcept;

    double scalar() const;
    const std::vector<double>& vector() const;
    const QuantileFunction& quantile() const;

    // Underlying coordinates regardless of kind (quantile -> its values).
    std::span<const double> flat() const;

    // Same kind and same dimension/grid.
    bool compatible_with(const Observation& other) const;

    friend bool operator==(const Observation& a, const Observation& b) {
        return a.payload_ == b.payload_;
    }

private:
    std::variant<double, std::vector<double>, QuantileFunction> payload_;
};

// ---------------------------------------------------------------------------
// Raw ingestion records and covariates
// ---------------------------------------------------------------------------

struct RawRecord {
    std::string id;
    int timepoint = 0;  // 1 or 2
    Observation obs;
};

struct CovariateTable {
    std::vector<std::string> names;  // feature names, fixed order
    std::vector<std::pair<std::string, std::vector<double>>> rows;  // id -> values

    const std::vector<double>* find(const std::string& id) const;
};

// ---------------------------------------------------------------------------
// PairedDataset: the sorted matched-pairs layout
// ---------------------------------------------------------------------------
//
// Records are grouped per id into three blocks:
//   complete    - both timepoints observed                (count n1)
//   first_only  - only timepoint 1 observed               (count n2)
//   second_only - only timepoint 2 observed               (count n3)
// Missingness is purely structural: which block an id lands in is the whole
// story, and delta flags are derived from it, never user-supplied.
class PairedDataset {
public:
    PairedDataset() = default;

    std::size_t n1() const noexcept { return complete_first_.size(); }
    std::size_t n2() const noexcept { return first_only_.size(); }
    std::size_t n3() const noexcept { return second_only_.size(); }
    std::size_t n() const noexcept { return n1() + n2() + n3(); }

    ObsKind kind() const;

    const std::vector<Observation>& complete_first() const noexcept { return complete_first_; }
    const std::vector<Observation>& complete_second() const noexcept { return complete_second_; }
    const std::vector<Observation>& first_only() const noexcept { return first_only_; }
    const std::vector<Observation>& second_only() const noexcept { return second_only_; }

    const std::vector<std::string>& complete_ids() const noexcept { return complete_ids_; }
    const std::vector<std::string>& first_only_ids() const noexcept { return first_only_ids_; }
    const std::vector<std::string>& second_only_ids() const noexcept { return second_only_ids_; }

    // Derived per-subject missingness flags in block order
    // (complete, first_only, second_only); flag = 1 means the element is
    // absent: complete -> (0,0), first_only -> (0,1), second_only -> (1,0).
    std::vector<std::pair<int, int>> delta() const;

    // All observed observations in canonical order: complete first elements,
    // complete second elements, first-only, second-only.  This is the pool
    // the bandwidth heuristic runs on.
    std::vector<Observation> pooled_observed() const;

    bool has_covariates() const noexcept { return !covariate_names_.empty(); }
    const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
    // Covariate rows aligned with complete block, then first_only block.
    const std::vector<std::vector<double>>& covariates_complete() const noexcept { return cov_complete_; }
    const std::vector<std::vector<double>>& covariates_first_only() const noexcept { return cov_first_only_; }

    // Flatten back to long-format records (complete pairs as two rows each,
    // then first-only, then second-only).  validate_dataset of this output
    // reproduces the dataset (idempotence).
    std::vector<RawRecord> to_records() const;

    friend PairedDataset validate_dataset(const std::vector<RawRecord>& records,
                                          const CovariateTable* covariates);

private:
    std::vector<Observation> complete_first_;
    std::vector<Observation> complete_second_;
    std::vector<Observation> first_only_;
    std::vector<Observation> second_only_;
    std::vector<std::string> complete_ids_;
    std::vector<std::string> first_only_ids_;
    std::vector<std::string> second_only_ids_;
    std::vector<std::string> covariate_names_;
    std::vector<std::vector<double>> cov_complete_;
    std::vector<std::vector<double>> cov_first_only_;
};

// Group raw records by id into the sorted layout.  Block-internal ordering is
// the first-appearance order of ids in the input (stable).  Errors:
// DuplicateRecord for a repeated (id, timepoint); InvalidTimepoint for a
// timepoint outside {1,2}; HeterogeneousKinds for mixed observation kinds;
// GridMismatch for quantile grids that differ across records;
// MissingCovariate if a covariate table is given but lacks an id whose first
// element is observed.
PairedDataset validate_dataset(const std::vector<RawRecord>& records,
                               const CovariateTable* covariates = nullptr);

// Convenience builder used by generators and tests: assemble a dataset from
// block vectors with synthesized ids (c0001.., f0001.., s0001..).
PairedDataset make_dataset(std::vector<Observation> complete_first,
                           std::vector<Observation> complete_second,
                           std::vector<Observation> first_only,
                           std::vector<Observation> second_only);

// ---------------------------------------------------------------------------
// Test results
// ---------------------------------------------------------------------------

enum class MetricKind { euclidean, wasserstein2 };

const char* metric_name(MetricKind m);

// Extra fields reported by the MAR procedure.
struct MarDetails {
    bool logistic_fitted = false;  // false when every second element is observed
    bool logistic_converged = true;
    int logistic_iterations = 0;
    double weight_sum = 0.0;   // sum of IPW weights over complete pairs
    double pi_min = 1.0;       // range of clipped observation probabilities
    double pi_max = 1.0;
    bool self_normalized = false;
    double pi_floor = 0.0;
    double ridge = 0.0;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::vector<double> replicas;  // length B

    // Config echo, fully resolved.
    double alpha = 1.0;
    int bootstrap = 0;
    double l_param = 1.0;
    double sigma_sq = 1.0;
    MetricKind metric = MetricKind::euclidean;
    std::uint64_t seed = 0;
    bool plus_one = false;
    std::size_t n1 = 0, n2 = 0, n3 = 0;

    std::optional<MarDetails> mar;
};

}  // namespace mmdpair
