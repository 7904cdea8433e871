#include "mmdpair/data_model.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace mmdpair {

const char* obs_kind_name(ObsKind k) {
    switch (k) {
        case ObsKind::scalar: return "scalar";
        case ObsKind::vector: return "vector";
        case ObsKind::quantile: return "quantile";
    }
    return "?";
}

const char* metric_name(MetricKind m) {
    return m == MetricKind::euclidean ? "euclidean" : "wasserstein2";
}

// ---------------------------------------------------------------------------
// QuantileFunction
// ---------------------------------------------------------------------------

QuantileFunction::QuantileFunction(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) fail(Errc::InvalidArgument, "quantile function: null grid");
    const auto& g = *grid_;
    if (g.size() < 2) fail(Errc::InvalidArgument, "quantile function: grid needs at least 2 points");
    if (g.size() != values_.size())
        fail(Errc::GridMismatch, "quantile function: grid and value lengths differ");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i]) || g[i] <= 0.0 || g[i] >= 1.0)
            fail(Errc::InvalidArgument, "quantile function: grid probabilities must lie in (0,1)");
        if (i > 0 && !(g[i] > g[i - 1]))
            fail(Errc::InvalidArgument, "quantile function: grid must be strictly increasing");
        if (!std::isfinite(values_[i]))
            fail(Errc::InvalidArgument, "quantile function: values must be finite");
        if (i > 0 && values_[i] < values_[i - 1])
            fail(Errc::InvalidArgument, "quantile function: values must be nondecreasing");
    }
}

QuantileFunction::GridPtr QuantileFunction::midpoint_grid(std::size_t m) {
    if (m < 2) fail(Errc::InvalidArgument, "midpoint grid needs m >= 2");
    auto g = std::make_shared<std::vector<double>>(m);
    for (std::size_t i = 0; i < m; ++i)
        (*g)[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    return g;
}

bool QuantileFunction::same_grid(const QuantileFunction& other) const {
    if (grid_ == other.grid_) return true;
    return *grid_ == *other.grid_;
}

// ---------------------------------------------------------------------------
// Observation
// ---------------------------------------------------------------------------

Observation::Observation(std::vector<double> vec) : payload_(std::move(vec)) {
    if (std::get<std::vector<double>>(payload_).empty())
        fail(Errc::InvalidArgument, "vector observation must be non-empty");
}

ObsKind Observation::kind() const noexcept {
    switch (payload_.index()) {
        case 0: return ObsKind::scalar;
        case 1: return ObsKind::vector;
        default: return ObsKind::quantile;
    }
}

double Observation::scalar() const {
    if (kind() != ObsKind::scalar) fail(Errc::KindMismatch, "observation is not a scalar");
    return std::get<double>(payload_);
}

const std::vector<double>& Observation::vector() const {
    if (kind() != ObsKind::vector) fail(Errc::KindMismatch, "observation is not a vector");
    return std::get<std::vector<double>>(payload_);
}

const QuantileFunction& Observation::quantile() const {
    if (kind() != ObsKind::quantile) fail(Errc::KindMismatch, "observation is not a quantile function");
    return std::get<QuantileFunction>(payload_);
}

std::span<const double> Observation::flat() const {
    switch (kind()) {
        case ObsKind::scalar: return {&std::get<double>(payload_), 1};
        case ObsKind::vector: {
            const auto& v = std::get<std::vector<double>>(payload_);
            return {v.data(), v.size()};
        }
        case ObsKind::quantile: {
            const auto& v = std::get<QuantileFunction>(payload_).values();
            return {v.data(), v.size()};
        }
    }
    return {};
}

bool Observation::compatible_with(const Observation& other) const {
    if (kind() != other.kind()) return false;
    switch (kind()) {
        case ObsKind::scalar: return true;
        case ObsKind::vector: return vector().size() == other.vector().size();
        case ObsKind::quantile: return quantile().same_grid(other.quantile());
    }
    return false;
}

// ---------------------------------------------------------------------------
// CovariateTable
// ---------------------------------------------------------------------------

const std::vector<double>* CovariateTable::find(const std::string& id) const {
    for (const auto& [rid, vals] : rows)
        if (rid == id) return &vals;
    return nullptr;
}

// ---------------------------------------------------------------------------
// validate_dataset
// ---------------------------------------------------------------------------

ObsKind PairedDataset::kind() const {
    if (n1() > 0) return complete_first_.front().kind();
    if (n2() > 0) return first_only_.front().kind();
    if (n3() > 0) return second_only_.front().kind();
    fail(Errc::EmptyInput, "dataset is empty");
}

std::vector<std::pair<int, int>> PairedDataset::delta() const {
    std::vector<std::pair<int, int>> d;
    d.reserve(n());
    for (std::size_t i = 0; i < n1(); ++i) d.emplace_back(0, 0);
    for (std::size_t i = 0; i < n2(); ++i) d.emplace_back(0, 1);
    for (std::size_t i = 0; i < n3(); ++i) d.emplace_back(1, 0);
    return d;
}

std::vector<Observation> PairedDataset::pooled_observed() const {
    std::vector<Observation> out;
    out.reserve(2 * n1() + n2() + n3());
    out.insert(out.end(), complete_first_.begin(), complete_first_.end());
    out.insert(out.end(), complete_second_.begin(), complete_second_.end());
    out.insert(out.end(), first_only_.begin(), first_only_.end());
    out.insert(out.end(), second_only_.begin(), second_only_.end());
    return out;
}

std::vector<RawRecord> PairedDataset::to_records() const {
    std::vector<RawRecord> out;
    out.reserve(2 * n1() + n2() + n3());
    for (std::size_t i = 0; i < n1(); ++i) {
        out.push_back({complete_ids_[i], 1, complete_first_[i]});
        out.push_back({complete_ids_[i], 2, complete_second_[i]});
    }
    for (std::size_t i = 0; i < n2(); ++i) out.push_back({first_only_ids_[i], 1, first_only_[i]});
    for (std::size_t i = 0; i < n3(); ++i) out.push_back({second_only_ids_[i], 2, second_only_[i]});
    return out;
}

PairedDataset validate_dataset(const std::vector<RawRecord>& records,
                               const CovariateTable* covariates) {
    if (records.empty()) fail(Errc::EmptyInput, "dataset has no records");

    // Group by id, preserving first-appearance order.
    struct Slot {
        std::optional<std::size_t> first;   // record index of timepoint 1
        std::optional<std::size_t> second;  // record index of timepoint 2
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Slot> by_id;
    by_id.reserve(records.size());

    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.timepoint != 1 && rec.timepoint != 2)
            fail(Errc::InvalidTimepoint,
                 "id '" + rec.id + "': timepoint must be 1 or 2, got " + std::to_string(rec.timepoint));
        auto [it, inserted] = by_id.try_emplace(rec.id);
        if (inserted) order.push_back(rec.id);
        auto& slot = rec.timepoint == 1 ? it->second.first : it->second.second;
        if (slot)
            fail(Errc::DuplicateRecord,
                 "id '" + rec.id + "' appears twice at timepoint " + std::to_string(rec.timepoint));
        slot = r;
    }

    // Kind / grid homogeneity across every observation in the file.
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& a = records[0].obs;
        const auto& b = records[r].obs;
        if (a.kind() != b.kind())
            fail(Errc::HeterogeneousKinds, "mixed observation kinds: " +
                                               std::string(obs_kind_name(a.kind())) + " and " +
                                               std::string(obs_kind_name(b.kind())));
        if (!a.compatible_with(b)) {
            if (a.kind() == ObsKind::quantile)
                fail(Errc::GridMismatch, "quantile grids differ across records");
            fail(Errc::HeterogeneousKinds, "vector observations of differing dimension");
        }
    }

    PairedDataset ds;
    for (const auto& id : order) {
        const Slot& slot = by_id.at(id);
        if (slot.first && slot.second) {
            ds.complete_ids_.push_back(id);
            ds.complete_first_.push_back(records[*slot.first].obs);
            ds.complete_second_.push_back(records[*slot.second].obs);
        } else if (slot.first) {
            ds.first_only_ids_.push_back(id);
            ds.first_only_.push_back(records[*slot.first].obs);
        } else {
            ds.second_only_ids_.push_back(id);
            ds.second_only_.push_back(records[*slot.second].obs);
        }
    }

    if (covariates) {
        ds.covariate_names_ = covariates->names;
        auto lookup = [&](const std::string& id) -> const std::vector<double>& {
            const auto* vals = covariates->find(id);
            if (!vals) fail(Errc::MissingCovariate, "no covariate row for id '" + id + "'");
            if (vals->size() != covariates->names.size())
                fail(Errc::MissingCovariate, "covariate row for id '" + id + "' has wrong width");
            return *vals;
        };
        ds.cov_complete_.reserve(ds.n1());
        for (const auto& id : ds.complete_ids_) ds.cov_complete_.push_back(lookup(id));
        ds.cov_first_only_.reserve(ds.n2());
        for (const auto& id : ds.first_only_ids_) ds.cov_first_only_.push_back(lookup(id));
    }
    return ds;
}

PairedDataset make_dataset(std::vector<Observation> complete_first,
                           std::vector<Observation> complete_second,
                           std::vector<Observation> first_only,
                           std::vector<Observation> second_only) {
    if (complete_first.size() != complete_second.size())
        fail(Errc::InvalidArgument, "make_dataset: complete columns differ in length");
    auto synth_id = [](char prefix, std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%c%04zu", prefix, i + 1);
        return std::string(buf);
    };
    std::vector<RawRecord> recs;
    recs.reserve(2 * complete_first.size() + first_only.size() + second_only.size());
    for (std::size_t i = 0; i < complete_first.size(); ++i) {
        recs.push_back({synth_id('c', i), 1, std::move(complete_first[i])});
        recs.push_back({synth_id('c', i), 2, std::move(complete_second[i])});
    }
    for (std::size_t i = 0; i < first_only.size(); ++i)
        recs.push_back({synth_id('f', i), 1, std::move(first_only[i])});
    for (std::size_t i = 0; i < second_only.size(); ++i)
        recs.push_back({synth_id('s', i), 2, std::move(second_only[i])});
    return validate_dataset(recs);
}

}  // namespace mmdpair
