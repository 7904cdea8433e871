#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmdpair/simgen.hpp"

namespace mmdpair {

// Ordered key=value entries for a flat run report.  Everything written here
// must be deterministic for a fixed seed (no clocks, no thread counts), so a
// rerun reproduces the file byte for byte.
using ReportEntries = std::vector<std::pair<std::string, std::string>>;

std::string format_bool(bool b);

// One "key=value" line per entry, in order.
void write_report(const std::string& path, const ReportEntries& entries);

// Bootstrap replicas sidecar: header replica,statistic with 1-based indices.
void write_replicas_csv(const std::string& path, const std::vector<double>& replicas);

// Study table, one row per scenario, plus a per-replication details sidecar.
void write_study_table(const std::string& path, const std::vector<StudyRow>& rows);
void write_study_details(const std::string& path, const std::vector<StudyRow>& rows);

}  // namespace mmdpair
