#include "mmdpair/report.hpp"

#include <fstream>
#include <sstream>

#include "mmdpair/csv.hpp"

namespace mmdpair {

std::string format_bool(bool b) { return b ? "true" : "false"; }

void write_report(const std::string& path, const ReportEntries& entries) {
    std::ostringstream out;
    for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(Errc::IoError, "cannot open file for writing: " + path);
    file << out.str();
    if (!file) fail(Errc::IoError, "write failed: " + path);
}

void write_replicas_csv(const std::string& path, const std::vector<double>& replicas) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(replicas.size());
    for (std::size_t b = 0; b < replicas.size(); ++b)
        rows.push_back({std::to_string(b + 1), format_double(replicas[b])});
    write_table(path, {"replica", "statistic"}, rows);
}

namespace {

const char* mechanism_name(Mechanism m) { return m == Mechanism::mcar ? "mcar" : "mar"; }

}  // namespace

void write_study_table(const std::string& path, const std::vector<StudyRow>& rows) {
    const std::vector<std::string> header = {
        "mechanism", "rho",   "z1_lo",         "z1_hi",   "z2_lo",   "z2_hi",
        "n1",        "n2",    "n3",            "n",       "reps",    "bootstrap",
        "seed",      "level", "rejection_rate", "mean_n1", "mean_n2", "mean_n3"};
    std::vector<std::vector<std::string>> body;
    body.reserve(rows.size());
    for (const auto& row : rows) {
        const auto& c = row.config;
        body.push_back({mechanism_name(c.mechanism), format_double(c.rho),
                        format_double(c.z1.lo), format_double(c.z1.hi), format_double(c.z2.lo),
                        format_double(c.z2.hi), std::to_string(c.n1), std::to_string(c.n2),
                        std::to_string(c.n3), std::to_string(c.n),
                        std::to_string(c.replications), std::to_string(c.bootstrap),
                        std::to_string(c.seed), format_double(row.level),
                        format_double(row.rejection_rate), format_double(row.mean_n1),
                        format_double(row.mean_n2), format_double(row.mean_n3)});
    }
    write_table(path, header, body);
}

void write_study_details(const std::string& path, const std::vector<StudyRow>& rows) {
    const std::vector<std::string> header = {"scenario", "rep",       "n1", "n2", "n3",
                                             "statistic", "p_value"};
    std::vector<std::vector<std::string>> body;
    for (std::size_t s = 0; s < rows.size(); ++s)
        for (const auto& d : rows[s].details)
            body.push_back({std::to_string(s), std::to_string(d.rep), std::to_string(d.n1),
                            std::to_string(d.n2), std::to_string(d.n3),
                            format_double(d.statistic), format_double(d.p_value)});
    write_table(path, header, body);
}

}  // namespace mmdpair
