#pragma once

#include <string>
#include <vector>

#include "mmdpair/data_model.hpp"

namespace mmdpair {

// Shortest decimal text that round-trips the double exactly.
std::string format_double(double x);

// Parses a full cell as a double; context ("file:line") feeds the error message.
double parse_double_cell(const std::string& cell, const std::string& context);

// Splits one CSV line on commas; no quoting (the formats here never need it).
// A trailing '\r' is stripped first.
std::vector<std::string> split_csv_line(const std::string& line);

// Long-format paired dataset.
//   header: id,timepoint,<payload...>
//     scalar payload   -> a single column (conventionally "value")
//     vector payload   -> columns v1..vd
//     quantile payload -> one column per grid probability; the header cells
//                         are the probabilities (strictly increasing, in (0,1))
// Each data row is one observed record with timepoint 1 or 2; missing records
// are simply absent rows.
PairedDataset read_dataset(const std::string& path, const CovariateTable* covariates = nullptr);
void write_dataset(const std::string& path, const PairedDataset& ds);

// Covariates: header id,<feature...>, one row per id.
CovariateTable read_covariates(const std::string& path);

// Single-column sample file (header row, then one value per line).
std::vector<double> read_samples(const std::string& path);

// Generic CSV writer for preformatted cells.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

}  // namespace mmdpair
