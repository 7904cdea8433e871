#include "mmdpair/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mmdpair {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double_cell(const std::string& cell, const std::string& context) {
    double value = 0.0;
    const char* beg = cell.data();
    const char* end = beg + cell.size();
    const auto res = std::from_chars(beg, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        fail(Errc::ParseError, context + ": not a number: '" + cell + "'");
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string::size_type start = 0;
    std::string body = line;
    if (!body.empty() && body.back() == '\r') body.pop_back();
    while (true) {
        const auto pos = body.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(body.substr(start));
            break;
        }
        cells.push_back(body.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

namespace {

std::string line_context(const std::string& path, std::size_t line_no) {
    return path + ":" + std::to_string(line_no);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open file: " + path);
    return in;
}

// True when every header cell parses as a double and together they form a
// strictly increasing sequence inside (0,1) — the signature of a quantile grid.
bool header_is_quantile_grid(const std::vector<std::string>& payload,
                             std::vector<double>& grid_out) {
    if (payload.size() < 2) return false;
    grid_out.clear();
    double prev = 0.0;
    for (const auto& cell : payload) {
        double v = 0.0;
        const char* beg = cell.data();
        const char* end = beg + cell.size();
        const auto res = std::from_chars(beg, end, v);
        if (res.ec != std::errc{} || res.ptr != end) return false;
        if (!(v > 0.0 && v < 1.0)) return false;
        if (!grid_out.empty() && !(v > prev)) return false;
        grid_out.push_back(v);
        prev = v;
    }
    return true;
}

}  // namespace

PairedDataset read_dataset(const std::string& path, const CovariateTable* covariates) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) fail(Errc::ParseError, path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "timepoint")
        fail(Errc::ParseError, path + ":1: header must start with 'id,timepoint,'");

    const std::vector<std::string> payload_names(header.begin() + 2, header.end());
    std::vector<double> grid_values;
    const bool is_quantile = header_is_quantile_grid(payload_names, grid_values);
    QuantileFunction::GridPtr grid;
    if (is_quantile)
        grid = std::make_shared<const std::vector<double>>(std::move(grid_values));
    const std::size_t width = payload_names.size();

    std::vector<RawRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        const auto ctx = line_context(path, line_no);
        if (cells.size() != width + 2)
            fail(Errc::ParseError, ctx + ": expected " + std::to_string(width + 2) +
                                       " cells, got " + std::to_string(cells.size()));
        std::string id = cells[0];
        if (id.empty()) fail(Errc::ParseError, ctx + ": empty id");
        int tp = 0;
        {
            const char* beg = cells[1].data();
            const char* end = beg + cells[1].size();
            const auto res = std::from_chars(beg, end, tp);
            if (res.ec != std::errc{} || res.ptr != end)
                fail(Errc::ParseError, ctx + ": timepoint is not an integer: '" + cells[1] + "'");
        }
        std::vector<double> values(width);
        for (std::size_t i = 0; i < width; ++i) values[i] = parse_double_cell(cells[2 + i], ctx);
        auto obs = is_quantile ? Observation(QuantileFunction(grid, std::move(values)))
                   : width == 1 ? Observation(values[0])
                                : Observation(std::move(values));
        records.push_back(RawRecord{std::move(id), tp, std::move(obs)});
    }
    return validate_dataset(records, covariates);
}

void write_dataset(const std::string& path, const PairedDataset& ds) {
    std::vector<std::string> header = {"id", "timepoint"};
    const auto records = ds.to_records();
    if (records.empty()) fail(Errc::EmptyInput, "write_dataset: no records");
    const Observation& probe = records.front().obs;
    switch (probe.kind()) {
        case ObsKind::scalar:
            header.push_back("value");
            break;
        case ObsKind::vector:
            for (std::size_t i = 0; i < probe.vector().size(); ++i)
                header.push_back("v" + std::to_string(i + 1));
            break;
        case ObsKind::quantile:
            for (double t : probe.quantile().grid()) header.push_back(format_double(t));
            break;
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(records.size());
    for (const auto& rec : records) {
        std::vector<std::string> row = {rec.id, std::to_string(rec.timepoint)};
        for (double v : rec.obs.flat()) row.push_back(format_double(v));
        rows.push_back(std::move(row));
    }
    write_table(path, header, rows);
}

CovariateTable read_covariates(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) fail(Errc::ParseError, path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "id")
        fail(Errc::ParseError, path + ":1: header must be 'id,<feature...>'");
    CovariateTable table;
    table.names.assign(header.begin() + 1, header.end());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        const auto ctx = line_context(path, line_no);
        if (cells.size() != header.size())
            fail(Errc::ParseError, ctx + ": expected " + std::to_string(header.size()) +
                                       " cells, got " + std::to_string(cells.size()));
        if (cells[0].empty()) fail(Errc::ParseError, ctx + ": empty id");
        for (const auto& existing : table.rows)
            if (existing.first == cells[0])
                fail(Errc::ParseError, ctx + ": duplicate covariate id '" + cells[0] + "'");
        std::vector<double> values(header.size() - 1);
        for (std::size_t i = 0; i + 1 < header.size(); ++i)
            values[i] = parse_double_cell(cells[i + 1], ctx);
        table.rows.emplace_back(cells[0], std::move(values));
    }
    return table;
}

std::vector<double> read_samples(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) fail(Errc::ParseError, path + ": empty file");
    std::vector<double> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 1)
            fail(Errc::ParseError,
                 line_context(path, line_no) + ": expected a single value per row");
        samples.push_back(parse_double_cell(cells[0], line_context(path, line_no)));
    }
    if (samples.empty()) fail(Errc::EmptyInput, path + ": no samples");
    return samples;
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(Errc::IoError, "cannot open file for writing: " + path);
    file << out.str();
    if (!file) fail(Errc::IoError, "write failed: " + path);
}

}  // namespace mmdpair
