#pragma once

// CSV ingestion for the CLI: header-aware column selection, row rejection
// with a count, and reproducible subsampling without replacement.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace dpmi {

struct ColumnSelection {
    std::vector<std::string> names;       // resolved against the header row
    std::vector<std::size_t> indices;     // 0-based; used when names is empty
    std::optional<std::size_t> subsample; // uniform, without replacement
    std::uint64_t subsample_seed = 0;
};

struct LoadedTable {
    Matrix data;
    std::vector<std::string> column_names;
    std::size_t rejected_rows = 0;  // rows dropped for non-numeric/missing fields
    std::size_t parsed_rows = 0;    // usable rows before any subsampling
};

namespace detail {

// RFC-4180-ish field split: commas inside double quotes don't separate,
// doubled quotes escape. Good enough for the power-plant file and the
// fixtures; no multi-line fields.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline bool parse_double(const std::string& field, double& out) {
    std::size_t begin = field.find_first_not_of(" \t");
    if (begin == std::string::npos) return false;
    std::size_t end = field.find_last_not_of(" \t") + 1;
    const char* first = field.data() + begin;
    const char* last = field.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

// Partial Fisher-Yates; the chosen indices come back sorted so subsampling
// preserves file order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m,
                                                           std::uint64_t seed) {
    if (m > n) throw usage_error("subsample size exceeds available rows");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng = make_stream(seed, 0x5ab5ull);
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace detail

inline LoadedTable load_csv(const std::string& path, const ColumnSelection& selection) {
    if (!selection.names.empty() && !selection.indices.empty())
        throw usage_error("select columns by names or by indices, not both");
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    bool header_consumed = false;

    // First non-empty line.
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line != "\r") break;
    }
    if (in.eof() && (line.empty() || line == "\r"))
        throw data_error(path + " is empty");
    std::vector<std::string> first_fields = detail::split_csv_line(line);

    std::vector<std::size_t> cols;   // resolved 0-based source columns
    std::vector<std::string> names;  // reported names

    if (!selection.names.empty()) {
        header = first_fields;
        header_consumed = true;
        for (const std::string& want : selection.names) {
            std::size_t found = header.size();
            for (std::size_t j = 0; j < header.size(); ++j)
                if (header[j] == want) {
                    found = j;
                    break;
                }
            if (found == header.size())
                throw data_error("column '" + want + "' not found in " + path +
                                 " (header has " + std::to_string(header.size()) +
                                 " columns)");
            cols.push_back(found);
            names.push_back(want);
        }
    } else {
        std::vector<std::size_t> idx = selection.indices;
        if (idx.empty()) {  // default: every column
            idx.resize(first_fields.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        for (std::size_t j : idx) {
            if (j >= first_fields.size())
                throw data_error("column index " + std::to_string(j) + " out of range; " +
                                 path + " has " + std::to_string(first_fields.size()) +
                                 " columns");
            cols.push_back(j);
        }
        // With positional selection the first row may still be a header:
        // treat it as one when any selected field is non-numeric.
        double probe;
        for (std::size_t j : cols)
            if (!detail::parse_double(first_fields[j], probe)) {
                header = first_fields;
                header_consumed = true;
                break;
            }
        for (std::size_t j : cols)
            names.push_back(header_consumed && j < header.size() && !header[j].empty()
                                ? header[j]
                                : "col" + std::to_string(j));
    }

    if (cols.size() < 2)
        throw usage_error("need at least 2 columns selected, got " +
                          std::to_string(cols.size()));

    std::vector<double> values;  // row-major staging
    std::size_t rejected = 0;
    auto consume_row = [&](const std::vector<std::string>& fields) {
        std::vector<double> row(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (cols[c] >= fields.size() || !detail::parse_double(fields[cols[c]], row[c])) {
                ++rejected;
                return;
            }
        }
        values.insert(values.end(), row.begin(), row.end());
    };

    if (!header_consumed) consume_row(first_fields);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        consume_row(detail::split_csv_line(line));
    }

    LoadedTable table;
    table.column_names = std::move(names);
    table.rejected_rows = rejected;
    table.parsed_rows = values.size() / cols.size();
    if (table.parsed_rows < 2)
        throw data_error(path + ": fewer than 2 usable rows (" +
                         std::to_string(table.parsed_rows) + " parsed, " +
                         std::to_string(rejected) + " rejected)");

    std::size_t keep_rows = table.parsed_rows;
    std::vector<std::size_t> keep;
    if (selection.subsample) {
        keep = detail::sample_without_replacement(table.parsed_rows, *selection.subsample,
                                                  selection.subsample_seed);
        keep_rows = keep.size();
        if (keep_rows < 2) throw usage_error("subsample must keep at least 2 rows");
    }

    table.data = Matrix(keep_rows, cols.size());
    for (std::size_t i = 0; i < keep_rows; ++i) {
        const std::size_t src = selection.subsample ? keep[i] : i;
        for (std::size_t c = 0; c < cols.size(); ++c)
            table.data(i, c) = values[src * cols.size() + c];
    }
    return table;
}

}  // namespace dpmi
