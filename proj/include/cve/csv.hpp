#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cve/errors.hpp"

namespace cve {

// Malformed numeric CSV input; message names the offending row/column.
class CsvError : public std::runtime_error {
public:
    explicit CsvError(const std::string& what) : std::runtime_error(what) {}
};

struct CsvTable {
    std::vector<std::string> columns;
    Eigen::MatrixXd values; // rows x columns
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// Read a numeric CSV: required header row, comma separated, '.' decimal
/// separator. Row/column indices in error messages are 1-based (the
/// header is row 1).
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open input file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw CsvError(path + ": empty file, header row required");
    CsvTable table;
    for (const auto& name : detail::split_fields(line)) {
        std::string c = detail::trim(name);
        if (c.empty()) throw CsvError(path + ": empty column name in header");
        table.columns.push_back(c);
    }

    std::vector<double> cells;
    std::size_t rows = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_fields(line);
        if (fields.size() != table.columns.size())
            throw CsvError(path + ": row " + std::to_string(lineno) + " has "
                           + std::to_string(fields.size()) + " fields, expected "
                           + std::to_string(table.columns.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            std::string f = detail::trim(fields[j]);
            double v = 0.0;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size())
                throw CsvError(path + ": row " + std::to_string(lineno) + ", column '"
                               + table.columns[j] + "': not a number: '" + f + "'");
            cells.push_back(v);
        }
        ++rows;
    }
    table.values.resize(rows, static_cast<Eigen::Index>(table.columns.size()));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < table.columns.size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                cells[i * table.columns.size() + j];
    return table;
}

/// 17 significant digits: enough for doubles to round-trip exactly.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& columns,
                      const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot open output file: " + path);
    for (std::size_t j = 0; j < columns.size(); ++j)
        out << (j ? "," : "") << columns[j];
    out << "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            out << (j ? "," : "") << format_full(values(i, j));
        out << "\n";
    }
    if (!out) throw CsvError("write failed: " + path);
}

} // namespace cve
