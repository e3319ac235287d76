#pragma once

#include "mass/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mass::harness {

/// Shortest round-trippable decimal form of a double ("NA" for NaN).
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // prefer a shorter form when it parses back to the same value
    for (int prec = 6; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    out.push_back(cell);
    return out;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

/// Header row x1..xd,y then one row per observation, labels last.
inline void write_dataset_csv(const std::string& path, const Matrix& x, const Labels& y) {
    if (x.rows() != y.size()) throw ShapeError("write_dataset_csv: " + shape_of(x) + " with " + std::to_string(y.size()) + " labels");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (Index j = 0; j < x.cols(); ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) out << format_double(x(i, j)) << ',';
        out << (y(i) != 0.0 ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct Dataset {
    Matrix x;
    Labels y;
};

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParameterError("dataset '" + path + "' is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 2) throw ParameterError("dataset '" + path + "' needs at least one predictor and a label column");
    const std::size_t d = header.size() - 1;

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParameterError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            char* end = nullptr;
            row[j] = std::strtod(cells[j].c_str(), &end);
            if (end == cells[j].c_str() || *end != '\0') throw ParameterError(path + ":" + std::to_string(lineno) + ": '" + cells[j] + "' is not numeric");
        }
        if (row.back() != 0.0 && row.back() != 1.0) throw ParameterError(path + ":" + std::to_string(lineno) + ": label must be 0 or 1");
        rows.push_back(std::move(row));
    }
    Dataset ds;
    ds.x.resize(static_cast<Index>(rows.size()), static_cast<Index>(d));
    ds.y.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) ds.x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        ds.y(static_cast<Index>(i)) = rows[i][d];
    }
    return ds;
}

}  // namespace mass::harness
