// Shared aliases, error types, and small text/number utilities.
#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wasp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::MatrixXi;

// Bad inputs, violated preconditions, malformed files. CLI exit code 2.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solver non-convergence, caps exceeded, degenerate numerics. CLI exit code 3.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw validation_error(msg);
}

// 17 significant digits round-trips every double exactly.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc()) throw validation_error("cannot parse number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;  // rows x cols
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty file: " + path);
    CsvTable t;
    t.header = split_csv_line(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        require(cells.size() == t.header.size(),
                "ragged csv row in " + path + " (expected " + std::to_string(t.header.size()) +
                    " cells, got " + std::to_string(cells.size()) + ")");
        std::vector<double> row(cells.size());
        for (size_t i = 0; i < cells.size(); ++i) row[i] = parse_double(cells[i]);
        rows.push_back(std::move(row));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < t.header.size(); ++c) t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return t;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
    std::ofstream out(path);
    require(out.good(), "cannot open file for writing: " + path);
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
        out << "\n";
    }
}

}  // namespace wasp
