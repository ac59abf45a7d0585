#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slag/errors.hpp"

namespace slag {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Deterministic number formatting for CSV output (round-trippable, locale-free).
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string fmt(const Complex& z) { return fmt(z.real()) + "+" + fmt(z.imag()) + "i"; }

/// Quintic smoothstep: 0 for u<=0, 1 for u>=1, C^2 join.
inline double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep_d1(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return u * u * (30.0 + u * (-60.0 + 30.0 * u));
}

inline double smoothstep_d2(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return u * (60.0 + u * (-180.0 + 120.0 * u));
}

/// Radial cutoff: 1 for r<=r_in, 0 for r>=r_out.
struct RadialCutoff {
    double r_in = 0.0, r_out = 1.0;
    double operator()(double r) const { return smoothstep((r_out - r) / (r_out - r_in)); }
    double d1(double r) const {
        return -smoothstep_d1((r_out - r) / (r_out - r_in)) / (r_out - r_in);
    }
    double d2(double r) const {
        const double w = r_out - r_in;
        return smoothstep_d2((r_out - r) / w) / (w * w);
    }
};

/// FNV-1a 64-bit hash, used for artifact checksums in manifests.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& data) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write file: " + path);
    out << content;
}

/// Minimal CSV table with a fixed column order.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    explicit CsvTable(std::vector<std::string> cols) : columns(std::move(cols)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns.size()) throw ArgumentError("csv row width mismatch");
        rows.push_back(std::move(cells));
    }

    std::string to_string() const {
        std::ostringstream ss;
        for (std::size_t i = 0; i < columns.size(); ++i)
            ss << columns[i] << (i + 1 < columns.size() ? "," : "");
        ss << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                ss << row[i] << (i + 1 < row.size() ? "," : "");
            ss << "\n";
        }
        return ss.str();
    }

    void save(const std::string& path) const { write_file(path, to_string()); }
};

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        out.push_back(std::move(cells));
    }
    return out;
}

/// Least-squares slope of log(y) vs log(x); requires positive data.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("loglog_slope: need >=2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ArgumentError("loglog_slope: nonpositive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double loglog_intercept(const std::vector<double>& x, const std::vector<double>& y) {
    const double m = loglog_slope(x, y);
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += std::log(x[i]);
        sy += std::log(y[i]);
    }
    return (sy - m * sx) / static_cast<double>(x.size());
}

} // namespace slag
