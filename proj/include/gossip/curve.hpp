#pragma once

#include "gossip/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gossip {

/// A sampled function of (rescaled) time on a uniform grid.
struct LimitCurve {
    std::string object;  ///< h, f_k, g_k, f_eps, g_eps, V, EX, ...
    std::vector<double> t;
    std::vector<double> values;

    std::size_t size() const { return t.size(); }
    double step() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }

    /// Linear interpolation, clamped at the ends.
    double at(double s) const {
        if (t.empty()) throw DomainError("LimitCurve::at: empty curve");
        if (s <= t.front()) return values.front();
        if (s >= t.back()) return values.back();
        const double h = step();
        auto i = static_cast<std::size_t>((s - t.front()) / h);
        if (i + 1 >= t.size()) i = t.size() - 2;
        while (i > 0 && t[i] > s) --i;
        while (i + 2 < t.size() && t[i + 1] < s) ++i;
        const double w = (s - t[i]) / (t[i + 1] - t[i]);
        return values[i] + w * (values[i + 1] - values[i]);
    }

    bool is_nondecreasing(double slack = 0.0) const {
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] < values[i - 1] - slack) return false;
        return true;
    }
};

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Two-column CSV, header "t,<object>", 12 significant digits, LF endings.
inline void emit_curve(const LimitCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("emit_curve: cannot open " + path.string());
    out << "t," << curve.object << '\n';
    for (std::size_t i = 0; i < curve.size(); ++i)
        out << format_number(curve.t[i]) << ',' << format_number(curve.values[i]) << '\n';
    if (!out) throw IoError("emit_curve: write failed for " + path.string());
}

inline LimitCurve parse_curve(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("parse_curve: cannot open " + path.string());
    LimitCurve curve;
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,", 0) != 0)
        throw IoError("parse_curve: missing 't,<object>' header in " + path.string());
    curve.object = line.substr(2);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError("parse_curve: bad row " + std::to_string(lineno) + " in " + path.string());
        try {
            curve.t.push_back(std::stod(line.substr(0, comma)));
            curve.values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw IoError("parse_curve: bad number on row " + std::to_string(lineno) + " in " + path.string());
        }
    }
    return curve;
}

/// One file per member: <dir>/<stem>_k<k>.csv. Returns the paths written.
inline std::vector<std::filesystem::path> emit_family(const std::vector<LimitCurve>& curves,
                                                      const std::filesystem::path& dir, const std::string& stem) {
    std::vector<std::filesystem::path> paths;
    for (std::size_t k = 0; k < curves.size(); ++k) {
        auto p = dir / (stem + "_k" + std::to_string(k) + ".csv");
        emit_curve(curves[k], p);
        paths.push_back(std::move(p));
    }
    return paths;
}

}  // namespace gossip
