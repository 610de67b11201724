#pragma once

// Experiment harness: `key = value` configuration, deterministic replicate
// farming, per-replicate rows plus flat aggregates, CSV and JSON emission.

#include "gossip/balloon.hpp"
#include "gossip/branching.hpp"
#include "gossip/curve.hpp"
#include "gossip/errors.hpp"
#include "gossip/lattice.hpp"
#include "gossip/limits.hpp"
#include "gossip/parallel.hpp"
#include "gossip/rng.hpp"
#include "gossip/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace gossip {

inline constexpr const char* kVersion = "gossip 1.0.0";

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"mart-moments", "hitting-times", "profile-vs-h", "cover-scaling",
                                                "alpha3-atom",  "lattice-compare", "limit-identities"};
    return names;
}

struct ExperimentConfig {
    std::vector<int> N{64};
    double alpha = 1.0;
    int grid_G = 512;
    std::uint64_t base_seed = 1;
    int replicates = 100;
    std::vector<double> eps_list{0.1};
    std::vector<double> lambda{1.0};  ///< branching rates for mart-moments
    /// mart-moments horizon for lambda = 1; other rates run to t_big lambda^{-1/3}.
    double t_big = 15.0;
    bool lambda_zero = false;  ///< switch off births (cover-scaling, lattice-compare)
    double s_min = -2.0;
    double s_max = 3.0;
    int s_points = 501;
    double limit_horizon = 10.0;  ///< M-hat is M_t at lambda^{1/3} t = this
    double h_t0 = -14.0;
    double h_step = 1e-3;
    std::int64_t x_cap = 10'000'000;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (v.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(out))
        throw ConfigError("config key '" + key + "': expected a real number, got '" + v + "'");
    return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (v.empty() || r.ec != std::errc() || r.ptr != end)
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (v.empty() || r.ec != std::errc() || r.ptr != end)
        throw ConfigError("config key '" + key + "': expected an unsigned 64-bit integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
    using detail::require;
    require(!c.N.empty(), "N", "needs at least one value");
    for (int n : c.N) require(n >= 2, "N", "every value must be >= 2");
    require(c.alpha > 0.0 && c.alpha <= 3.0, "alpha", "must lie in (0, 3]");
    require(c.grid_G >= 2, "grid_G", "must be >= 2");
    require(c.replicates >= 1, "replicates", "must be >= 1");
    require(!c.eps_list.empty(), "eps_list", "needs at least one value");
    for (double e : c.eps_list) require(e > 0.0 && e < 1.0, "eps_list", "every value must lie in (0, 1)");
    require(!c.lambda.empty(), "lambda", "needs at least one value");
    for (double l : c.lambda) require(l > 0.0, "lambda", "every value must be > 0");
    require(c.t_big > 0.0, "t_big", "must be > 0");
    require(c.s_min < c.s_max, "s_min", "must be below s_max");
    require(c.s_points >= 2, "s_points", "must be >= 2");
    require(c.limit_horizon > 0.0, "limit_horizon", "must be > 0");
    require(c.h_t0 <= -8.0, "h_t0", "must be <= -8");
    require(c.h_step > 0.0 && c.h_step <= 1e-3, "h_step", "must lie in (0, 1e-3]");
    require(c.x_cap >= 1, "x_cap", "must be >= 1");
}

/// Parse `key = value` lines; `#` starts a comment, lists are comma-separated.
inline ExperimentConfig parse_config(const std::string& text) {
    using namespace detail;
    ExperimentConfig c;
    std::set<std::string> seen;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw ConfigError("config key '" + key + "': given twice");

        if (key == "N") {
            c.N.clear();
            for (const auto& v : split_list(val)) c.N.push_back(static_cast<int>(parse_int(key, v)));
        } else if (key == "alpha") {
            c.alpha = parse_real(key, val);
        } else if (key == "grid_G") {
            c.grid_G = static_cast<int>(parse_int(key, val));
        } else if (key == "base_seed") {
            c.base_seed = parse_u64(key, val);
        } else if (key == "replicates") {
            c.replicates = static_cast<int>(parse_int(key, val));
        } else if (key == "eps_list") {
            c.eps_list.clear();
            for (const auto& v : split_list(val)) c.eps_list.push_back(parse_real(key, v));
        } else if (key == "lambda") {
            c.lambda.clear();
            for (const auto& v : split_list(val)) c.lambda.push_back(parse_real(key, v));
        } else if (key == "t_big") {
            c.t_big = parse_real(key, val);
        } else if (key == "lambda_zero") {
            c.lambda_zero = parse_bool(key, val);
        } else if (key == "s_min") {
            c.s_min = parse_real(key, val);
        } else if (key == "s_max") {
            c.s_max = parse_real(key, val);
        } else if (key == "s_points") {
            c.s_points = static_cast<int>(parse_int(key, val));
        } else if (key == "limit_horizon") {
            c.limit_horizon = parse_real(key, val);
        } else if (key == "h_t0") {
            c.h_t0 = parse_real(key, val);
        } else if (key == "h_step") {
            c.h_step = parse_real(key, val);
        } else if (key == "x_cap") {
            c.x_cap = parse_int(key, val);
        } else {
            throw ConfigError("config key '" + key + "': unknown key");
        }
    }
    validate_config(c);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical text of every effective setting except the seed.
inline std::string canonical_config(const ExperimentConfig& c) {
    auto list = [](const auto& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(static_cast<double>(v[i]));
        return s;
    };
    std::ostringstream o;
    o << "N=" << list(c.N) << "\nalpha=" << format_number(c.alpha) << "\ngrid_G=" << c.grid_G
      << "\nreplicates=" << c.replicates << "\neps_list=" << list(c.eps_list) << "\nlambda=" << list(c.lambda)
      << "\nt_big=" << format_number(c.t_big) << "\nlambda_zero=" << (c.lambda_zero ? "true" : "false")
      << "\ns_min=" << format_number(c.s_min) << "\ns_max=" << format_number(c.s_max) << "\ns_points=" << c.s_points
      << "\nlimit_horizon=" << format_number(c.limit_horizon) << "\nh_t0=" << format_number(c.h_t0)
      << "\nh_step=" << format_number(c.h_step) << "\nx_cap=" << c.x_cap << "\n";
    return o.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(c))));
    return buf;
}

struct RunSummary {
    std::string experiment;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> aggregates;
    std::vector<std::pair<std::string, bool>> invariants;
    std::vector<std::pair<std::string, LimitCurve>> curves;  ///< file name, curve
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = kVersion;

    bool ok() const {
        return std::all_of(invariants.begin(), invariants.end(), [](const auto& p) { return p.second; });
    }
    double aggregate(const std::string& key) const {
        for (const auto& [k, v] : aggregates)
            if (k == key) return v;
        throw std::out_of_range("RunSummary: no aggregate '" + key + "'");
    }
    void add(const std::string& key, double v) { aggregates.emplace_back(key, v); }
    void check(const std::string& key, bool v) { invariants.emplace_back(key, v); }
};

inline std::string rows_csv(const RunSummary& s) {
    std::string out;
    for (std::size_t i = 0; i < s.columns.size(); ++i) out += (i ? "," : "") + s.columns[i];
    out += '\n';
    for (const auto& row : s.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json summary_json(const RunSummary& s) {
    nlohmann::ordered_json j;
    j["experiment"] = s.experiment;
    j["version"] = s.version;
    j["config_hash"] = s.config_hash;
    j["base_seed"] = s.seed;
    j["rows"] = s.rows.size();
    for (const auto& [k, v] : s.aggregates) {
        if (std::isfinite(v))
            j[k] = v;
        else
            j[k] = nullptr;
    }
    for (const auto& [k, v] : s.invariants) j["invariant_" + k] = v;
    j["ok"] = s.ok();
    return j;
}

/// Writes <dir>/<experiment>.csv, <dir>/<experiment>_summary.json and the curves.
inline std::vector<std::filesystem::path> write_summary(const RunSummary& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    auto write = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError("write_summary: cannot open " + p.string());
        out << text;
        if (!out) throw IoError("write_summary: write failed for " + p.string());
        paths.push_back(p);
    };
    write(dir / (s.experiment + ".csv"), rows_csv(s));
    write(dir / (s.experiment + "_summary.json"), summary_json(s).dump(2) + "\n");
    for (const auto& [name, curve] : s.curves) {
        emit_curve(curve, dir / name);
        paths.push_back(dir / name);
    }
    return paths;
}

/// Everything measured on one coupled trajectory.
struct CoupledReplicate {
    double m_hat = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> sigma;  ///< per eps
    std::vector<double> tau;    ///< per eps
    /// tau >= sigma, or the grid overshoot at sigma lies within the grid bias.
    bool tau_consistent = true;
    double cover = std::numeric_limits<double>::quiet_NaN();
    double cover_uncertainty = 0.0;
    double sup_gap = std::numeric_limits<double>::quiet_NaN();  ///< profile vs h on the s-grid
    double profile_at_0 = std::numeric_limits<double>::quiet_NaN();
    double A_at_psi0 = std::numeric_limits<double>::quiet_NaN();
    bool profile_valid = true;  ///< in [0, 1] and nondecreasing
    CouplingAudit audit;
    double replay_gap = 0.0;  ///< redundant_replay_gap, when audited
    std::int64_t X = 0;
    std::int64_t X_c = 0;
};

struct CoupledPlan {
    double N = 64;
    double alpha = 1.0;
    int grid_G = 512;
    std::vector<double> eps;  ///< sigma and tau levels
    bool full_cover = true;   ///< else stop once the largest eps level is covered
    std::optional<double> lambda;
    double limit_horizon = 10.0;
    const LimitCurve* h = nullptr;  ///< profile comparison when set
    std::vector<double> s_grid;
    std::int64_t x_cap = 10'000'000;
    bool audit = true;
};

inline CoupledReplicate run_coupled_replicate(const CoupledPlan& plan, std::uint64_t seed) {
    Rng rng(seed);
    CoupledStop stop;
    if (plan.full_cover) {
        stop.full_cover = true;
    } else {
        if (plan.eps.empty()) throw ConfigError("run_coupled_replicate: need eps levels or full cover");
        stop.c_target = *std::max_element(plan.eps.begin(), plan.eps.end()) * plan.N * plan.N;
        stop.a_floor = stop.c_target;
    }
    CoupledOptions opts;
    opts.x_cap = plan.x_cap;
    opts.lambda = plan.lambda;
    opts.limit_horizon = plan.limit_horizon;
    opts.record_samples = plan.audit;
    const auto traj = simulate_coupled(plan.N, plan.alpha, plan.grid_G, stop, rng, opts);

    CoupledReplicate r;
    r.m_hat = traj.m_hat;
    r.X = traj.final_state.X;
    r.X_c = traj.c_count();
    for (double e : plan.eps) {
        r.tau.push_back(tau_hitting(traj, e));
        r.sigma.push_back(traj.lambda > 0.0 ? sigma_of(traj, e * plan.N * plan.N)
                                            : std::sqrt(2.0 * e * plan.N * plan.N));
        if (r.tau.back() < r.sigma.back()) {
            const double bias = grid_bias_bound(c_perimeter(traj, r.sigma.back()), traj.grid.cell_size());
            if (traj.covered_area(r.sigma.back()) > e * plan.N * plan.N + bias) r.tau_consistent = false;
        }
    }
    if (traj.full_cover) {
        const auto ct = cover_time(traj);
        r.cover = ct.value;
        r.cover_uncertainty = ct.uncertainty;
    }
    if (plan.h && std::isfinite(r.m_hat) && r.m_hat > 0.0) {
        const auto prof = rescaled_profile(traj, r.m_hat, plan.alpha, plan.N, plan.s_grid);
        double gap = 0.0;
        for (std::size_t i = 0; i < prof.size(); ++i) {
            gap = std::max(gap, std::abs(prof.values[i] - plan.h->at(prof.t[i])));
            if (prof.values[i] < 0.0 || prof.values[i] > 1.0) r.profile_valid = false;
        }
        if (!prof.is_nondecreasing()) r.profile_valid = false;
        r.sup_gap = gap;
        const ScaleFunctions sf(plan.N, plan.alpha, r.m_hat);
        if (sf.R >= 0.0) {
            r.profile_at_0 = traj.covered_area(sf.R) / (plan.N * plan.N);
            r.A_at_psi0 = traj.area_A(sf.R) / (plan.N * plan.N);
        }
    }
    if (plan.audit) {
        r.audit = audit_coupling(traj);
        r.replay_gap = redundant_replay_gap(traj);
    }
    return r;
}

inline std::vector<CoupledReplicate> farm_coupled(const CoupledPlan& plan, std::uint64_t base_seed, std::size_t n) {
    return farm<CoupledReplicate>(n, [&](std::size_t i) { return run_coupled_replicate(plan, stream_seed(base_seed, i)); });
}

/// One deterministic identity with its measured discrepancy and tolerance.
struct IdentityCheck {
    std::string name;
    double measured;
    double tolerance;
    bool pass;
};

/// The deterministic limit identities: V series vs closed form, the
/// convolution lemma under Gauss-Legendre quadrature, a(S(eps)) = eps N^2,
/// the integral-equation residual of h, the f_k convergence bound, g >= f,
/// and the distance of f_eps, g_eps from h.
inline std::vector<IdentityCheck> limit_identity_checks(const std::vector<double>& eps_values, double fg_step = 1e-3,
                                                        std::vector<std::pair<std::string, LimitCurve>>* curves = nullptr) {
    std::vector<IdentityCheck> out;
    auto add = [&](std::string name, double measured, double tol, bool strict_less = true) {
        out.push_back({std::move(name), measured, tol, strict_less ? measured < tol : measured <= tol});
    };

    double v_gap = 0.0;
    for (double lambda : {0.125, 1.0, 8.0})
        for (int i = 0; i <= 100; ++i) {
            const double t = 0.1 * i;
            const double a = V_eval(t, lambda, SeriesMode::series);
            const double b = V_eval(t, lambda, SeriesMode::closed);
            v_gap = std::max(v_gap, std::abs(a - b) / std::abs(b));
        }
    add("V_series_vs_closed_rel", v_gap, 1e-10);

    const GaussLegendre gl(8);
    double conv_gap = 0.0;
    for (int m = 0; m <= 4; ++m)
        for (int n = 0; n <= 4; ++n)
            for (double t : {0.5, 1.0, 2.0, 3.7}) {
                const double q = gl.integrate([&](double s) { return std::pow(s, m) * std::pow(t - s, n); }, 0.0, t);
                const double e = conv_monomial_exact(m, n, t);
                conv_gap = std::max(conv_gap, std::abs(q - e) / e);
            }
    add("conv_lemma_rel", conv_gap, 1e-12);

    double s_gap = 0.0;
    for (double N : {64.0, 100.0, 256.0, 1000.0})
        for (double alpha : {0.5, 1.0, 2.0})
            for (double eps : {1e-3, 0.05, 0.1, 1.0 / 3.0}) {
                const ScaleFunctions sf(N, alpha);
                s_gap = std::max(s_gap, std::abs(sf.a(sf.S(eps)) - eps * N * N) / (eps * N * N));
            }
    add("a_of_S_rel", s_gap, 1e-12);

    const double t_hi = 15.0;
    const auto hs = solve_h_system(-14.0, t_hi, 1e-3);
    const LimitCurve& h = hs.h;
    double resid = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double tc = -10.0 + (t_hi + 10.0) * (k + 0.5) / 20.0;
        // Independent trapezoid of int_{t0}^{tc} (tc-s)^2/2 h(s) ds plus the
        // e^s/3 tail before t0.
        const double t0 = h.t.front();
        double integral = std::exp(t0) / 3.0 * (0.5 * (tc - t0) * (tc - t0) + (tc - t0) + 1.0);
        for (std::size_t i = 1; i < h.size() && h.t[i - 1] < tc; ++i) {
            const double a = h.t[i - 1];
            const double b = std::min(h.t[i], tc);
            const double fb = h.t[i] <= tc ? h.values[i] : h.at(b);
            integral += 0.5 * (b - a) * (0.5 * (tc - a) * (tc - a) * h.values[i - 1] + 0.5 * (tc - b) * (tc - b) * fb);
        }
        resid = std::max(resid, std::abs(h.at(tc) - (1.0 - std::exp(-integral))));
    }
    add("h_integral_residual", resid, 1e-6);
    if (curves) curves->emplace_back("h.csv", h);

    for (double eps : eps_values) {
        const std::string tag = "eps" + format_number(eps);
        const auto grid = fg_grid(eps, 2.0, fg_step);
        const auto fg = iterate_fg(eps, grid, 200);
        const double a = grid.front();

        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < fg.f.size(); ++k)
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const double tau = grid[j] - a;
                const double bound = k == 0 ? 1.0 : std::exp(3.0 * k * std::log(tau) - std::lgamma(3.0 * k + 1.0));
                worst = std::max(worst, std::abs(fg.f[k].values[j] - fg.f_eps.values[j]) - bound);
            }
        add("fgap_excess_" + tag, worst, 1e-12, false);

        double g_minus_f = std::numeric_limits<double>::infinity();
        double gh = 0.0, fh = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            g_minus_f = std::min(g_minus_f, fg.g_eps.values[j] - fg.f_eps.values[j]);
            gh = std::max(gh, std::abs(fg.g_eps.values[j] - h.at(grid[j])));
            fh = std::max(fh, std::abs(fg.f_eps.values[j] - h.at(grid[j])));
        }
        add("g_ge_f_violation_" + tag, std::max(0.0, -g_minus_f), 0.0, false);
        add("g_eps_vs_h_" + tag, gh, 3.0 * eps * std::exp(2.0), false);
        add("f_eps_vs_h_" + tag, fh, (std::pow(eps, 1.0 / 6.0) / 3.0 + 3.0 * eps) * std::exp(2.0), false);

        if (curves) {
            for (std::size_t k = 0; k < fg.f.size(); ++k) curves->emplace_back("f_" + tag + "_k" + std::to_string(k) + ".csv", fg.f[k]);
            for (std::size_t k = 0; k < fg.g.size(); ++k) curves->emplace_back("g_" + tag + "_k" + std::to_string(k) + ".csv", fg.g[k]);
            curves->emplace_back("f_eps_" + tag + ".csv", fg.f_eps);
            curves->emplace_back("g_eps_" + tag + ".csv", fg.g_eps);
        }
    }
    return out;
}

namespace detail {

inline std::string ntag(int N) { return "N" + std::to_string(N) + "_"; }

inline RunSummary run_mart_moments(const ExperimentConfig& c) {
    RunSummary s;
    s.columns = {"lambda", "replicate", "M", "M_sq"};
    std::vector<std::vector<double>> samples;
    for (std::size_t li = 0; li < c.lambda.size(); ++li) {
        const double lambda = c.lambda[li];
        // Same horizon in units of lambda^{-1/3} for every lambda.
        const double t_l = c.t_big / std::cbrt(lambda);
        if (c.t_big < 10.0) throw ConfigError("config key 't_big': must be >= 10 for mart-moments");
        const std::uint64_t seed = stream_seed(c.base_seed, li);
        auto m = farm<double>(static_cast<std::size_t>(c.replicates), [&](std::size_t i) {
            Rng rng(stream_seed(seed, i));
            return sample_limit_proxy(lambda, t_l, rng, c.x_cap);
        });
        for (std::size_t i = 0; i < m.size(); ++i) s.rows.push_back({lambda, static_cast<double>(i), m[i], m[i] * m[i]});
        const std::string tag = "lambda" + format_number(lambda) + "_";
        const auto sq = squares(m);
        const auto em2 = EM2_exact(t_l, lambda);
        s.add(tag + "mean_M", mean(m));
        s.add(tag + "se_M", standard_error(m));
        s.add(tag + "z_M", (mean(m) - 1.0) / standard_error(m));
        s.add(tag + "mean_M_sq", mean(sq));
        s.add(tag + "se_M_sq", standard_error(sq));
        s.add(tag + "EM2_value", em2.value);
        s.add(tag + "EM2_bound", em2.bound);
        s.add(tag + "z_M_sq_vs_8_7", (mean(sq) - 8.0 / 7.0) / standard_error(sq));
        s.add(tag + "proxy_bias_bound", limit_proxy_bias_bound(lambda, t_l));
        s.check(tag + "all_M_positive", std::all_of(m.begin(), m.end(), [](double v) { return v > 0.0; }));
        samples.push_back(std::move(m));
    }
    if (samples.size() >= 2) {
        s.add("ks_statistic", ks_statistic(samples[0], samples[1]));
        s.add("ks_critical_1pct", ks_critical_1pct(samples[0].size(), samples[1].size()));
    }
    return s;
}

inline CoupledPlan plan_from(const ExperimentConfig& c, int N) {
    CoupledPlan p;
    p.N = N;
    p.alpha = c.alpha;
    p.grid_G = c.grid_G;
    p.limit_horizon = c.limit_horizon;
    p.x_cap = c.x_cap;
    if (c.lambda_zero) p.lambda = 0.0;
    return p;
}

inline RunSummary run_hitting_times(const ExperimentConfig& c) {
    RunSummary s;
    s.columns = {"N", "replicate", "eps", "sigma", "tau", "m_hat", "centered"};
    bool tau_ge_sigma = true, tau_monotone = true, xc_le_x = true;
    double tau_below = 0.0;
    for (std::size_t ni = 0; ni < c.N.size(); ++ni) {
        const int N = c.N[ni];
        CoupledPlan p = plan_from(c, N);
        p.eps = c.eps_list;
        p.full_cover = false;
        const auto reps = farm_coupled(p, stream_seed(c.base_seed, ni), static_cast<std::size_t>(c.replicates));
        const ScaleFunctions sf(N, c.alpha);
        for (std::size_t e = 0; e < c.eps_list.size(); ++e) {
            std::vector<double> centered, tau_ratio;
            for (std::size_t i = 0; i < reps.size(); ++i) {
                const auto& r = reps[i];
                const double z = (r.sigma[e] - sf.S(c.eps_list[e])) / sf.unit() + std::log(r.m_hat);
                centered.push_back(z);
                tau_ratio.push_back(r.tau[e] / (sf.unit() * std::log(N)));
                s.rows.push_back({double(N), double(i), c.eps_list[e], r.sigma[e], r.tau[e], r.m_hat, z});
                if (r.tau[e] < r.sigma[e]) tau_below += 1.0;
            }
            const std::string tag = ntag(N) + "eps" + format_number(c.eps_list[e]) + "_";
            s.add(tag + "mean_centered", mean(centered));
            s.add(tag + "sd_centered", stddev(centered));
            s.add(tag + "median_tau_ratio", median(tau_ratio));
        }
        for (const auto& r : reps) {
            if (!r.audit.xc_le_x) xc_le_x = false;
            if (!r.tau_consistent) tau_ge_sigma = false;
            for (std::size_t a = 0; a < c.eps_list.size(); ++a)
                for (std::size_t b = 0; b < c.eps_list.size(); ++b)
                    if (c.eps_list[a] > c.eps_list[b] && r.tau[a] < r.tau[b]) tau_monotone = false;
        }
    }
    s.add("tau_ratio_target", 2.0 - 2.0 * c.alpha / 3.0);
    s.add("fraction_tau_below_sigma", tau_below / static_cast<double>(s.rows.size()));
    s.check("tau_ge_sigma_up_to_grid_bias", tau_ge_sigma);
    s.check("tau_monotone_in_eps", tau_monotone);
    s.check("xc_le_x", xc_le_x);
    return s;
}

inline RunSummary run_profile_vs_h(const ExperimentConfig& c) {
    RunSummary s;
    s.columns = {"N", "replicate", "m_hat", "sup_gap", "profile_at_0", "A_at_psi0"};
    const auto h = solve_h(c.h_t0, c.s_max + 1.0, c.h_step);
    s.curves.emplace_back("h.csv", h);
    bool valid = true;
    for (std::size_t ni = 0; ni < c.N.size(); ++ni) {
        const int N = c.N[ni];
        CoupledPlan p = plan_from(c, N);
        p.h = &h;
        p.s_grid = uniform_grid(c.s_min, c.s_max, static_cast<std::size_t>(c.s_points));
        const auto reps = farm_coupled(p, stream_seed(c.base_seed, ni), static_cast<std::size_t>(c.replicates));
        std::vector<double> gaps, a0;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const auto& r = reps[i];
            s.rows.push_back({double(N), double(i), r.m_hat, r.sup_gap, r.profile_at_0, r.A_at_psi0});
            gaps.push_back(r.sup_gap);
            if (std::isfinite(r.A_at_psi0)) a0.push_back(r.A_at_psi0);
            if (!r.profile_valid) valid = false;
        }
        s.add(ntag(N) + "median_sup_gap", median(gaps));
        s.add(ntag(N) + "mean_A_at_psi0", a0.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(a0));
    }
    s.check("profile_in_unit_interval_and_monotone", valid);
    return s;
}

inline RunSummary run_cover_scaling(const ExperimentConfig& c) {
    RunSummary s;
    s.columns = {"N", "replicate", "T", "T_uncertainty", "T_over_N", "ratio"};
    bool xc_le_x = true;
    for (std::size_t ni = 0; ni < c.N.size(); ++ni) {
        const int N = c.N[ni];
        CoupledPlan p = plan_from(c, N);
        p.limit_horizon = 0.0;
        const auto reps = farm_coupled(p, stream_seed(c.base_seed, ni), static_cast<std::size_t>(c.replicates));
        const double scale = std::pow(N, c.alpha / 3.0) * std::log(N);
        std::vector<double> ratio, t_over_n;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const auto& r = reps[i];
            s.rows.push_back({double(N), double(i), r.cover, r.cover_uncertainty, r.cover / N, r.cover / scale});
            ratio.push_back(r.cover / scale);
            t_over_n.push_back(r.cover / N);
            if (!r.audit.xc_le_x) xc_le_x = false;
        }
        s.add(ntag(N) + "median_ratio", median(ratio));
        s.add(ntag(N) + "mean_T_over_N", mean(t_over_n));
        s.add(ntag(N) + "spread_T_over_N", *std::max_element(t_over_n.begin(), t_over_n.end()) -
                                                *std::min_element(t_over_n.begin(), t_over_n.end()));
        s.add(ntag(N) + "T_uncertainty_over_N", reps.front().cover_uncertainty / N);
    }
    s.add("ratio_target", 2.0 - 2.0 * c.alpha / 3.0);
    s.add("sqrt_pi", std::sqrt(std::numbers::pi));
    s.check("xc_le_x", xc_le_x);
    return s;
}

inline RunSummary run_alpha3_atom(const ExperimentConfig& c) {
    RunSummary s;
    s.columns = {"N", "replicate", "T", "T_over_N"};
    const int N = c.N.front();
    CoupledPlan p = plan_from(c, N);
    p.limit_horizon = 0.0;
    const auto reps = farm_coupled(p, c.base_seed, static_cast<std::size_t>(c.replicates));
    const double c1 = std::sqrt(std::numbers::pi);
    double at = 0.0, below = 0.0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const double x = reps[i].cover / N;
        s.rows.push_back({double(N), double(i), reps[i].cover, x});
        if (x >= 0.99 * c1) at += 1.0;
        if (x < 0.9 * c1) below += 1.0;
    }
    s.add("fraction_at_atom", at / reps.size());
    s.add("fraction_below_0.9", below / reps.size());
    s.add("sqrt_pi", c1);
    return s;
}

inline RunSummary run_lattice_compare(const ExperimentConfig& c) {
    RunSummary s;
    s.columns = {"N", "replicate", "T", "T_over_N", "ratio"};
    for (std::size_t ni = 0; ni < c.N.size(); ++ni) {
        const int N = c.N[ni];
        const double lambda = c.lambda_zero ? 0.0 : std::pow(N, -c.alpha);
        const std::uint64_t seed = stream_seed(c.base_seed, ni);
        auto T = farm<double>(static_cast<std::size_t>(c.replicates), [&](std::size_t i) {
            Rng rng(stream_seed(seed, i));
            return lattice_cover_time(N, lambda, rng);
        });
        const double scale = std::pow(N, c.alpha / 3.0) * std::log(N);
        std::vector<double> ratio, t_over_n;
        for (std::size_t i = 0; i < T.size(); ++i) {
            s.rows.push_back({double(N), double(i), T[i], T[i] / N, T[i] / scale});
            ratio.push_back(T[i] / scale);
            t_over_n.push_back(T[i] / N);
        }
        s.add(ntag(N) + "median_ratio", median(ratio));
        s.add(ntag(N) + "mean_T_over_N", mean(t_over_n));
        s.add(ntag(N) + "sd_T_over_N", stddev(t_over_n));
    }
    s.add("ratio_target", 2.0 - 2.0 * c.alpha / 3.0);
    return s;
}

inline RunSummary run_limit_identities(const ExperimentConfig& c) {
    RunSummary s;
    s.columns = {"check", "measured", "tolerance", "pass"};
    const auto checks = limit_identity_checks(c.eps_list, 1e-3, &s.curves);
    for (std::size_t i = 0; i < checks.size(); ++i) {
        s.rows.push_back({double(i), checks[i].measured, checks[i].tolerance, checks[i].pass ? 1.0 : 0.0});
        s.add(checks[i].name, checks[i].measured);
        s.check(checks[i].name, checks[i].pass);
    }
    return s;
}

}  // namespace detail

inline RunSummary run_experiment(const std::string& name, const ExperimentConfig& cfg) {
    validate_config(cfg);
    RunSummary s;
    if (name == "mart-moments") s = detail::run_mart_moments(cfg);
    else if (name == "hitting-times") s = detail::run_hitting_times(cfg);
    else if (name == "profile-vs-h") s = detail::run_profile_vs_h(cfg);
    else if (name == "cover-scaling") s = detail::run_cover_scaling(cfg);
    else if (name == "alpha3-atom") s = detail::run_alpha3_atom(cfg);
    else if (name == "lattice-compare") s = detail::run_lattice_compare(cfg);
    else if (name == "limit-identities") s = detail::run_limit_identities(cfg);
    else throw ConfigError("unknown experiment '" + name + "'");
    s.experiment = name;
    s.config_hash = config_hash(cfg);
    s.seed = cfg.base_seed;
    return s;
}

/// One line per experiment describing its CSV columns.
inline std::string csv_schema_help() {
    return "CSV schemas (one row per replicate; aggregates go to <experiment>_summary.json):\n"
           "  mart-moments      lambda,replicate,M,M_sq\n"
           "  hitting-times     N,replicate,eps,sigma,tau,m_hat,centered\n"
           "  profile-vs-h      N,replicate,m_hat,sup_gap,profile_at_0,A_at_psi0\n"
           "  cover-scaling     N,replicate,T,T_uncertainty,T_over_N,ratio\n"
           "  alpha3-atom       N,replicate,T,T_over_N\n"
           "  lattice-compare   N,replicate,T,T_over_N,ratio\n"
           "  limit-identities  check,measured,tolerance,pass\n";
}

}  // namespace gossip
