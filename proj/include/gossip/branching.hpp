#pragma once

// Branching balloon process: centers are born at rate lambda * A_t, where A_t
// is the summed area of all disks ignoring overlap. The triple (X, L, A) is a
// piecewise-deterministic Markov process: between births L' = X and A' = L.

#include "gossip/errors.hpp"
#include "gossip/rng.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gossip {

struct BranchState {
    double t = 0.0;
    std::int64_t X = 1;
    double L = 0.0;
    double A = 0.0;
    double lambda = 1.0;

    static BranchState initial(double lambda) { return BranchState{0.0, 1, 0.0, 0.0, lambda}; }
};

/// Deterministic flow for a duration `delta` with no births.
inline BranchState drift(const BranchState& s, double delta) {
    const double x = static_cast<double>(s.X);
    BranchState out = s;
    out.t = s.t + delta;
    out.A = s.A + s.L * delta + 0.5 * x * delta * delta;
    out.L = s.L + x * delta;
    return out;
}

/// Integrated birth intensity over (t, t + delta].
inline double cumulative_intensity(const BranchState& s, double delta) {
    const double x = static_cast<double>(s.X);
    return s.lambda * delta * (s.A + delta * (0.5 * s.L + delta * x / 6.0));
}

/// Waiting time until the next birth given a unit-exponential draw `e`:
/// the root of cumulative_intensity(s, delta) = e. The intensity is convex and
/// increasing in delta, so Newton started from any upper bound decreases
/// monotonically onto the root. Returns +inf when lambda == 0.
inline double next_birth_delta(const BranchState& s, double e) {
    if (!(e > 0.0)) return 0.0;
    if (s.lambda <= 0.0) return std::numeric_limits<double>::infinity();
    const double x = static_cast<double>(s.X);

    // Late in a run A dominates: a three-term series inversion is usually
    // already at roundoff, else one Newton step gets there.
    if (s.A > 0.0) {
        const double inv = 1.0 / (s.lambda * s.A);
        const double inv_a = s.lambda * inv;
        const double y = e * inv;
        const double a1 = 0.5 * s.L * y * inv_a;
        const double b = x * y * y * inv_a / 6.0;
        if (a1 < 1e-3 && b < 1e-3) {
            const double d0 = y * (1.0 - a1 - b + 2.0 * a1 * a1 + 5.0 * a1 * b + 3.0 * b * b);
            // Truncation error is third order in (a1, b).
            if (a1 < 1e-5 && b < 1e-5) return d0;
            const double target = y * s.A;
            const double f = d0 * (s.A + d0 * (0.5 * s.L + d0 * x / 6.0)) - target;
            if (std::abs(f) <= 1e-13 * target) return d0;
            if (std::abs(f) <= 1e-7 * target) {
                const double slope = s.A + d0 * (s.L + 0.5 * x * d0);
                return d0 - f / slope;
            }
        }
    }
    const double target = e / s.lambda;

    // Each term alone bounds the root from above. The linear bound is nearly
    // exact once A dominates, so the root-taking bounds are only tried when
    // the higher-order terms are not small at the linear bound.
    double hi = s.A > 0.0 ? target / s.A : std::numeric_limits<double>::infinity();
    if (!(hi * (0.5 * s.L + hi * x / 6.0) < 0.25 * s.A)) {
        hi = std::min(hi, std::cbrt(6.0 * target / x));
        if (s.L > 0.0) hi = std::min(hi, std::sqrt(2.0 * target / s.L));
    }

    auto residual = [&](double d) { return d * (s.A + d * (0.5 * s.L + d * x / 6.0)) - target; };

    double d = hi;
    const double tol = 1e-13 * target;
    for (int iter = 0; iter < 60; ++iter) {
        const double f = residual(d);
        if (std::abs(f) <= tol) return d;
        const double slope = s.A + d * (s.L + 0.5 * x * d);
        const double next = d - f / slope;
        if (!(next > 0.0) || !(next < d)) break;  // roundoff floor reached
        d = next;
    }
    if (std::abs(residual(d)) <= 1e-10 * target) return d;

    // Bisection fallback on [0, hi].
    double lo = 0.0;
    double up = hi;
    for (int iter = 0; iter < 200 && up - lo > 1e-15 * up; ++iter) {
        const double mid = 0.5 * (lo + up);
        (residual(mid) < 0.0 ? lo : up) = mid;
    }
    return 0.5 * (lo + up);
}

/// Duration until A reaches `level` with no intervening birth, from
/// L*d + X*d^2/2 = level - A. Returns 0 if already there.
inline double delta_to_area(const BranchState& s, double level) {
    const double r = level - s.A;
    if (r <= 0.0) return 0.0;
    const double x = static_cast<double>(s.X);
    return 2.0 * r / (s.L + std::sqrt(s.L * s.L + 2.0 * x * r));
}

/// M_t = exp(-c t) (X + c L + c^2 A), c = lambda^{1/3}.
inline double martingale_value(const BranchState& s) {
    const double c = std::cbrt(s.lambda);
    return std::exp(-c * s.t) * (static_cast<double>(s.X) + c * s.L + c * c * s.A);
}

inline const std::complex<double> kOmega{-0.5, 0.8660254037844386};

/// Raw eigen-combinations I, J, K (before the exponential discount).
struct EigenCombos {
    double I;
    std::complex<double> J;
    std::complex<double> K;
};

inline EigenCombos eigen_combinations(const BranchState& s) {
    const double c = std::cbrt(s.lambda);
    const double x = static_cast<double>(s.X);
    const std::complex<double> w = kOmega;
    const std::complex<double> w2 = kOmega * kOmega;
    return {x + c * s.L + c * c * s.A, x + w * c * s.L + w2 * c * c * s.A,
            x + w2 * c * s.L + w * c * c * s.A};
}

struct ComplexMartingales {
    std::complex<double> J;
    std::complex<double> K;
};

/// (J~, K~) = exp(-eta t)(X + eta L + eta^2 A) for eta = omega c, omega^2 c.
inline ComplexMartingales complex_martingale_values(const BranchState& s) {
    const double c = std::cbrt(s.lambda);
    const auto combos = eigen_combinations(s);
    const std::complex<double> w = kOmega;
    const std::complex<double> w2 = kOmega * kOmega;
    return {std::exp(-w * c * s.t) * combos.J, std::exp(-w2 * c * s.t) * combos.K};
}

/// Stop rule for simulate_branching. Any subset may be set; the run ends at
/// the first one met. `x_max` ends the run just before the birth that would
/// take X above x_max.
struct BranchStop {
    std::optional<double> t_max;
    std::optional<double> a_target;
    std::optional<std::int64_t> x_max;

    bool any() const { return t_max || a_target || x_max; }
};

struct BranchOptions {
    std::int64_t x_cap = 10'000'000;
    bool record_events = true;
    /// Levels of A whose exact first-passage times are recorded.
    std::vector<double> area_levels;
};

/// Birth times and post-birth snapshots. births[0] is the initial state at t = 0.
struct EventLog {
    std::vector<BranchState> births;
    BranchState final_state;
    std::vector<double> area_hits;  ///< parallel to BranchOptions::area_levels; NaN if not reached

    std::size_t size() const { return births.size(); }
};

namespace detail {

inline void record_area_hits(const BranchState& s, double delta, const std::vector<double>& levels,
                             std::vector<double>& hits) {
    const double next_a = drift(s, delta).A;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (std::isnan(hits[i]) && levels[i] <= next_a) hits[i] = s.t + delta_to_area(s, levels[i]);
    }
}

}  // namespace detail

/// Exact event-driven simulation of (X, L, A) from the one-center initial state.
inline EventLog simulate_branching(double lambda, const BranchStop& stop, Rng& rng,
                                   const BranchOptions& opts = {}) {
    if (!stop.any()) throw ConfigError("simulate_branching: no stop condition given");
    if (lambda < 0.0) throw ConfigError("simulate_branching: lambda must be >= 0");

    EventLog log;
    BranchState s = BranchState::initial(lambda);
    log.area_hits.assign(opts.area_levels.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < opts.area_levels.size(); ++i)
        if (opts.area_levels[i] <= 0.0) log.area_hits[i] = 0.0;
    if (opts.record_events) log.births.push_back(s);

    for (;;) {
        const double delta = next_birth_delta(s, rng.exponential());

        double stop_delta = std::numeric_limits<double>::infinity();
        if (stop.t_max) stop_delta = std::max(0.0, *stop.t_max - s.t);
        if (stop.a_target) stop_delta = std::min(stop_delta, delta_to_area(s, *stop.a_target));
        const bool capped = stop.x_max && s.X >= *stop.x_max;

        if (capped || stop_delta <= delta) {
            const double d = capped ? std::min(delta, stop_delta) : stop_delta;
            if (!std::isfinite(d)) throw ConfigError("simulate_branching: stop condition is unreachable");
            detail::record_area_hits(s, d, opts.area_levels, log.area_hits);
            s = drift(s, d);
            if (stop.a_target && s.A < *stop.a_target && d == stop_delta) s.A = *stop.a_target;
            break;
        }

        detail::record_area_hits(s, delta, opts.area_levels, log.area_hits);
        s = drift(s, delta);
        s.X += 1;
        if (s.X > opts.x_cap)
            throw ResourceLimitError("simulate_branching: center count exceeded cap " +
                                     std::to_string(opts.x_cap) + " at t=" + std::to_string(s.t));
        if (opts.record_events) log.births.push_back(s);
    }
    log.final_state = s;
    return log;
}

/// M_t evaluated at t_big; stands in for the limit M.
inline double sample_limit_proxy(double lambda, double t_big, Rng& rng, std::int64_t x_cap = 10'000'000) {
    BranchOptions opts;
    opts.x_cap = x_cap;
    opts.record_events = false;
    BranchStop stop;
    stop.t_max = t_big;
    return martingale_value(simulate_branching(lambda, stop, rng, opts).final_state);
}

/// `replicates` draws of M_{t_big} standing in for M; replicate i uses
/// stream_seed(base_seed, i). Requires lambda^{1/3} t_big >= min_ct.
inline std::vector<double> estimate_M(double lambda, double t_big, std::size_t replicates, std::uint64_t base_seed,
                                      double min_ct = 10.0, std::int64_t x_cap = 10'000'000) {
    if (!(lambda > 0.0)) throw ConfigError("estimate_M: lambda must be > 0");
    if (std::cbrt(lambda) * t_big < min_ct)
        throw ConfigError("estimate_M: lambda^{1/3} t_big = " + std::to_string(std::cbrt(lambda) * t_big) +
                          " is below " + std::to_string(min_ct));
    std::vector<double> out(replicates);
    for (std::size_t i = 0; i < replicates; ++i) {
        Rng rng(stream_seed(base_seed, i));
        out[i] = sample_limit_proxy(lambda, t_big, rng, x_cap);
    }
    return out;
}

/// Upper bound on |E M_t^2 - E M^2| from the second-moment formula: exp(-c t).
inline double limit_proxy_bias_bound(double lambda, double t_big) {
    return std::exp(-std::cbrt(lambda) * t_big);
}

/// One draw of sigma(eps) = inf{t : A_t >= eps N^2} with lambda = N^{-alpha},
/// together with the martingale at sigma and a limit proxy from continuing the
/// same trajectory until lambda^{1/3} t >= limit_horizon.
struct SigmaSample {
    double sigma;
    double m_at_sigma;
    double m_hat;
};

struct SigmaOptions {
    bool suppress_births = false;
    double limit_horizon = 10.0;
    std::int64_t x_cap = 10'000'000;
};

inline SigmaSample sample_sigma(double eps, double N, double alpha, Rng& rng, const SigmaOptions& opts = {}) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("hitting_time_sigma: eps must lie in (0, 1]");
    const double lambda = std::pow(N, -alpha);
    const double level = eps * N * N;

    if (opts.suppress_births) {
        BranchState s = BranchState::initial(lambda);
        s = drift(s, delta_to_area(s, level));
        return {s.t, martingale_value(s), martingale_value(s)};
    }

    BranchOptions bo;
    bo.x_cap = opts.x_cap;
    bo.record_events = false;
    bo.area_levels = {level};
    // First leg: to the level. Second leg continues from the same state.
    EventLog first = simulate_branching(lambda, BranchStop{std::nullopt, level, std::nullopt}, rng, bo);
    BranchState s = first.final_state;
    const double sigma = s.t;
    const double m_sigma = martingale_value(s);

    const double horizon = opts.limit_horizon / std::cbrt(lambda);
    while (s.t < horizon) {
        const double delta = next_birth_delta(s, rng.exponential());
        if (s.t + delta >= horizon) {
            s = drift(s, horizon - s.t);
            break;
        }
        s = drift(s, delta);
        s.X += 1;
        if (s.X > opts.x_cap) throw ResourceLimitError("hitting_time_sigma: center cap exceeded");
    }
    return {sigma, m_sigma, martingale_value(s)};
}

/// Exact first time A_t = eps N^2.
inline double hitting_time_sigma(double eps, double N, double alpha, Rng& rng, bool suppress_births = false) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("hitting_time_sigma: eps must lie in (0, 1]");
    const double lambda = suppress_births ? 0.0 : std::pow(N, -alpha);
    BranchOptions bo;
    bo.record_events = false;
    BranchStop stop;
    stop.a_target = eps * N * N;
    return simulate_branching(lambda, stop, rng, bo).final_state.t;
}

}  // namespace gossip
