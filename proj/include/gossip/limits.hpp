#pragma once

// Deterministic limit objects: V and the mean curves, the second-moment
// formulas, the scale functions, the coverage profile h and the monotone
// f_k / g_k iterations that bracket it.

#include "gossip/curve.hpp"
#include "gossip/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace gossip {

/// Value known only up to an additive error of at most `bound`.
struct BoundedValue {
    double value;
    double bound;
    double lo() const { return value - bound; }
    double hi() const { return value + bound; }
    bool contains(double v) const { return v >= lo() && v <= hi(); }
};

enum class SeriesMode { series, closed };

namespace detail {

/// sum_k x^{3k+r} / (3k+r)!, all terms positive.
inline double shifted_exp_series(double x, int r) {
    double term = 1.0;
    for (int j = 1; j <= r; ++j) term *= x / j;
    double sum = term;
    if (x == 0.0) return sum;
    for (int k = 0; k < 100000; ++k) {
        const double n = 3.0 * k + r;
        term *= x * x * x / ((n + 1.0) * (n + 2.0) * (n + 3.0));
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

/// Closed form of shifted_exp_series via the cube roots of unity.
inline double shifted_exp_closed(double x, int r) {
    constexpr double kPhase = 2.0 * std::numbers::pi / 3.0;
    const double arg = std::sqrt(3.0) * x / 2.0 - r * kPhase;
    return (std::exp(x) + 2.0 * std::exp(-x / 2.0) * std::cos(arg)) / 3.0;
}

inline double shifted_exp(double x, int r, SeriesMode mode) {
    if (mode == SeriesMode::closed || x > 30.0) return shifted_exp_closed(x, r);
    return shifted_exp_series(x, r);
}

}  // namespace detail

/// V(t) = sum_k lambda^k t^{3k} / (3k)!.
inline double V_eval(double t, double lambda, SeriesMode mode = SeriesMode::series) {
    if (t < 0.0) throw DomainError("V_eval: t must be >= 0");
    return detail::shifted_exp(std::cbrt(lambda) * t, 0, mode);
}

struct MeanTriple {
    double EX;
    double EL;
    double EA;
};

/// (E X_t, E L_t, E A_t) = (V, V''/lambda, V'/lambda).
inline MeanTriple mean_curves(double t, double lambda, SeriesMode mode = SeriesMode::series) {
    if (t < 0.0) throw DomainError("mean_curves: t must be >= 0");
    const double c = std::cbrt(lambda);
    const double x = c * t;
    if (c == 0.0) return {1.0, t, t * t / 2.0};
    return {detail::shifted_exp(x, 0, mode), detail::shifted_exp(x, 1, mode) / c,
            detail::shifted_exp(x, 2, mode) / (c * c)};
}

/// E M_t^2 = 8/7 - exp(-ct)/3 + theta, |theta| <= (4/15) exp(-5ct/2).
inline BoundedValue EM2_exact(double t, double lambda) {
    const double ct = std::cbrt(lambda) * t;
    return {8.0 / 7.0 - std::exp(-ct) / 3.0, 4.0 / 15.0 * std::exp(-2.5 * ct)};
}

/// E|J~_t|^2 = E|K~_t|^2 = exp(2ct)/6 + 1/2 + theta, |theta| <= (2/3) exp(ct/2).
inline BoundedValue EJ2_exact(double t, double lambda) {
    const double ct = std::cbrt(lambda) * t;
    return {std::exp(2.0 * ct) / 6.0 + 0.5, 2.0 / 3.0 * std::exp(ct / 2.0)};
}

/// Growth-scale functions for lambda = N^{-alpha}. R defaults to its value at M = 1.
struct ScaleFunctions {
    double N;
    double alpha;
    double R;

    ScaleFunctions(double n, double a, double M = 1.0) : N(n), alpha(a), R(0.0) {
        if (!(n > 0.0)) throw ConfigError("ScaleFunctions: N must be > 0");
        R = R_of(M);
    }

    double lambda() const { return std::pow(N, -alpha); }
    /// N^{alpha/3}, the time unit of the growth phase.
    double unit() const { return std::pow(N, alpha / 3.0); }
    double a(double t) const { return std::pow(N, 2.0 * alpha / 3.0) * std::exp(t / unit()) / 3.0; }
    double l(double t) const { return a(t) / unit(); }
    double x(double t) const { return a(t) / (unit() * unit()); }
    double S(double eps) const { return unit() * ((2.0 - 2.0 * alpha / 3.0) * std::log(N) + std::log(3.0 * eps)); }
    double R_of(double M) const {
        if (!(M > 0.0)) throw DomainError("ScaleFunctions: M must be > 0");
        return unit() * ((2.0 - 2.0 * alpha / 3.0) * std::log(N) - std::log(M));
    }
    double psi(double s) const { return R + unit() * s; }
    double psi_inverse(double t) const { return (t - R) / unit(); }
    double W(double eps) const { return psi(std::log(3.0 * eps)); }
};

enum class ScaleWhich { a, l, x, S, psi };

inline double scale_eval(const ScaleFunctions& sf, ScaleWhich which, double arg) {
    switch (which) {
        case ScaleWhich::a: return sf.a(arg);
        case ScaleWhich::l: return sf.l(arg);
        case ScaleWhich::x: return sf.x(arg);
        case ScaleWhich::S: return sf.S(arg);
        case ScaleWhich::psi: return sf.psi(arg);
    }
    throw ConfigError("scale_eval: unknown function");
}

/// a(t) for general lambda: exp(c t) / (3 c^2), c = lambda^{1/3}.
inline double growth_a(double t, double lambda) {
    const double c = std::cbrt(lambda);
    return std::exp(c * t) / (3.0 * c * c);
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        if (n < 1) throw ConfigError("GaussLegendre: need at least one node");
        nodes.resize(n);
        weights.resize(n);
        // Returns P_n'(z) and sets pn = P_n(z).
        auto legendre = [n](double z, double& pn) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pn = p1;
            return n * (z * p1 - p0) / (z * z - 1.0);
        };
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            for (int iter = 0; iter < 100; ++iter) {
                double pn = 0.0;
                const double dp = legendre(z, pn);
                const double dz = pn / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            double pn = 0.0;
            const double dp = legendre(z, pn);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(mid + half * nodes[i]);
        return half * sum;
    }
};

/// m! n! / (m + n + 1)! t^{m+n+1}.
inline double conv_monomial_exact(int m, int n, double t) {
    // m! n! / (m+n+1)! = 1 / ((m+n+1) C(m+n, m)).
    double binom = 1.0;
    for (int j = 1; j <= m; ++j) binom = binom * (n + j) / j;
    return std::pow(t, m + n + 1) / ((m + n + 1) * binom);
}

/// Profile h together with the running integrals u0 = int h, u1 = int (t-s) h,
/// u2 = int (t-s)^2/2 h over (-inf, t].
struct HSolution {
    LimitCurve h;
    std::vector<double> u0, u1, u2;
};

namespace detail {

inline HSolution integrate_h_system(double t0, double t1, double step, std::array<double, 3> u, const char* object) {
    if (!(step > 0.0)) throw ConfigError("solve_h: step must be > 0");
    if (!(t1 > t0)) throw ConfigError("solve_h: t1 must exceed t0");
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / step - 1e-9));
    const double hstep = (t1 - t0) / static_cast<double>(n);

    HSolution sol;
    sol.h.object = object;
    sol.h.t.reserve(n + 1);
    sol.h.values.reserve(n + 1);
    auto push = [&](double t) {
        sol.h.t.push_back(t);
        sol.h.values.push_back(-std::expm1(-u[2]));
        sol.u0.push_back(u[0]);
        sol.u1.push_back(u[1]);
        sol.u2.push_back(u[2]);
    };
    auto rhs = [](const std::array<double, 3>& v) {
        return std::array<double, 3>{-std::expm1(-v[2]), v[0], v[1]};
    };
    push(t0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k1 = rhs(u);
        std::array<double, 3> tmp{};
        for (int j = 0; j < 3; ++j) tmp[j] = u[j] + 0.5 * hstep * k1[j];
        const auto k2 = rhs(tmp);
        for (int j = 0; j < 3; ++j) tmp[j] = u[j] + 0.5 * hstep * k2[j];
        const auto k3 = rhs(tmp);
        for (int j = 0; j < 3; ++j) tmp[j] = u[j] + hstep * k3[j];
        const auto k4 = rhs(tmp);
        for (int j = 0; j < 3; ++j) u[j] += hstep / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        push(i + 1 == n ? t1 : t0 + static_cast<double>(i + 1) * hstep);
    }
    return sol;
}

}  // namespace detail

/// Solve h = 1 - exp(-int_{-inf}^t (t-s)^2/2 h(s) ds), normalized by
/// h(t) ~ e^t/3 as t -> -inf, as the ODE u0' = h, u1' = u0, u2' = u1 with
/// h = 1 - exp(-u2) and classical RK4.
///
/// The initial values carry the e^{2t} correction of the tail
/// h = e^t/3 - (4/63) e^{2t} + O(e^{3t}); with the first-order values alone
/// the solution is translated by O(e^{t0}).
inline HSolution solve_h_system(double t0, double t1, double step) {
    if (!(t0 <= -8.0)) throw ConfigError("solve_h: t0 must be <= -8");
    if (!(step > 0.0 && step <= 1e-3)) throw ConfigError("solve_h: step must lie in (0, 1e-3]");
    const double e1 = std::exp(t0) / 3.0;
    const double e2 = std::exp(2.0 * t0);
    return detail::integrate_h_system(t0, t1, step, {e1 - 2.0 * e2 / 63.0, e1 - e2 / 63.0, e1 - e2 / 126.0}, "h");
}

inline LimitCurve solve_h(double t0, double t1, double step) { return solve_h_system(t0, t1, step).h; }

/// h_eps: equal to e^t/3 before log(3 eps) and driven by itself afterwards.
/// On [log(3 eps), t1] this is the same ODE started from u = (eps, eps, eps).
inline HSolution solve_h_eps(double eps, double t1, double step) {
    if (!(eps > 0.0 && eps < 1.0 / 3.0)) throw ConfigError("solve_h_eps: eps must lie in (0, 1/3)");
    if (!(step > 0.0 && step <= 1e-3)) throw ConfigError("solve_h_eps: step must lie in (0, 1e-3]");
    auto sol = detail::integrate_h_system(std::log(3.0 * eps), t1, step, {eps, eps, eps}, "h_eps");
    return sol;
}

/// Uniform grid from log(3 eps) to t_end.
inline std::vector<double> fg_grid(double eps, double t_end, double step) {
    const double a = std::log(3.0 * eps);
    if (!(t_end > a)) throw ConfigError("fg_grid: t_end must exceed log(3 eps)");
    const auto n = static_cast<std::size_t>(std::ceil((t_end - a) / step - 1e-9));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = a + (t_end - a) * static_cast<double>(i) / static_cast<double>(n);
    return t;
}

struct FgResult {
    std::vector<LimitCurve> f;  ///< f_0, f_1, ... up to the stopping index
    std::vector<LimitCurve> g;
    LimitCurve f_eps;  ///< fixed point, iterated to roundoff
    LimitCurve g_eps;
    int iterations = 0;
};

namespace detail {

/// Trapezoid values of int_{t_0}^{t_j} (t_j - s)^2/2 f(s) ds on a uniform grid,
/// from running moments of r = s - t_0.
inline std::vector<double> quadratic_kernel_conv(const std::vector<double>& t, const std::vector<double>& f) {
    const std::size_t n = t.size();
    std::vector<double> out(n, 0.0);
    double I0 = 0.0, I1 = 0.0, I2 = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        const double ra = t[j - 1] - t[0];
        const double rb = t[j] - t[0];
        const double w = 0.5 * (rb - ra);
        I0 += w * (f[j - 1] + f[j]);
        I1 += w * (ra * f[j - 1] + rb * f[j]);
        I2 += w * (ra * ra * f[j - 1] + rb * rb * f[j]);
        out[j] = 0.5 * rb * rb * I0 - rb * I1 + 0.5 * I2;
    }
    return out;
}

inline LimitCurve fg_step(const std::vector<double>& t, const std::vector<double>& base, const std::vector<double>& prev,
                          const std::string& name) {
    const auto conv = quadratic_kernel_conv(t, prev);
    LimitCurve c{name, t, std::vector<double>(t.size())};
    for (std::size_t j = 0; j < t.size(); ++j) c.values[j] = 1.0 - (1.0 - base[j]) * std::exp(-conv[j]);
    return c;
}

inline double sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace detail

/// g_0(t) = eps [1 + tau + tau^2/2], tau = t - log(3 eps).
inline double g0_eval(double eps, double t) {
    const double tau = t - std::log(3.0 * eps);
    return eps * (1.0 + tau + 0.5 * tau * tau);
}

inline double f0_eval(double eps, double t) { return g0_eval(eps, t) - std::pow(eps, 7.0 / 6.0); }

/// f_{k+1} = 1 - (1 - f_0) exp(-int_{log 3eps}^t (t-s)^2/2 f_k), same for g.
/// The returned sequences stop once sup|f_{k+1} - f_k| < 1e-10 or k = K;
/// the fixed points are iterated further until the update stalls.
inline FgResult iterate_fg(double eps, const std::vector<double>& t_grid, int K) {
    if (!(eps > 0.0 && eps < 1.0 / 3.0)) throw ConfigError("iterate_fg: eps must lie in (0, 1/3)");
    if (K < 1) throw ConfigError("iterate_fg: K must be >= 1");
    if (t_grid.size() < 2) throw ConfigError("iterate_fg: grid needs at least two points");
    const double a = std::log(3.0 * eps);
    if (std::abs(t_grid.front() - a) > 1e-12 * std::max(1.0, std::abs(a)))
        throw ConfigError("iterate_fg: grid must start at log(3 eps)");
    const double h = t_grid[1] - t_grid[0];
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double d = t_grid[i] - t_grid[i - 1];
        if (!(d > 0.0) || std::abs(d - h) > 1e-9 * h) throw ConfigError("iterate_fg: grid must be uniform and increasing");
    }

    FgResult res;
    std::vector<double> f0(t_grid.size()), g0(t_grid.size());
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        g0[j] = g0_eval(eps, t_grid[j]);
        f0[j] = f0_eval(eps, t_grid[j]);
    }
    res.f.push_back({"f_0", t_grid, f0});
    res.g.push_back({"g_0", t_grid, g0});

    bool f_done = false, g_done = false;
    for (int k = 0; k < K && !(f_done && g_done); ++k) {
        if (!f_done) {
            auto next = detail::fg_step(t_grid, f0, res.f.back().values, "f_" + std::to_string(k + 1));
            f_done = detail::sup_gap(next.values, res.f.back().values) < 1e-10;
            res.f.push_back(std::move(next));
        }
        if (!g_done) {
            auto next = detail::fg_step(t_grid, g0, res.g.back().values, "g_" + std::to_string(k + 1));
            g_done = detail::sup_gap(next.values, res.g.back().values) < 1e-10;
            res.g.push_back(std::move(next));
        }
        res.iterations = k + 1;
    }

    auto fixed_point = [&](const std::vector<double>& base, LimitCurve start, const char* name) {
        double last = 1.0;
        for (int k = 0; k < 10000; ++k) {
            auto next = detail::fg_step(t_grid, base, start.values, name);
            const double gap = detail::sup_gap(next.values, start.values);
            start = std::move(next);
            if (gap == 0.0 || (gap < 1e-15 && gap >= last)) break;
            last = gap;
        }
        start.object = name;
        return start;
    };
    res.f_eps = fixed_point(f0, res.f.back(), "f_eps");
    res.g_eps = fixed_point(g0, res.g.back(), "g_eps");
    return res;
}

/// sum_{j > k} x^j / j!, summed forward from the first omitted term.
inline double exp_tail(double x, int k) {
    if (x < 0.0) throw DomainError("exp_tail: x must be >= 0");
    double term = 1.0;
    for (int j = 1; j <= k + 1; ++j) term *= x / j;
    double sum = 0.0;
    for (int j = k + 1; j < k + 100000; ++j) {
        sum += term;
        term *= x / (j + 1);
        if (term < 1e-17 * sum || term == 0.0) break;
    }
    return sum;
}

/// Smallest k with 3 eps^{2/3} sum_{j>k} tau^j / j! < delta, tau = t - log(3 eps).
inline int truncation_k(double eps, double t, double delta) {
    if (!(delta > 0.0)) throw ConfigError("truncation_k: delta must be > 0");
    const double tau = t - std::log(3.0 * eps);
    if (tau < 0.0) return 0;
    const double scale = 3.0 * std::pow(eps, 2.0 / 3.0);
    for (int k = 0; k < 100000; ++k)
        if (scale * exp_tail(tau, k) < delta) return k;
    throw ConfigError("truncation_k: no k found");
}

}  // namespace gossip
