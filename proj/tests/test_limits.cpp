#include "gossip/limits.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gossip;

namespace {

double partial_V(double t, double lambda, int r = 0) {
    // sum lambda^k t^{3k+r} / (3k+r)!, plain loop.
    double sum = 0.0;
    for (int k = 0; k < 60; ++k) {
        double term = std::pow(lambda, k);
        for (int j = 1; j <= 3 * k + r; ++j) term *= t / j;
        sum += term;
    }
    return sum;
}

// Trapezoid quadrature of int (t-s)^2/2 h(s) ds over the curve's grid with
// the e^s/3 tail before the first point.
double h_integral(const LimitCurve& h, double t) {
    const double t0 = h.t.front();
    double sum = std::exp(t0) / 3.0 * (0.5 * (t - t0) * (t - t0) + (t - t0) + 1.0);
    for (std::size_t i = 1; i < h.size() && h.t[i - 1] < t; ++i) {
        const double a = h.t[i - 1], b = std::min(h.t[i], t);
        auto f = [&](double s, double v) { return 0.5 * (t - s) * (t - s) * v; };
        sum += 0.5 * (b - a) * (f(a, h.values[i - 1]) + f(b, h.at(b)));
    }
    return sum;
}

}  // namespace

TEST(V, ValueAtZeroAndOne) {
    EXPECT_DOUBLE_EQ(V_eval(0.0, 1.0), 1.0);
    EXPECT_NEAR(V_eval(1.0, 1.0, SeriesMode::series), 1.1680583, 1e-7);
    EXPECT_NEAR(V_eval(1.0, 1.0, SeriesMode::closed), V_eval(1.0, 1.0, SeriesMode::series), 1e-10);
}

TEST(V, SeriesMatchesClosedForm) {
    for (double lambda : {0.125, 1.0, 8.0})
        for (double t = 0.0; t <= 10.0; t += 0.05) {
            const double s = V_eval(t, lambda, SeriesMode::series);
            EXPECT_NEAR(V_eval(t, lambda, SeriesMode::closed), s, 1e-10 * s);
            EXPECT_NEAR(s, partial_V(t, lambda), 1e-12 * s);
        }
}

TEST(V, ThirdDerivativeEqualsLambdaV) {
    const double h = 1e-2;
    for (double lambda : {1.0, 2.0})
        for (double t : {0.5, 1.0, 2.0}) {
            auto V = [&](double s) { return V_eval(s, lambda, SeriesMode::closed); };
            const double d3 = (V(t + 2 * h) - 2 * V(t + h) + 2 * V(t - h) - V(t - 2 * h)) / (2 * h * h * h);
            EXPECT_NEAR(d3, lambda * V(t), 1e-3 * lambda * V(t));
        }
}

TEST(MeanCurves, AtZero) {
    const auto m = mean_curves(0.0, 1.0);
    EXPECT_DOUBLE_EQ(m.EX, 1.0);
    EXPECT_DOUBLE_EQ(m.EL, 0.0);
    EXPECT_DOUBLE_EQ(m.EA, 0.0);
}

TEST(MeanCurves, SeriesAndDerivatives) {
    for (double lambda : {1.0, 3.0})
        for (double t : {0.7, 2.0, 4.0}) {
            const auto m = mean_curves(t, lambda);
            EXPECT_NEAR(m.EX, partial_V(t, lambda), 1e-10 * m.EX);
            EXPECT_NEAR(m.EX, V_eval(t, lambda, SeriesMode::closed), 1e-10 * m.EX);
            const double h = 1e-4;
            auto V = [&](double s) { return V_eval(s, lambda, SeriesMode::closed); };
            const double d1 = (V(t + h) - V(t - h)) / (2 * h);
            const double d2 = (V(t + h) - 2 * V(t) + V(t - h)) / (h * h);
            EXPECT_NEAR(m.EA, d1 / lambda, 1e-6 * m.EA);
            EXPECT_NEAR(m.EL, d2 / lambda, 1e-5 * m.EL);
            EXPECT_NEAR(m.EL, partial_V(t, lambda, 1), 1e-10 * m.EL);
            EXPECT_NEAR(m.EA, partial_V(t, lambda, 2), 1e-10 * m.EA);
        }
    const auto far = mean_curves(40.0, 1.0);
    EXPECT_NEAR(far.EX, std::exp(40.0) / 3.0, 1e-12 * far.EX);
}

TEST(EM2, ValueAndBound) {
    const auto z = EM2_exact(0.0, 1.0);
    EXPECT_NEAR(z.value, 17.0 / 21.0, 1e-15);
    EXPECT_NEAR(z.bound, 4.0 / 15.0, 1e-15);
    EXPECT_TRUE(z.contains(1.0));
    EXPECT_NEAR(EM2_exact(60.0, 1.0).value, 8.0 / 7.0, 1e-15);
    EXPECT_LT(EM2_exact(60.0, 1.0).bound, 1e-60);
    EXPECT_NEAR(EM2_exact(1.0, 8.0).value, EM2_exact(2.0, 1.0).value, 1e-15);
}

TEST(EJ2, AtZeroContainsOne) {
    EXPECT_TRUE(EJ2_exact(0.0, 1.0).contains(1.0));
}

TEST(Scale, IdentitiesAndExample) {
    for (double N : {64.0, 100.0, 1000.0})
        for (double alpha : {0.5, 1.0, 2.5})
            for (double eps : {1e-3, 0.1, 1.0 / 3.0}) {
                const ScaleFunctions sf(N, alpha);
                EXPECT_NEAR(sf.a(sf.S(eps)), eps * N * N, 1e-12 * eps * N * N);
                const double t = 3.7;
                EXPECT_NEAR(sf.l(t), std::pow(N, -alpha / 3) * sf.a(t), 1e-12 * sf.a(t));
                EXPECT_NEAR(sf.x(t), std::pow(N, -2 * alpha / 3) * sf.a(t), 1e-12 * sf.a(t));
                EXPECT_NEAR(sf.a(t), growth_a(t, sf.lambda()), 1e-12 * sf.a(t));
            }
    const ScaleFunctions sf(100, 1.0);
    EXPECT_NEAR(sf.S(1.0 / 3.0), std::cbrt(100.0) * 4.0 / 3.0 * std::log(100.0), 1e-12);
    EXPECT_NEAR(sf.S(1.0 / 3.0), 28.50, 5e-3);
    const ScaleFunctions sm(100, 1.0, 2.5);
    EXPECT_EQ(sm.psi(0.0), sm.R);
    EXPECT_NEAR(sm.psi_inverse(sm.psi(1.3)), 1.3, 1e-12);
    EXPECT_EQ(scale_eval(sm, ScaleWhich::psi, 0.0), sm.R);
    EXPECT_EQ(scale_eval(sm, ScaleWhich::S, 0.1), sm.S(0.1));
    EXPECT_THROW(ScaleFunctions(100, 1.0, 0.0), DomainError);
}

TEST(Quadrature, ConvolutionLemma) {
    const GaussLegendre gl(8);
    for (int m = 0; m <= 4; ++m)
        for (int n = 0; n <= 4; ++n)
            for (double t : {0.3, 1.0, 2.5}) {
                const double q = gl.integrate([&](double s) { return std::pow(s, m) * std::pow(t - s, n); }, 0.0, t);
                const double exact = std::tgamma(m + 1) * std::tgamma(n + 1) / std::tgamma(m + n + 2) * std::pow(t, m + n + 1);
                EXPECT_NEAR(q, exact, 1e-12 * exact);
                EXPECT_NEAR(conv_monomial_exact(m, n, t), exact, 1e-13 * exact);
            }
    EXPECT_NEAR(GaussLegendre(1).integrate([](double s) { return s; }, 0, 2), 2.0, 1e-15);
}

TEST(SolveH, InitialValueAndShape) {
    const auto sol = solve_h_system(-12.0, 15.0, 1e-3);
    const auto& h = sol.h;
    EXPECT_NEAR(h.values.front(), std::exp(-12.0) / 3, std::exp(-12.0) * std::exp(-12.0) / 3);
    EXPECT_TRUE(h.is_nondecreasing());
    for (std::size_t i = 0; i < h.size(); ++i) {
        EXPECT_GT(h.values[i], 0.0);
        EXPECT_LE(h.values[i], 1.0);
        // 1 - h = exp(-u2) stays positive even where h rounds to 1.
        EXPECT_GT(std::exp(-sol.u2[i]), 0.0);
    }
    EXPECT_GT(h.at(15.0), 0.999);
    EXPECT_LT(h.at(-8.0), 2 * std::exp(-8.0));
}

TEST(SolveH, IntegralEquationResidual) {
    const auto h = solve_h(-12.0, 15.0, 1e-3);
    for (int k = 0; k < 20; ++k) {
        const double t = -10.0 + 25.0 * (k + 0.5) / 20;
        EXPECT_NEAR(h.at(t), 1.0 - std::exp(-h_integral(h, t)), 1e-6) << t;
    }
}

TEST(SolveH, StepAndStartInvariance) {
    const auto a = solve_h(-10.0, 15.0, 1e-3);
    const auto b = solve_h(-10.0, 15.0, 5e-4);
    const auto c = solve_h(-14.0, 15.0, 1e-3);
    double gap_step = 0.0, gap_start = 0.0;
    for (double t = -10.0; t <= 15.0; t += 0.01) {
        gap_step = std::max(gap_step, std::abs(a.at(t) - b.at(t)));
        gap_start = std::max(gap_start, std::abs(a.at(t) - c.at(t)));
    }
    EXPECT_LT(gap_step, 1e-6);
    EXPECT_LT(gap_start, 1e-6);
}

TEST(SolveH, RejectsBadArguments) {
    EXPECT_THROW(solve_h(-7.0, 1.0, 1e-3), ConfigError);
    EXPECT_THROW(solve_h(-9.0, 1.0, 2e-3), ConfigError);
    EXPECT_THROW(solve_h(-9.0, 1.0, 0.0), ConfigError);
}

TEST(SolveHEps, MatchesTailAndStaysNearH) {
    const double eps = 1e-3;
    const auto he = solve_h_eps(eps, 2.0, 1e-3);
    EXPECT_NEAR(he.h.values.front(), 1.0 - std::exp(-eps), 1e-15);
    const auto h = solve_h(-14.0, 3.0, 1e-3);
    for (std::size_t i = 0; i < he.h.size(); i += 50)
        EXPECT_NEAR(he.h.values[i], h.at(he.h.t[i]), 3 * eps * std::exp(he.h.t[i]));
    EXPECT_THROW(solve_h_eps(0.4, 2.0, 1e-3), ConfigError);
}

TEST(Fg, MonotoneIterationAndBounds) {
    const auto h = solve_h(-14.0, 3.0, 1e-3);
    for (double eps : {1e-2, 1e-3}) {
        const auto grid = fg_grid(eps, 2.0, 1e-3);
        EXPECT_NEAR(grid.front(), std::log(3 * eps), 1e-15);
        EXPECT_NEAR(grid.back(), 2.0, 1e-12);
        const auto fg = iterate_fg(eps, grid, 200);
        ASSERT_GE(fg.f.size(), 2u);
        for (std::size_t k = 1; k < fg.f.size(); ++k)
            for (std::size_t j = 0; j < grid.size(); ++j) {
                ASSERT_GE(fg.f[k].values[j], fg.f[k - 1].values[j] - 1e-13);
                ASSERT_LE(fg.f[k].values[j], fg.f_eps.values[j] + 1e-12);
            }
        const double a = grid.front();
        for (std::size_t k = 0; k < fg.f.size(); ++k)
            for (std::size_t j = 0; j < grid.size(); j += 7) {
                const double tau = grid[j] - a;
                const double bound = std::pow(tau, 3.0 * k) / std::tgamma(3.0 * k + 1);
                ASSERT_LE(std::abs(fg.f[k].values[j] - fg.f_eps.values[j]), bound + 1e-12) << k << " " << j;
            }
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double t = grid[j];
            EXPECT_GE(fg.g_eps.values[j], fg.f_eps.values[j]);
            EXPECT_LE(std::abs(fg.g_eps.values[j] - h.at(t)), 3 * eps * std::exp(2.0));
            EXPECT_LE(std::abs(fg.f_eps.values[j] - h.at(t)), (std::pow(eps, 1.0 / 6) / 3 + 3 * eps) * std::exp(2.0));
        }
        EXPECT_TRUE(fg.f_eps.is_nondecreasing());
        EXPECT_TRUE(fg.g_eps.is_nondecreasing());
    }
}

TEST(Fg, StartingIterates) {
    const double eps = 0.01;
    EXPECT_NEAR(g0_eval(eps, std::log(3 * eps)), eps, 1e-15);
    EXPECT_NEAR(g0_eval(eps, std::log(3 * eps) + 1) - f0_eval(eps, std::log(3 * eps) + 1), std::pow(eps, 7.0 / 6), 1e-15);
}

TEST(Fg, RejectsBadArguments) {
    EXPECT_THROW(iterate_fg(1.0 / 3.0, {0.0, 0.1}, 5), ConfigError);
    EXPECT_THROW(iterate_fg(0.5, {0.0, 0.1}, 5), ConfigError);
    const auto grid = fg_grid(0.01, 1.0, 1e-2);
    EXPECT_THROW(iterate_fg(0.01, grid, 0), ConfigError);
    auto shifted = grid;
    for (auto& t : shifted) t += 0.5;
    EXPECT_THROW(iterate_fg(0.01, shifted, 5), ConfigError);
}

TEST(Truncation, TailSumOracle) {
    for (double x : {0.0, 0.5, 2.0, 5.0, 9.0})
        for (int k = 0; k <= 12; ++k) {
            double partial = 0.0, term = 1.0;
            for (int j = 0; j <= k; ++j) {
                partial += term;
                term *= x / (j + 1);
            }
            const double oracle = std::exp(x) - partial;
            EXPECT_NEAR(exp_tail(x, k), oracle, 1e-12 * std::max(1.0, std::exp(x)));
        }
}

TEST(Truncation, DepthRule) {
    EXPECT_EQ(truncation_k(0.01, 1.0, 1e9), 0);
    const int k = truncation_k(0.01, 1.0, 1e-4);
    const double tau = 1.0 - std::log(0.03);
    const double scale = 3 * std::pow(0.01, 2.0 / 3);
    EXPECT_LT(scale * exp_tail(tau, k), 1e-4);
    EXPECT_GE(scale * exp_tail(tau, k - 1), 1e-4);
    EXPECT_THROW(truncation_k(0.01, 1.0, 0.0), ConfigError);
}
