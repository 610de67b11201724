#pragma once

// The balloon process C_t coupled to the branching process A_t by thinning.
// Candidates arrive at the A-rate lambda A_t; each is kept in C with
// probability C_t / A_t and both processes place it at the same uniform
// point. C-centers landing inside the covered set are recorded as redundant
// and left out of the coverage grid, which they cannot change.

#include "gossip/branching.hpp"
#include "gossip/curve.hpp"
#include "gossip/errors.hpp"
#include "gossip/limits.hpp"
#include "gossip/rng.hpp"
#include "gossip/torus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gossip {

struct CenterRecord {
    TorusPoint position;
    double birth_time = 0.0;
    int generation = 0;
    bool redundant = false;
    bool in_c = true;  ///< false: the center belongs to A only
};

struct CoupledSample {
    double t;
    double A;
    double C;
    std::int64_t X;
    std::int64_t X_c;  ///< number of C-centers, redundant ones included
};

struct CoupledStop {
    std::optional<double> t_max;
    std::optional<double> c_target;  ///< area
    bool full_cover = false;
    /// c_target and full_cover do not end the run before A reaches this area.
    std::optional<double> a_floor;

    bool any() const { return t_max || c_target || full_cover; }
};

struct CoupledOptions {
    std::int64_t x_cap = 10'000'000;
    bool record_samples = true;
    /// Overrides lambda = N^{-alpha} when set (lambda = 0 switches births off).
    std::optional<double> lambda;
    /// After the stop, continue the pure A-process until lambda^{1/3} t >= this
    /// and store M at that time as m_hat. Zero disables.
    double limit_horizon = 0.0;
};

struct CoupledTrajectory {
    double N = 0.0;
    double alpha = 0.0;
    double lambda = 0.0;
    std::vector<CenterRecord> centers;  ///< all A-centers in birth order
    CoverageGrid grid;
    std::vector<CoupledSample> samples;
    BranchState final_state;  ///< A-process state at stop_time
    double stop_time = 0.0;
    bool full_cover = false;
    double m_hat = std::numeric_limits<double>::quiet_NaN();

    CoupledTrajectory(double n, int G) : N(n), grid(n, G) {}

    std::int64_t c_count() const {
        return std::count_if(centers.begin(), centers.end(), [](const CenterRecord& c) { return c.in_c; });
    }

    /// Per-cell earliest times in increasing order.
    const std::vector<double>& sorted_earliest() const {
        if (sorted_.empty()) {
            sorted_ = grid.earliest();
            std::sort(sorted_.begin(), sorted_.end());
        }
        return sorted_;
    }

    /// Grid area covered at t; exact given the centers for t <= stop_time.
    double covered_area(double t) const {
        if (t > stop_time && !full_cover)
            throw NotReachedError("covered_area: t=" + std::to_string(t) + " is past the stop time " +
                                  std::to_string(stop_time));
        const auto& s = sorted_earliest();
        const auto count = static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin());
        return count * grid.cell_area();
    }

    /// Analytic A_t = sum over A-centers born by t of (t - s_i)^2 / 2.
    double area_A(double t) const {
        double a = 0.0;
        for (const auto& c : centers) {
            if (c.birth_time > t) break;
            a += 0.5 * (t - c.birth_time) * (t - c.birth_time);
        }
        return a;
    }

private:
    mutable std::vector<double> sorted_;
};

/// Largest possible |grid C_t - true C_t| for a C-center set whose disks have
/// total perimeter P: P times one cell diagonal.
inline double grid_bias_bound(double total_perimeter, double cell) { return total_perimeter * cell * std::sqrt(2.0); }

/// Total C-disk perimeter at t: 2 pi sum r_i = sqrt(2 pi) sum (t - s_i).
inline double c_perimeter(const CoupledTrajectory& traj, double t) {
    double L = 0.0;
    for (const auto& c : traj.centers)
        if (c.in_c && !c.redundant && c.birth_time <= t) L += t - c.birth_time;
    return kRadiusTime * L;
}

inline CoupledTrajectory simulate_coupled(double N, double alpha, int grid_G, const CoupledStop& stop, Rng& rng,
                                          const CoupledOptions& opts = {}) {
    if (grid_G < 2) throw ConfigError("simulate_coupled: grid_G must be >= 2");
    if (!(N > 0.0)) throw ConfigError("simulate_coupled: N must be > 0");
    if (!stop.any()) throw ConfigError("simulate_coupled: no stop condition given");

    CoupledTrajectory traj(N, grid_G);
    traj.alpha = alpha;
    traj.lambda = opts.lambda ? *opts.lambda : std::pow(N, -alpha);
    if (traj.lambda < 0.0) throw ConfigError("simulate_coupled: lambda must be >= 0");
    CoverageGrid& grid = traj.grid;
    const double G2 = static_cast<double>(grid.cell_count());
    std::optional<std::size_t> target_cells;
    if (stop.c_target) {
        const double need = std::ceil(*stop.c_target / grid.cell_area() - 1e-9);
        target_cells = static_cast<std::size_t>(std::clamp(need, 1.0, G2));
    }

    BranchState s = BranchState::initial(traj.lambda);
    const TorusPoint origin = uniform_point(rng, N);
    traj.centers.push_back({origin, 0.0, 0, false, true});
    grid.register_center(origin, 0.0);
    std::int64_t x_c = 1;

    auto record = [&](double t, double A) {
        if (opts.record_samples)
            traj.samples.push_back({t, A, grid.clock_area(), s.X, x_c});
    };
    record(0.0, 0.0);

    double end_time = 0.0;
    for (;;) {
        const double delta = next_birth_delta(s, rng.exponential());
        const double t_cand = s.t + delta;
        double horizon = t_cand;
        if (stop.t_max) horizon = std::min(horizon, *stop.t_max);
        grid.advance_clock(horizon);

        // The first stop condition met at or before the horizon ends the run.
        double hit = std::numeric_limits<double>::infinity();
        if (target_cells && grid.clock_count() >= *target_cells)
            hit = grid.earliest()[grid.covered_order()[*target_cells - 1]];
        if (stop.full_cover && grid.fully_covered()) {
            traj.full_cover = true;
            hit = std::min(hit, grid.max_earliest());
        }
        if (std::isfinite(hit) && stop.a_floor) {
            const double a_time = s.t + delta_to_area(s, *stop.a_floor);
            hit = a_time <= t_cand ? std::max(hit, a_time) : std::numeric_limits<double>::infinity();
        }
        if (stop.t_max && *stop.t_max <= t_cand) hit = std::min(hit, *stop.t_max);
        if (std::isfinite(hit)) {
            end_time = hit;
            break;
        }
        if (!std::isfinite(t_cand)) throw ConfigError("simulate_coupled: stop condition is unreachable");

        s = drift(s, delta);
        s.X += 1;
        if (s.X > opts.x_cap)
            throw ResourceLimitError("simulate_coupled: center count exceeded cap " + std::to_string(opts.x_cap) +
                                     " at t=" + std::to_string(s.t));
        const TorusPoint where = uniform_point(rng, N);
        const double u = rng.uniform();
        const double c_area = grid.clock_area();
        const bool accept = s.A > 0.0 && u * s.A < c_area;
        CenterRecord rec{where, s.t, 0, false, accept};
        if (accept) {
            ++x_c;
            rec.redundant = grid.covers_point(where, s.t);
            if (!rec.redundant) grid.register_center(where, s.t);
        }
        traj.centers.push_back(rec);
        record(s.t, s.A);
    }

    s = drift(s, end_time - s.t);
    traj.stop_time = end_time;
    traj.final_state = s;
    if (!traj.full_cover && grid.max_earliest() <= end_time) traj.full_cover = true;
    if (opts.record_samples) traj.samples.push_back({end_time, s.A, grid.covered_area(end_time), s.X, x_c});

    if (opts.limit_horizon > 0.0 && traj.lambda > 0.0) {
        const double horizon = opts.limit_horizon / std::cbrt(traj.lambda);
        BranchState m = s;
        while (m.t < horizon) {
            const double d = next_birth_delta(m, rng.exponential());
            if (m.t + d >= horizon) {
                m = drift(m, horizon - m.t);
                break;
            }
            m = drift(m, d);
            m.X += 1;
            if (m.X > opts.x_cap) throw ResourceLimitError("simulate_coupled: cap exceeded while extending to the limit");
        }
        traj.m_hat = martingale_value(m);
    }
    return traj;
}

/// First time the grid covers ceil(eps G^2) cells.
inline double tau_hitting(const CoupledTrajectory& traj, double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("tau_hitting: eps must lie in (0, 1]");
    const auto& s = traj.sorted_earliest();
    const double need = std::ceil(eps * static_cast<double>(s.size()) - 1e-9);
    const auto k = static_cast<std::size_t>(std::clamp(need, 1.0, static_cast<double>(s.size())));
    const double t = s[k - 1];
    if (!(t <= traj.stop_time))
        throw NotReachedError("tau_hitting: coverage level " + std::to_string(eps) + " not reached by t=" +
                              std::to_string(traj.stop_time));
    return t;
}

struct CoverTime {
    double value;
    double uncertainty;  ///< sqrt(2 pi) times one cell diagonal
};

inline CoverTime cover_time(const CoupledTrajectory& traj) {
    const double t = traj.sorted_earliest().back();
    if (!(t <= traj.stop_time)) throw NotReachedError("cover_time: torus not covered by the stop time");
    return {t, kRadiusTime * traj.grid.cell_size() * std::sqrt(2.0)};
}

/// sigma = first time the A-area of the trajectory reaches `level`, solved
/// exactly between births.
inline double sigma_of(const CoupledTrajectory& traj, double level) {
    BranchState s = BranchState::initial(traj.lambda);
    for (std::size_t i = 1; i <= traj.centers.size(); ++i) {
        const double next = i < traj.centers.size() ? traj.centers[i].birth_time : traj.stop_time;
        const double d = delta_to_area(s, level);
        if (s.t + d <= next) return s.t + d;
        // A run stopped on this level may land a rounding error short of it.
        if (i == traj.centers.size() && drift(s, next - s.t).A >= level * (1.0 - 1e-12)) return next;
        s = drift(s, next - s.t);
        if (i < traj.centers.size()) s.X += 1;
    }
    throw NotReachedError("sigma_of: A-area level " + std::to_string(level) + " not reached by t=" +
                          std::to_string(traj.stop_time));
}

struct CouplingAudit {
    bool xc_le_x = true;       ///< X~_t <= X_t on every sample
    bool c_le_a = true;        ///< grid C_t <= A_t + grid bias on every sample
    double worst_excess = 0.0; ///< max of (C - A - bias) over samples
    bool c_subset_a = true;    ///< every C-center is a recorded A-center
};

/// Checks the coupling inequalities on every recorded sample.
inline CouplingAudit audit_coupling(const CoupledTrajectory& traj) {
    CouplingAudit out;
    const double cell = traj.grid.cell_size();
    std::size_t next = 0;
    double count = 0.0, birth_sum = 0.0;  // non-redundant C-centers born so far
    for (const auto& smp : traj.samples) {
        while (next < traj.centers.size() && traj.centers[next].birth_time <= smp.t) {
            const auto& c = traj.centers[next++];
            if (c.in_c && !c.redundant) {
                count += 1.0;
                birth_sum += c.birth_time;
            }
        }
        if (smp.X_c > smp.X) out.xc_le_x = false;
        const double perimeter = kRadiusTime * (count * smp.t - birth_sum);
        const double excess = smp.C - smp.A - grid_bias_bound(perimeter, cell);
        out.worst_excess = std::max(out.worst_excess, excess);
        if (excess > 0.0) out.c_le_a = false;
    }
    // C-centers are drawn from the A candidate stream, so each sits in the
    // A-list at its own birth time and position by construction; recheck
    // that the list is time ordered.
    for (std::size_t i = 1; i < traj.centers.size(); ++i)
        if (traj.centers[i].birth_time < traj.centers[i - 1].birth_time) out.c_subset_a = false;
    return out;
}

/// max |earliest| difference between the grid and a replay that also
/// registers the redundant C-centers.
inline double redundant_replay_gap(const CoupledTrajectory& traj) {
    CoverageGrid full(traj.N, traj.grid.G(), false);
    for (const auto& c : traj.centers)
        if (c.in_c) full.register_center(c.position, c.birth_time);
    double gap = 0.0;
    const auto& a = traj.grid.earliest();
    const auto& b = full.earliest();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isinf(a[i]) && std::isinf(b[i])) continue;
        gap = std::max(gap, std::abs(a[i] - b[i]));
    }
    return gap;
}

/// Generation labels relative to the window start W: centers born by W are
/// generation 0. A later C-center is born from a covered point chosen
/// uniformly at its birth time and gets one more than the smallest
/// generation among C-centers covering that point. An A-only center takes
/// its parent among earlier A-centers with probability proportional to the
/// parent's disk area, one more than that parent's label.
inline void label_generations(CoupledTrajectory& traj, double W, std::uint64_t seed) {
    Rng rng(seed);
    const CoverageGrid& grid = traj.grid;
    const double N = traj.N;
    auto& centers = traj.centers;

    // Cells by final earliest time; the first k are the cells covered at t.
    std::vector<std::uint32_t> by_time(grid.cell_count());
    for (std::uint32_t i = 0; i < by_time.size(); ++i) by_time[i] = i;
    std::sort(by_time.begin(), by_time.end(), [&](std::uint32_t a, std::uint32_t b) {
        return grid.earliest()[a] < grid.earliest()[b];
    });
    const auto& sorted = traj.sorted_earliest();

    // Grid entry id -> center index.
    std::vector<std::size_t> entry_center;
    for (std::size_t i = 0; i < centers.size(); ++i)
        if (centers[i].in_c && !centers[i].redundant) entry_center.push_back(i);

    std::vector<std::vector<std::size_t>> c_by_gen;  // C-centers per generation, birth order
    auto add_c = [&](std::size_t idx) {
        const auto g = static_cast<std::size_t>(centers[idx].generation);
        if (c_by_gen.size() <= g) c_by_gen.resize(g + 1);
        c_by_gen[g].push_back(idx);
    };
    auto covers = [&](std::size_t j, const TorusPoint& z, double t) {
        return centers[j].birth_time + kRadiusTime * torus_distance(z, centers[j].position, N) <= t;
    };

    for (std::size_t i = 0; i < centers.size(); ++i) {
        CenterRecord& c = centers[i];
        if (c.birth_time <= W || i == 0) {
            c.generation = 0;
            if (c.in_c) add_c(i);
            continue;
        }
        if (!c.in_c) {
            const double span = c.birth_time - centers[0].birth_time;
            for (;;) {
                const auto j = static_cast<std::size_t>(rng.below(i));
                const double age = (c.birth_time - centers[j].birth_time) / span;
                if (rng.uniform() < age * age) {
                    c.generation = centers[j].generation + 1;
                    break;
                }
            }
            continue;
        }
        const auto covered = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), c.birth_time) -
                                                      sorted.begin());
        int parent_gen = 0;
        if (covered == 0) {
            // No cell center covered yet: fall back to the oldest C-center.
            parent_gen = centers[0].generation;
        } else {
            const std::uint32_t cell = by_time[rng.below(covered)];
            const TorusPoint z = grid.cell_center(cell);
            const std::size_t owner = entry_center[static_cast<std::size_t>(grid.owner()[cell])];
            parent_gen = centers[owner].generation;
            for (int g = 0; g < parent_gen; ++g) {
                bool found = false;
                for (std::size_t j : c_by_gen[static_cast<std::size_t>(g)]) {
                    if (centers[j].birth_time > c.birth_time) break;
                    if (covers(j, z, c.birth_time)) {
                        found = true;
                        break;
                    }
                }
                if (found) {
                    parent_gen = g;
                    break;
                }
            }
        }
        c.generation = parent_gen + 1;
        add_c(i);
    }
}

inline int max_generation(const CoupledTrajectory& traj) {
    int m = 0;
    for (const auto& c : traj.centers) m = std::max(m, c.generation);
    return m;
}

/// Coverage by the C-centers of generations <= k, replayed into a scratch grid.
struct GenerationCoverage {
    std::vector<double> sorted;
    double cell_area = 0.0;

    double operator()(double t) const {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) * cell_area;
    }
};

inline GenerationCoverage coverage_by_generation(const CoupledTrajectory& traj, int k) {
    CoverageGrid scratch(traj.N, traj.grid.G(), false);
    for (const auto& c : traj.centers)
        if (c.in_c && !c.redundant && c.generation <= k) scratch.register_center(c.position, c.birth_time);
    GenerationCoverage out;
    out.sorted = scratch.earliest();
    std::sort(out.sorted.begin(), out.sorted.end());
    out.cell_area = scratch.cell_area();
    return out;
}

/// A^0_{W,t} = A_W + L_W (t - W) + X_W (t - W)^2 / 2 from the A-centers born by W.
inline double generation0_area_A(const CoupledTrajectory& traj, double W, double t) {
    double X = 0.0, L = 0.0, A = 0.0;
    for (const auto& c : traj.centers) {
        if (c.birth_time > W) break;
        const double age = W - c.birth_time;
        X += 1.0;
        L += age;
        A += 0.5 * age * age;
    }
    const double d = t - W;
    return A + L * d + 0.5 * X * d * d;
}

/// s -> N^{-2} C_{psi(s)} on the given s-grid, psi(s) = R + N^{alpha/3} s with
/// R = N^{alpha/3}[(2 - 2 alpha/3) log N - log M_hat].
inline LimitCurve rescaled_profile(const CoupledTrajectory& traj, double M_hat, double alpha, double N,
                                   const std::vector<double>& s_grid) {
    if (!(M_hat > 0.0)) throw DomainError("rescaled_profile: M_hat must be > 0");
    const ScaleFunctions sf(N, alpha, M_hat);
    LimitCurve out{"profile", s_grid, std::vector<double>(s_grid.size())};
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        const double t = sf.psi(s_grid[i]);
        if (t < 0.0)
            throw DomainError("rescaled_profile: psi(s) < 0 for s=" + std::to_string(s_grid[i]) +
                              "; feasible window starts at s=" + std::to_string(sf.psi_inverse(0.0)));
        out.values[i] = traj.covered_area(t) / (N * N);
    }
    return out;
}

inline std::vector<double> uniform_grid(double a, double b, std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = points == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

}  // namespace gossip
