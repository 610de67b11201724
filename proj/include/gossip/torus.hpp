#pragma once

// Geometry of the real torus (R mod N)^2 and exact union-of-disks coverage
// judged at cell centers. A point z is covered at time t iff some center i
// has s_i + sqrt(2 pi) d(z, x_i) <= t.

#include "gossip/errors.hpp"
#include "gossip/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <vector>

namespace gossip {

/// sqrt(2 pi): time for a disk radius to grow by one length unit.
inline constexpr double kRadiusTime = 2.5066282746310002;

struct TorusPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Reduce a coordinate into [0, N).
inline double wrap_coordinate(double v, double N) {
    double r = std::fmod(v, N);
    if (r < 0.0) r += N;
    if (r >= N) r = 0.0;  // fmod of a tiny negative can round up to N
    return r;
}

inline TorusPoint make_point(double x, double y, double N) { return {wrap_coordinate(x, N), wrap_coordinate(y, N)}; }

inline double wrapped_gap(double a, double b, double N) {
    const double d = std::abs(a - b);
    return std::min(d, N - d);
}

inline double torus_distance(const TorusPoint& p, const TorusPoint& q, double N) {
    return std::hypot(wrapped_gap(p.x, q.x, N), wrapped_gap(p.y, q.y, N));
}

inline TorusPoint uniform_point(Rng& rng, double N) {
    const double x = rng.uniform() * N;
    const double y = rng.uniform() * N;
    return {x < N ? x : 0.0, y < N ? y : 0.0};
}

/// Per-cell earliest-cover times on a G x G grid of cell centers.
///
/// Registration is pruned by 8x8 blocks: a block is skipped when the new
/// center cannot beat the largest earliest time inside it. A lazy min-heap
/// of candidate cover events serves covered_count at nondecreasing query
/// times, which is what the coupled simulation needs.
class CoverageGrid {
public:
    static constexpr int kBlock = 8;
    static constexpr std::int32_t kNoOwner = -1;

    /// With track_clock = false the cover-event heap is not kept, which suits
    /// replay grids that are only queried through earliest().
    CoverageGrid(double N, int G, bool track_clock = true) : N_(N), G_(G), track_clock_(track_clock) {
        if (G < 2) throw ConfigError("CoverageGrid: G must be >= 2");
        if (!(N > 0.0)) throw ConfigError("CoverageGrid: N must be > 0");
        cell_ = N / G;
        const auto cells = static_cast<std::size_t>(G) * static_cast<std::size_t>(G);
        earliest_.assign(cells, kInf);
        owner_.assign(cells, kNoOwner);
        final_.assign(cells, 0);
        blocks_ = (G + kBlock - 1) / kBlock;
        block_max_.assign(static_cast<std::size_t>(blocks_) * blocks_, kInf);
    }

    double N() const { return N_; }
    int G() const { return G_; }
    double cell_size() const { return cell_; }
    double cell_area() const { return cell_ * cell_; }
    std::size_t cell_count() const { return earliest_.size(); }

    TorusPoint cell_center(int i, int j) const { return {(i + 0.5) * cell_, (j + 0.5) * cell_}; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * G_ + i; }
    TorusPoint cell_center(std::size_t idx) const {
        return cell_center(static_cast<int>(idx % G_), static_cast<int>(idx / G_));
    }

    const std::vector<double>& earliest() const { return earliest_; }
    const std::vector<std::int32_t>& owner() const { return owner_; }

    /// Registered centers in registration order; owner ids index this list.
    struct Entry {
        TorusPoint position;
        double birth_time;
    };
    const std::vector<Entry>& entries() const { return entries_; }

    /// earliest(z) <- min(earliest(z), s + sqrt(2 pi) d(z, position)) for all cells.
    /// Returns the id given to the center.
    std::int32_t register_center(const TorusPoint& position, double birth_time) {
        if (!std::isfinite(birth_time)) throw std::invalid_argument("register_center: birth time must be finite");
        if (birth_time < clock_) throw std::logic_error("register_center: birth before the coverage clock");
        const auto id = static_cast<std::int32_t>(entries_.size());
        entries_.push_back({position, birth_time});

        for (int bj = 0; bj < blocks_; ++bj) {
            const int j0 = bj * kBlock;
            const int j1 = std::min(G_, j0 + kBlock);
            const double dy_block = interval_gap(position.y, j0, j1);
            for (int bi = 0; bi < blocks_; ++bi) {
                double& bmax = block_max_[static_cast<std::size_t>(bj) * blocks_ + bi];
                const int i0 = bi * kBlock;
                const int i1 = std::min(G_, i0 + kBlock);
                const double dx_block = interval_gap(position.x, i0, i1);
                if (birth_time + kRadiusTime * std::hypot(dx_block, dy_block) >= bmax) continue;

                double dx2[kBlock];
                for (int i = i0; i < i1; ++i) {
                    const double g = wrapped_gap((i + 0.5) * cell_, position.x, N_);
                    dx2[i - i0] = g * g;
                }
                double new_max = 0.0;
                for (int j = j0; j < j1; ++j) {
                    const double gy = wrapped_gap((j + 0.5) * cell_, position.y, N_);
                    const double dy2 = gy * gy;
                    for (int i = i0; i < i1; ++i) {
                        const std::size_t idx = index(i, j);
                        const double cand = birth_time + kRadiusTime * std::sqrt(dx2[i - i0] + dy2);
                        if (cand < earliest_[idx]) {
                            earliest_[idx] = cand;
                            owner_[idx] = id;
                            if (track_clock_) heap_.push({cand, static_cast<std::uint32_t>(idx)});
                        }
                        new_max = std::max(new_max, earliest_[idx]);
                    }
                }
                bmax = new_max;
            }
        }
        return id;
    }

    /// True if some registered center covers point p at time t, judged from
    /// the owners of the 3x3 cells around p. A positive answer is exact; a
    /// negative one may miss coverage by a center owning no nearby cell.
    bool covers_point(const TorusPoint& p, double t) const {
        const int ci = std::min(G_ - 1, static_cast<int>(p.x / cell_));
        const int cj = std::min(G_ - 1, static_cast<int>(p.y / cell_));
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const int i = (ci + di + G_) % G_;
                const int j = (cj + dj + G_) % G_;
                const std::int32_t o = owner_[index(i, j)];
                if (o == kNoOwner) continue;
                const Entry& e = entries_[static_cast<std::size_t>(o)];
                if (e.birth_time + kRadiusTime * torus_distance(p, e.position, N_) <= t) return true;
            }
        }
        return false;
    }

    /// Exact number of cells covered at t; O(G^2).
    std::size_t covered_count(double t) const {
        return static_cast<std::size_t>(std::count_if(earliest_.begin(), earliest_.end(), [t](double e) { return e <= t; }));
    }

    double covered_area(double t) const { return static_cast<double>(covered_count(t)) * cell_area(); }

    /// Covered cell count at a nondecreasing sequence of query times. Later
    /// registrations must have birth_time >= the last query time.
    std::size_t advance_clock(double t) {
        if (!track_clock_) throw std::logic_error("advance_clock: grid built without a clock");
        if (t < clock_) throw std::logic_error("advance_clock: time went backwards");
        clock_ = t;
        while (!heap_.empty() && heap_.top().time <= t) {
            const HeapItem top = heap_.top();
            heap_.pop();
            if (final_[top.cell] || top.time != earliest_[top.cell]) continue;
            final_[top.cell] = 1;
            covered_order_.push_back(top.cell);
        }
        return covered_order_.size();
    }

    double clock() const { return clock_; }
    std::size_t clock_count() const { return covered_order_.size(); }
    double clock_area() const { return static_cast<double>(covered_order_.size()) * cell_area(); }
    bool fully_covered() const { return covered_order_.size() == earliest_.size(); }

    /// Cells in the order the clock finalized them.
    const std::vector<std::uint32_t>& covered_order() const { return covered_order_; }

    /// Earliest time a not-yet-finalized cell can be covered (+inf if none pending).
    double next_cover_event() {
        while (!heap_.empty()) {
            const HeapItem top = heap_.top();
            if (final_[top.cell] || top.time != earliest_[top.cell]) {
                heap_.pop();
                continue;
            }
            return top.time;
        }
        return kInf;
    }

    /// max over cells of earliest; +inf while any cell is uncovered.
    double max_earliest() const { return *std::max_element(earliest_.begin(), earliest_.end()); }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    struct HeapItem {
        double time;
        std::uint32_t cell;
        bool operator>(const HeapItem& o) const { return time > o.time; }
    };

    // Wrapped distance from coordinate v to the set of cell-center
    // coordinates with index in [k0, k1).
    double interval_gap(double v, int k0, int k1) const {
        const double lo = (k0 + 0.5) * cell_;
        const double hi = (k1 - 0.5) * cell_;
        if (v >= lo && v <= hi) return 0.0;
        return std::min(wrapped_gap(v, lo, N_), wrapped_gap(v, hi, N_));
    }

    double N_;
    int G_;
    bool track_clock_ = true;
    double cell_ = 1.0;
    int blocks_ = 1;
    std::vector<double> earliest_;
    std::vector<std::int32_t> owner_;
    std::vector<std::uint8_t> final_;
    std::vector<double> block_max_;
    std::vector<Entry> entries_;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap_;
    std::vector<std::uint32_t> covered_order_;
    double clock_ = 0.0;
};

}  // namespace gossip
