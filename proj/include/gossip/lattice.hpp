#pragma once

// Continuous-time gossip chain on (Z mod N)^2. Each informed site passes the
// rumour to each of its four neighbour slots at rate 1/4, and makes
// long-range attempts at rate lambda to a uniform site (a no-op when that
// site already knows).

#include "gossip/errors.hpp"
#include "gossip/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace gossip {

enum class LatticeEventKind { none, frontier, long_range_hit, long_range_noop };

struct LatticeEvent {
    LatticeEventKind kind = LatticeEventKind::none;
    double dt = 0.0;
    std::uint32_t source = 0;
    std::uint32_t target = 0;
};

/// Informed set plus the multiset of informed -> uninformed neighbour slots.
/// A slot is (site, direction); on N = 2 opposite directions reach the same
/// neighbour, so that neighbour is reached at rate 1/2.
class LatticeState {
public:
    static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

    LatticeState(int N, double lambda, std::uint32_t start = 0) : N_(N), lambda_(lambda) {
        if (N < 2) throw ConfigError("LatticeState: N must be >= 2");
        if (lambda < 0.0) throw ConfigError("LatticeState: lambda must be >= 0");
        const auto sites = static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
        informed_.assign(sites, 0);
        slot_pos_.assign(sites * 4, kNone);
        if (start >= sites) throw ConfigError("LatticeState: start site out of range");
        inform(start);
    }

    int N() const { return N_; }
    double lambda() const { return lambda_; }
    double t() const { return t_; }
    std::size_t site_count() const { return informed_.size(); }
    std::size_t informed_count() const { return informed_count_; }
    bool is_informed(std::uint32_t site) const { return informed_[site] != 0; }
    bool fully_informed() const { return informed_count_ == informed_.size(); }
    std::size_t frontier_slots() const { return edges_.size(); }
    double frontier_rate() const { return 0.25 * static_cast<double>(edges_.size()); }
    double total_rate() const { return frontier_rate() + lambda_ * static_cast<double>(informed_count_); }

    std::uint32_t neighbour(std::uint32_t site, int dir) const {
        const int x = static_cast<int>(site % N_);
        const int y = static_cast<int>(site / N_);
        static constexpr int dx[4] = {1, -1, 0, 0};
        static constexpr int dy[4] = {0, 0, 1, -1};
        const int nx = (x + dx[dir] + N_) % N_;
        const int ny = (y + dy[dir] + N_) % N_;
        return static_cast<std::uint32_t>(ny * N_ + nx);
    }

    /// From-scratch count of informed -> uninformed slots.
    std::size_t recount_frontier_slots() const {
        std::size_t n = 0;
        for (std::uint32_t s = 0; s < informed_.size(); ++s) {
            if (!informed_[s]) continue;
            for (int d = 0; d < 4; ++d)
                if (!informed_[neighbour(s, d)]) ++n;
        }
        return n;
    }

    LatticeEvent step(Rng& rng) {
        LatticeEvent ev;
        if (fully_informed()) return ev;
        const double rate = total_rate();
        ev.dt = rng.exponential() / rate;
        t_ += ev.dt;
        const double pick = rng.uniform() * rate;
        if (pick < frontier_rate() && !edges_.empty()) {
            const std::uint32_t slot = edges_[rng.below(edges_.size())];
            ev.kind = LatticeEventKind::frontier;
            ev.source = slot / 4;
            ev.target = neighbour(ev.source, static_cast<int>(slot % 4));
            inform(ev.target);
        } else {
            ev.source = informed_list_[rng.below(informed_list_.size())];
            ev.target = static_cast<std::uint32_t>(rng.below(informed_.size()));
            if (informed_[ev.target]) {
                ev.kind = LatticeEventKind::long_range_noop;
            } else {
                ev.kind = LatticeEventKind::long_range_hit;
                inform(ev.target);
            }
        }
        return ev;
    }

private:
    void add_slot(std::uint32_t slot) {
        slot_pos_[slot] = static_cast<std::uint32_t>(edges_.size());
        edges_.push_back(slot);
    }

    void remove_slot(std::uint32_t slot) {
        const std::uint32_t pos = slot_pos_[slot];
        const std::uint32_t last = edges_.back();
        edges_[pos] = last;
        slot_pos_[last] = pos;
        edges_.pop_back();
        slot_pos_[slot] = kNone;
    }

    void inform(std::uint32_t v) {
        informed_[v] = 1;
        ++informed_count_;
        informed_list_.push_back(v);
        for (int d = 0; d < 4; ++d) {
            const std::uint32_t w = neighbour(v, d);
            // Slots of informed neighbours that pointed at v.
            if (informed_[w]) {
                for (int e = 0; e < 4; ++e) {
                    const std::uint32_t slot = w * 4 + static_cast<std::uint32_t>(e);
                    if (slot_pos_[slot] != kNone && neighbour(w, e) == v) remove_slot(slot);
                }
            }
            if (!informed_[w]) add_slot(v * 4 + static_cast<std::uint32_t>(d));
        }
    }

    int N_;
    double lambda_;
    double t_ = 0.0;
    std::vector<std::uint8_t> informed_;
    std::vector<std::uint32_t> informed_list_;
    std::size_t informed_count_ = 0;
    std::vector<std::uint32_t> edges_;
    std::vector<std::uint32_t> slot_pos_;
};

struct LatticeOptions {
    std::uint64_t event_cap = 2'000'000'000ULL;
    /// Compare incremental and recounted frontier every this many events (0 = never).
    std::uint64_t audit_every = 0;
};

/// Time until all N^2 sites are informed, lambda = N^{-alpha} unless overridden.
inline double lattice_cover_time(int N, double lambda, Rng& rng, const LatticeOptions& opts = {}) {
    const auto sites = static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(N);
    LatticeState st(N, lambda, static_cast<std::uint32_t>(rng.below(sites)));
    std::uint64_t events = 0;
    while (!st.fully_informed()) {
        st.step(rng);
        if (++events > opts.event_cap)
            throw ResourceLimitError("lattice_cover_time: event cap " + std::to_string(opts.event_cap) + " exceeded");
        if (opts.audit_every && events % opts.audit_every == 0 && st.recount_frontier_slots() != st.frontier_slots())
            throw std::logic_error("lattice_cover_time: frontier audit failed");
    }
    return st.t();
}

inline double lattice_cover_time_alpha(int N, double alpha, Rng& rng, const LatticeOptions& opts = {}) {
    return lattice_cover_time(N, std::pow(static_cast<double>(N), -alpha), rng, opts);
}

}  // namespace gossip
