#include "gossip/lattice.hpp"
#include "gossip/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <queue>

using namespace gossip;

namespace {

// Expected cover time from informed set {0} by first-step analysis over all
// 2^(N^2) subsets, with rates built directly from the model definition.
double exact_mean_cover(int N, double lambda) {
    const int n = N * N;
    const std::uint32_t full = (1u << n) - 1;
    auto site = [&](int x, int y) { return ((y + N) % N) * N + (x + N) % N; };
    // rate[u][v]: nearest-neighbour rate from u to v, 1/4 per direction.
    std::vector<std::vector<double>> rate(n, std::vector<double>(n, 0.0));
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) {
            const int u = site(x, y);
            rate[u][site(x + 1, y)] += 0.25;
            rate[u][site(x - 1, y)] += 0.25;
            rate[u][site(x, y + 1)] += 0.25;
            rate[u][site(x, y - 1)] += 0.25;
        }
    std::vector<double> T(full + 1, 0.0);
    for (std::uint32_t S = full; S-- > 0;) {
        if (!(S & 1u)) continue;
        const int k = __builtin_popcount(S);
        double total = 0.0, acc = 0.0;
        for (int v = 0; v < n; ++v) {
            if (S >> v & 1u) continue;
            double r = lambda * k / n;
            for (int u = 0; u < n; ++u)
                if (S >> u & 1u) r += rate[u][v];
            total += r;
            acc += r * T[S | (1u << v)];
        }
        T[S] = (1.0 + acc) / total;
    }
    return T[1];
}

void expect_connected(const LatticeState& st) {
    const int N = st.N();
    std::vector<std::uint8_t> seen(st.site_count(), 0);
    std::uint32_t start = 0;
    while (!st.is_informed(start)) ++start;
    std::queue<std::uint32_t> q;
    q.push(start);
    seen[start] = 1;
    std::size_t count = 0;
    while (!q.empty()) {
        const auto v = q.front();
        q.pop();
        ++count;
        for (int d = 0; d < 4; ++d) {
            const auto w = st.neighbour(v, d);
            if (st.is_informed(w) && !seen[w]) {
                seen[w] = 1;
                q.push(w);
            }
        }
    }
    (void)N;
    EXPECT_EQ(count, st.informed_count());
}

}  // namespace

TEST(Lattice, SingleSiteRateIsOne) {
    LatticeState st(10, 0.0, 0);
    EXPECT_DOUBLE_EQ(st.total_rate(), 1.0);
    EXPECT_EQ(st.frontier_slots(), 4u);
    Rng rng(1);
    const auto ev = st.step(rng);
    EXPECT_EQ(ev.kind, LatticeEventKind::frontier);
    EXPECT_EQ(st.informed_count(), 2u);
}

TEST(Lattice, FirstEventIsExponentialRateOne) {
    std::vector<double> dt;
    for (int i = 0; i < 20000; ++i) {
        Rng rng(stream_seed(3, i));
        LatticeState st(8, 0.0, 5);
        dt.push_back(st.step(rng).dt);
    }
    EXPECT_LT(ks_one_sample(dt, [](double x) { return 1.0 - std::exp(-x); }), 1.628 / std::sqrt(20000.0));
}

TEST(Lattice, FullyInformedIsTerminal) {
    LatticeState st(3, 0.2, 0);
    Rng rng(2);
    while (!st.fully_informed()) st.step(rng);
    const double t = st.t();
    const auto ev = st.step(rng);
    EXPECT_EQ(ev.kind, LatticeEventKind::none);
    EXPECT_EQ(st.t(), t);
    EXPECT_EQ(st.frontier_slots(), 0u);
}

TEST(Lattice, LongRangeNoopKeepsCount) {
    LatticeState st(6, 50.0, 0);
    Rng rng(3);
    int noops = 0;
    while (!st.fully_informed()) {
        const auto before = st.informed_count();
        const auto ev = st.step(rng);
        if (ev.kind == LatticeEventKind::long_range_noop) {
            ++noops;
            EXPECT_EQ(st.informed_count(), before);
        } else {
            EXPECT_EQ(st.informed_count(), before + 1);
        }
    }
    EXPECT_GT(noops, 0);
}

TEST(Lattice, IncrementalFrontierMatchesRecount) {
    for (int N : {2, 3, 17}) {
        LatticeState st(N, 0.01, 0);
        Rng rng(4 + N);
        while (!st.fully_informed()) {
            st.step(rng);
            ASSERT_EQ(st.frontier_slots(), st.recount_frontier_slots());
        }
    }
    Rng rng(9);
    LatticeOptions o;
    o.audit_every = 10000;
    EXPECT_GT(lattice_cover_time(128, 1e-3, rng, o), 0.0);
}

TEST(Lattice, NoLongRangeKeepsClusterConnected) {
    LatticeState st(20, 0.0, 37);
    Rng rng(5);
    int steps = 0;
    while (!st.fully_informed()) {
        st.step(rng);
        if (++steps % 25 == 0) expect_connected(st);
    }
}

TEST(Lattice, MeanCoverMatchesExactChain) {
    struct Case {
        int N;
        double lambda;
    };
    for (const auto& c : {Case{2, 0.0}, Case{2, 0.5}, Case{3, 0.0}, Case{3, 0.3}}) {
        const double exact = exact_mean_cover(c.N, c.lambda);
        std::vector<double> T;
        for (int i = 0; i < 20000; ++i) {
            Rng rng(stream_seed(100 + c.N, i));
            LatticeState st(c.N, c.lambda, 0);
            while (!st.fully_informed()) st.step(rng);
            T.push_back(st.t());
        }
        EXPECT_NEAR(mean(T), exact, 3 * standard_error(T)) << c.N << " " << c.lambda;
    }
}

TEST(Lattice, TwoByTwoChainShape) {
    // N = 2: every stage of the 3-step chain leaves at total rate 1.
    EXPECT_NEAR(exact_mean_cover(2, 0.0), 3.0, 1e-12);
}

TEST(Lattice, ZeroRateCoverTimeConcentrates) {
    std::vector<double> r;
    for (int i = 0; i < 20; ++i) {
        Rng rng(stream_seed(6, i));
        r.push_back(lattice_cover_time(48, 0.0, rng) / 48.0);
    }
    EXPECT_LT(stddev(r) / mean(r), 0.1);
}

TEST(Lattice, BadArguments) {
    EXPECT_THROW(LatticeState(1, 0.0), ConfigError);
    EXPECT_THROW(LatticeState(4, -1.0), ConfigError);
    EXPECT_THROW(LatticeState(4, 0.0, 16), ConfigError);
    Rng rng(1);
    LatticeOptions o;
    o.event_cap = 5;
    EXPECT_THROW(lattice_cover_time(10, 0.0, rng, o), ResourceLimitError);
}
