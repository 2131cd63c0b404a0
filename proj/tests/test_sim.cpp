#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "censorless/sim/simulator.hpp"

using namespace censorless::sim;

namespace {

SimParams small(std::uint64_t seed = 1) {
    SimParams p;
    p.n_clients = 40;
    p.n_proxies = 5;
    p.proxy_capacity = 10;
    p.horizon = 60;
    p.seed = seed;
    return p;
}

}  // namespace

TEST(SimUtility, ClientUtilityHandValue) {
    SimParams p;
    SimClient c;
    SimProxy x;
    x.knowers = 3;
    x.connected = 2;
    x.alive_ticks = 5;
    x.x = 1;
    // 1*3 + 1*2 + 1*5 - 1*1
    EXPECT_DOUBLE_EQ(client_utility(c, x, p), 9.0);
    p.beta = {2, 0, 0, 3};
    EXPECT_DOUBLE_EQ(client_utility(c, x, p), 3.0);
}

TEST(SimUtility, ProxyUtilityHandValue) {
    SimParams p;  // alpha = {2, 1, 1, 2, 10}
    SimClient c;
    c.utilization = 4;
    c.requests = 1;
    SimProxy x;
    x.y = 0.2;
    // 2*4 - 1*1 - 0 - 0 - 10*0.2
    EXPECT_DOUBLE_EQ(proxy_utility(x, c, p), 5.0);
}

TEST(SimUtility, UtilizationTermSaturatesAtCap) {
    SimParams p;
    SimClient at_cap, above;
    at_cap.utilization = 10;
    above.utilization = 1000;
    SimProxy x;
    EXPECT_DOUBLE_EQ(proxy_utility(x, at_cap, p), proxy_utility(x, above, p));
    EXPECT_DOUBLE_EQ(proxy_utility(x, above, p), 20.0);
}

TEST(SimUtility, LinearInPenaltyCounts) {
    SimParams p;
    SimProxy x;
    SimClient c;
    double base = proxy_utility(x, c, p);
    for (int k = 1; k <= 20; ++k) {
        SimClient d = c, g = c, r = c;
        d.known_blocked = k;
        g.assigned_blocked = k;
        r.requests = k;
        EXPECT_DOUBLE_EQ(base - proxy_utility(x, d, p), p.alpha[3] * k);
        EXPECT_DOUBLE_EQ(base - proxy_utility(x, g, p), p.alpha[2] * k);
        EXPECT_DOUBLE_EQ(base - proxy_utility(x, r, p), p.alpha[1] * k);
    }
}

TEST(SimUtility, CensorUtilityHandValue) {
    SimParams p;
    SimState s;
    SimProxy x;
    x.y = 0.2;
    s.proxies = {x};
    s.live = {0};
    SimClient agent;
    agent.is_censor_agent = true;
    agent.utilization = 4;
    agent.requests = 1;
    SimClient served, stranded;
    served.proxy = 0;
    s.clients = {agent, served, stranded};
    for (double omega : {0.0, 1.0, 2.5}) {
        p.omega = omega;
        // omega * 5 (one agent, one live proxy) + half the honest clients stranded
        EXPECT_DOUBLE_EQ(censor_utility(s, p), 5.0 * omega + 0.5);
    }
    EXPECT_DOUBLE_EQ(blocked_client_ratio(s), 0.5);
}

TEST(SimParams, ValidationNamesTheField) {
    auto expect_field = [](SimParams p, const std::string& field) {
        try {
            p.validate();
            FAIL() << field;
        } catch (const std::invalid_argument& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    SimParams p;
    p.censor_fraction = 1.5;
    expect_field(p, "censor_fraction");
    p = {};
    p.n_proxies = 0;
    expect_field(p, "n_proxies");
    p = {};
    p.horizon = 0;
    expect_field(p, "horizon");
    p = {};
    p.candidate_waits = {};
    expect_field(p, "candidate_waits");
    p = {};
    p.omega = std::numeric_limits<double>::infinity();
    expect_field(p, "omega");
}

TEST(SimRun, DeterministicForASeed) {
    auto a = run(small(3));
    auto b = run(small(3));
    EXPECT_EQ(a.series.connected_ratio, b.series.connected_ratio);
    EXPECT_EQ(a.series.nonblocked_ratio, b.series.nonblocked_ratio);
    auto c = run(small(4));
    EXPECT_NE(a.series.connected_ratio, c.series.connected_ratio);
    EXPECT_EQ(to_csv(a.series), to_csv(b.series));
}

TEST(SimRun, RatiosStayInUnitInterval) {
    for (auto strategy : {CensorStrategy::aggressive, CensorStrategy::optimal}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            auto p = small(seed);
            p.strategy = strategy;
            auto r = run(p);
            ASSERT_EQ(r.series.connected_ratio.size(), static_cast<std::size_t>(p.horizon));
            for (std::size_t t = 0; t < r.series.connected_ratio.size(); ++t) {
                EXPECT_GE(r.series.connected_ratio[t], 0.0);
                EXPECT_LE(r.series.connected_ratio[t], 1.0);
                EXPECT_GE(r.series.nonblocked_ratio[t], 0.0);
                EXPECT_LE(r.series.nonblocked_ratio[t], 1.0);
            }
        }
    }
}

TEST(SimRun, AssignmentInvariantUnderAlphaScaling) {
    auto p = small(9);
    auto scaled = p;
    for (auto& a : scaled.alpha) a *= 3;
    scaled.utilization_cap = p.utilization_cap;
    auto a = run(p);
    auto b = run(scaled);
    EXPECT_EQ(a.series.connected_ratio, b.series.connected_ratio);
    EXPECT_EQ(a.series.nonblocked_ratio, b.series.nonblocked_ratio);
}

TEST(SimRun, CapacityIsRespected) {
    auto p = small(2);
    p.shared_intelligence = false;
    auto s = make_initial_state(p);
    for (int t = 0; t < p.horizon; ++t) {
        step(s, p);
        for (auto idx : s.live) EXPECT_LE(s.proxies[idx].connected, p.proxy_capacity);
    }
}

TEST(SimCensor, AggressiveBlocksExactlyAfterDelay) {
    for (int delay : {0, 1, 2, 5}) {
        auto p = small(5);
        p.censor_block_delay = delay;
        auto s = make_initial_state(p);
        while (s.tick < p.horizon) step(s, p);
        int blocked = 0;
        for (const auto& x : s.proxies) {
            if (!x.blocked_at) continue;
            ++blocked;
            ASSERT_TRUE(x.discovered_at);
            EXPECT_EQ(*x.blocked_at - *x.discovered_at, std::max(delay, 1));
        }
        EXPECT_GT(blocked, 0);
    }
}

TEST(SimCensor, TombstonesAreNeverReissued) {
    for (auto ids : {IdentifierKind::url, IdentifierKind::ip}) {
        auto p = small(6);
        p.identifiers = ids;
        p.refresh_period = 3;
        auto s = make_initial_state(p);
        std::set<std::string> seen;
        for (const auto& x : s.proxies) seen.insert(x.url);
        while (s.tick < p.horizon) {
            auto before = s.proxies.size();
            step(s, p);
            for (std::size_t i = before; i < s.proxies.size(); ++i) {
                EXPECT_FALSE(s.tombstones.count(s.proxies[i].url));
                EXPECT_TRUE(seen.insert(s.proxies[i].url).second);
            }
        }
        EXPECT_FALSE(s.tombstones.empty());
    }
}

TEST(SimCensor, WithoutRefreshBlockedFractionNeverShrinks) {
    auto p = small(8);
    p.refresh_period = 0;
    p.horizon = 80;
    auto r = run(p);
    for (std::size_t t = 1; t < r.series.nonblocked_ratio.size(); ++t)
        EXPECT_LE(r.series.nonblocked_ratio[t], r.series.nonblocked_ratio[t - 1]);
    EXPECT_LT(r.series.nonblocked_ratio.back(), 1.0);
}

TEST(SimCensor, ZeroOmegaOptimalWaitMatchesExhaustiveSearch) {
    // With omega = 0 the censor only values stranded clients. Exhaustively
    // score every wait by running one refresh window with that wait fixed,
    // and compare with the lookahead choice made at tick 0.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto p = small(seed);
        p.omega = 0;
        p.strategy = CensorStrategy::optimal;
        p.candidate_waits = {0, 1, 2, 4, 8};
        int best_wait = -1;
        double best = -1;
        for (int w : p.candidate_waits) {
            auto fixed = p;
            fixed.candidate_waits = {w};
            fixed.horizon = p.refresh_period;
            double stranded = 1.0 - run(fixed).mean_connected;
            if (stranded > best + 1e-12) {
                best = stranded;
                best_wait = w;
            }
        }
        EXPECT_EQ(choose_censor_wait(make_initial_state(p), p), best_wait) << "seed " << seed;
    }
}

TEST(SimPresets, KnownNamesOnly) {
    for (auto n : {"fig7", "fig10", "fig11", "fig11-aggressive", "fig11-optimal"}) EXPECT_TRUE(preset(n)) << n;
    EXPECT_FALSE(preset("fig99"));
    EXPECT_EQ(preset("fig11-optimal")->strategy, CensorStrategy::optimal);
    EXPECT_EQ(preset("fig10")->strategy, CensorStrategy::aggressive);
}

TEST(SimPresets, RunSeedsAveragesSeries) {
    auto p = small(1);
    auto avg = run_seeds(p, 3);
    double mean = 0;
    std::vector<double> series(p.horizon, 0.0);
    for (std::uint64_t s = 1; s <= 3; ++s) {
        auto q = p;
        q.seed = s;
        auto r = run(q);
        mean += r.mean_connected / 3;
        for (int t = 0; t < p.horizon; ++t) series[t] += r.series.connected_ratio[t] / 3;
    }
    EXPECT_NEAR(avg.mean_connected, mean, 1e-12);
    for (int t = 0; t < p.horizon; ++t) EXPECT_NEAR(avg.series.connected_ratio[t], series[t], 1e-12);
    EXPECT_THROW(run_seeds(p, 0), std::invalid_argument);
}

TEST(SimPresets, SeedAverageStaysInUnitInterval) {
    auto avg = run_seeds(*preset("fig11-optimal"), 20);
    EXPECT_LE(avg.mean_connected, 1.0);
    EXPECT_LE(avg.mean_nonblocked, 1.0);
    for (double v : avg.series.connected_ratio) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}
