#include <cmath>
#include <random>

#include <doctest.h>

#include "pullsim/coupling.hpp"
#include "pullsim/engine.hpp"
#include "pullsim/metrics.hpp"
#include "pullsim/stats.hpp"
#include "test_util.hpp"

using namespace pullsim;
using namespace pullsim::testing;

TEST_CASE("identical initial states stay identical under the coupling") {
    SystemConfig cfg = two_pool_example();
    ScaledSystem scaled = scale(cfg, 20);
    std::vector<int> q0(20, 0);
    q0[3] = 2;
    q0[11] = 1;
    auto rep = run_coupled(scaled, cfg, q0, q0, 200.0, 101);
    CHECK(rep.violations == 0);
    CHECK(rep.final_small == rep.final_large);
}

TEST_CASE("dominated initial pairs never violate dominance") {
    SystemConfig cfg = two_pool_example();
    ScaledSystem scaled = scale(cfg, 30);
    std::mt19937_64 init(3);
    for (int seed = 0; seed < 20; ++seed) {
        std::vector<int> small(30, 0), large(30);
        for (auto& q : large) q = static_cast<int>(init() % 6);
        auto rep = run_coupled(scaled, cfg, small, large, 200.0, 1000 + seed);
        CHECK(rep.violations == 0);
        for (int i = 0; i < 30; ++i) CHECK(rep.final_small[i] <= rep.final_large[i]);
    }
}

TEST_CASE("non-dominated initial state is rejected") {
    SystemConfig cfg = two_pool_example();
    ScaledSystem scaled = scale(cfg, 10);
    std::vector<int> small(10, 0), large(10, 1);
    small[4] = 2;
    CHECK_THROWS_AS(run_coupled(scaled, cfg, small, large, 10.0, 1), InitialStateNotDominated);
}

TEST_CASE("coupling is restricted to the basic model") {
    SystemConfig cfg = single_pool(0.5, 1.0);
    cfg.pools[0].dist = ServiceDistribution::pareto(1.0, 2.0);
    cfg.pools[0].mu = 1.0;
    ScaledSystem scaled{1, {1}, 0.5};
    std::vector<int> q0(1, 0);
    CHECK_THROWS(run_coupled(scaled, cfg, q0, q0, 1.0, 1));
}

TEST_CASE("coupled small-system marginal matches an uncoupled run in law") {
    // Waiting fraction of the idle-start system, whole horizon, many seeds:
    // the coupling must not distort the marginal.
    SystemConfig cfg = two_pool_example();
    const int n = 40;
    ScaledSystem scaled = scale(cfg, n);
    std::vector<int> idle(n, 0), shifted(n, 1);

    const int seeds = 60;
    std::vector<double> coupled_frac, plain_frac;
    for (int s = 0; s < seeds; ++s) {
        auto rep = run_coupled(scaled, cfg, idle, shifted, 150.0, 5000 + s);
        coupled_frac.push_back(static_cast<double>(rep.small_waited) / rep.small_arrivals);

        ReplicationOptions opt;
        opt.horizon = 150.0;
        opt.warmup_fraction = 0.0;
        opt.n_batches = 5;
        auto res = run_replication(scaled, cfg, parse_policy("pull"), opt, 9000 + s);
        plain_frac.push_back(static_cast<double>(res.counters.waited) / res.counters.arrivals);
    }
    double diff = std::abs(mean_of(coupled_frac) - mean_of(plain_frac));
    double band = ci_halfwidth_95(coupled_frac) + ci_halfwidth_95(plain_frac);
    CHECK(diff <= band + 0.01);
}

TEST_CASE("idle-start occupancy is stochastically nondecreasing in time") {
    // Testable form of the startup monotonicity: the across-seed mean of
    // sum_j x^n_{1,j}(t) does not decrease beyond CI noise.
    SystemConfig cfg = two_pool_example();
    const int n = 100;
    ScaledSystem scaled = scale(cfg, n);
    ReplicationOptions opt;
    opt.horizon = 10.0;
    opt.warmup_fraction = 0.0;
    opt.n_batches = 5;
    opt.grid_dt = 1.0;
    opt.grid_kmax = 2;

    const int seeds = 40;
    std::vector<std::vector<double>> occupancy;  // [seed][grid index]
    for (int s = 0; s < seeds; ++s) {
        auto res = run_replication(scaled, cfg, parse_policy("pull"), opt, 300 + s);
        std::vector<double> level;
        for (const auto& g : res.grid) level.push_back(g.x[1][0] + g.x[1][1]);
        occupancy.push_back(level);
    }
    const std::size_t points = occupancy.front().size();
    std::vector<double> prev;
    for (std::size_t t = 0; t < points; ++t) {
        std::vector<double> vals;
        for (auto& row : occupancy) vals.push_back(row[t]);
        if (!prev.empty()) {
            double band = ci_halfwidth_95(vals) + ci_halfwidth_95(prev);
            CHECK(mean_of(vals) >= mean_of(prev) - band - 1e-9);
        }
        prev = vals;
    }
}
