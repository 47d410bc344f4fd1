#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "pullsim/config.hpp"
#include "pullsim/equilibrium.hpp"
#include "test_util.hpp"

using namespace pullsim;
using namespace pullsim::testing;

namespace {

// Independent oracle for the two-pool equilibrium: bisect on nu_1 instead
// of the pressure c. Given nu_1, the equal-pressure condition fixes nu_2;
// drive the load residual lambda - nu_1 mu_1 - nu_2 mu_2 to zero.
std::vector<double> two_pool_oracle(const SystemConfig& cfg) {
    const auto& p1 = cfg.pools[0];
    const auto& p2 = cfg.pools[1];
    auto nu2_of = [&](double nu1) {
        double c = nu1 * p1.mu / (p1.beta - nu1);
        return c * p2.beta / (p2.mu + c);
    };
    double lo = 0.0, hi = p1.beta;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double load = mid * p1.mu + nu2_of(mid) * p2.mu;
        if (load < cfg.lambda)
            lo = mid;
        else
            hi = mid;
    }
    double nu1 = 0.5 * (lo + hi);
    return {nu1, nu2_of(nu1)};
}

}  // namespace

TEST_CASE("distribution means match the analytic formulas") {
    CHECK(ServiceDistribution::exponential(2.0).mean() == doctest::Approx(0.5));
    CHECK(ServiceDistribution::pareto(1.0, 2.0).mean() == doctest::Approx(1.0));
    CHECK(ServiceDistribution::hyperexponential({{0.5, 1.0}, {0.5, 2.0}}).mean() == doctest::Approx(0.75));
}

TEST_CASE("hyperexponential hazard floor is the smallest branch rate") {
    auto d = ServiceDistribution::hyperexponential({{0.3, 0.5}, {0.7, 4.0}});
    CHECK(d.hazard_floor() == doctest::Approx(0.5));
    CHECK(ServiceDistribution::pareto(1.0, 2.0).hazard_floor() == 0.0);
}

TEST_CASE("validate accepts the reference two-pool system and names violations") {
    CHECK(validate(two_pool_example()).empty());

    SystemConfig bad = two_pool_example();
    bad.pools[0].beta = 0.6;
    auto errs = validate(bad);
    REQUIRE(!errs.empty());
    CHECK(errs.front().find("BetaSumViolation") != std::string::npos);

    SystemConfig slots = two_pool_example();
    slots.pools[0].slots = 5;
    slots.pools[0].buffer = 3;
    slots.pools[0].dist = ServiceDistribution::exponential(slots.pools[0].mu / 5.0);
    errs = validate(slots);
    bool found = std::any_of(errs.begin(), errs.end(),
                             [](const std::string& e) { return e.find("SlotsExceedBuffer") != std::string::npos; });
    CHECK(found);

    SystemConfig neg = two_pool_example();
    neg.lambda = -1.0;
    errs = validate(neg);
    CHECK(errs.front().find("NonPositiveParameter") != std::string::npos);
}

TEST_CASE("rate profile shape is checked") {
    SystemConfig cfg = single_pool(0.5, 1.0);
    cfg.pools[0].slots = 2;
    cfg.pools[0].dist = ServiceDistribution::exponential(0.5);
    cfg.pools[0].rate_profile = std::vector<double>{0.0, 0.6, 1.0};
    CHECK(validate(cfg).empty());

    cfg.pools[0].rate_profile = std::vector<double>{0.1, 0.6, 1.0};  // f(0) != 0
    CHECK(!validate(cfg).empty());

    cfg.pools[0].rate_profile = std::vector<double>{0.0, 1.0, 0.6};  // not nondecreasing
    CHECK(!validate(cfg).empty());

    cfg.pools[0].rate_profile = std::vector<double>{0.0, 0.6, 1.0};
    cfg.pools[0].dist = ServiceDistribution::pareto(0.5, 2.0);  // mean 1 = C/mu... but not exponential
    auto errs = validate(cfg);
    bool found = std::any_of(errs.begin(), errs.end(),
                             [](const std::string& e) { return e.find("RateProfileShape") != std::string::npos; });
    CHECK(found);
}

TEST_CASE("check_subcritical is strict") {
    CHECK(check_subcritical(two_pool_example()));
    CHECK(!check_subcritical(single_pool(1.0, 1.0)));
    SystemConfig over = two_pool_example();
    over.lambda = 2.0;
    CHECK(!check_subcritical(over));
}

TEST_CASE("scale splits servers by largest remainder") {
    SystemConfig cfg = two_pool_example();
    ScaledSystem s = scale(cfg, 10);
    CHECK(s.pool_sizes == std::vector<int>{5, 5});
    CHECK(s.arrival_rate == doctest::Approx(10.0));

    SystemConfig thirds = two_pool_example();
    thirds.pools[0].beta = 1.0 / 3.0;
    thirds.pools[1].beta = 2.0 / 3.0;
    s = scale(thirds, 10);
    CHECK(s.pool_sizes == std::vector<int>{3, 7});

    CHECK_THROWS_AS(scale(cfg, 1), NTooSmall);
}

TEST_CASE("scale properties: exact total, bounded deviation") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        SystemConfig cfg = random_subcritical(rng);
        int n = 1 + static_cast<int>(rng() % 500);
        if (n < static_cast<int>(cfg.pools.size())) continue;
        ScaledSystem s;
        try {
            s = scale(cfg, n);
        } catch (const NTooSmall&) {
            continue;
        }
        CHECK(std::accumulate(s.pool_sizes.begin(), s.pool_sizes.end(), 0) == n);
        for (std::size_t j = 0; j < cfg.pools.size(); ++j)
            CHECK(std::abs(s.pool_sizes[j] - cfg.pools[j].beta * n) < static_cast<double>(cfg.pools.size()));
    }
}

TEST_CASE("solve_equilibrium on simple systems") {
    auto eq = solve_equilibrium(single_pool(0.5, 1.0));
    CHECK(eq.nu[0] == doctest::Approx(0.5).epsilon(1e-10));

    SystemConfig sym = two_pool_example();
    sym.pools[0].mu = sym.pools[1].mu = 1.0;
    sym.pools[0].dist = sym.pools[1].dist = ServiceDistribution::exponential(1.0);
    sym.lambda = 0.8;
    eq = solve_equilibrium(sym);
    CHECK(eq.nu[0] == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(eq.nu[1] == doctest::Approx(0.4).epsilon(1e-10));

    CHECK_THROWS_AS(solve_equilibrium(single_pool(1.0, 1.0)), NotSubcritical);
}

TEST_CASE("solve_equilibrium matches the independent two-pool oracle") {
    SystemConfig cfg = two_pool_example();
    auto eq = solve_equilibrium(cfg);
    auto oracle = two_pool_oracle(cfg);
    CHECK(eq.nu[0] == doctest::Approx(oracle[0]).epsilon(1e-10));
    CHECK(eq.nu[1] == doctest::Approx(oracle[1]).epsilon(1e-10));
    // Frozen from the oracle.
    CHECK(eq.nu[0] == doctest::Approx(0.41928).epsilon(1e-4));
    CHECK(eq.nu[1] == doctest::Approx(0.48436).epsilon(1e-4));
}

TEST_CASE("equilibrium residuals and bounds on random subcritical configs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        SystemConfig cfg = random_subcritical(rng);
        auto eq = solve_equilibrium(cfg);
        double load = 0.0;
        for (std::size_t j = 0; j < cfg.pools.size(); ++j) {
            CHECK(eq.nu[j] > 0.0);
            CHECK(eq.nu[j] < cfg.pools[j].beta);
            load += eq.nu[j] * cfg.pools[j].mu;
            double pressure = eq.nu[j] * cfg.pools[j].mu / (cfg.pools[j].beta - eq.nu[j]);
            CHECK(std::abs(pressure - eq.pressure) <= 1e-10 * std::max(1.0, eq.pressure));
        }
        CHECK(std::abs(load - cfg.lambda) <= 1e-10);
    }
}

TEST_CASE("equilibrium is label-equivariant and monotone in lambda") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        SystemConfig cfg = random_subcritical(rng);
        if (cfg.pools.size() < 2) continue;
        auto eq = solve_equilibrium(cfg);

        SystemConfig perm = cfg;
        std::reverse(perm.pools.begin(), perm.pools.end());
        auto eq_perm = solve_equilibrium(perm);
        for (std::size_t j = 0; j < cfg.pools.size(); ++j)
            CHECK(eq.nu[j] == doctest::Approx(eq_perm.nu[cfg.pools.size() - 1 - j]).epsilon(1e-10));

        SystemConfig hotter = cfg;
        hotter.lambda = 0.5 * (cfg.lambda + cfg.total_capacity());
        auto eq_hot = solve_equilibrium(hotter);
        for (std::size_t j = 0; j < cfg.pools.size(); ++j) CHECK(eq_hot.nu[j] > eq.nu[j]);
    }
}

TEST_CASE("config JSON round trip, including the unbounded sentinel") {
    SystemConfig cfg = two_pool_example();
    cfg.pools[0].buffer = 3;
    cfg.pools[1].slots = 2;
    cfg.pools[1].dist = ServiceDistribution::exponential(cfg.pools[1].mu / 2.0);
    SystemConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.lambda == cfg.lambda);
    REQUIRE(back.pools.size() == cfg.pools.size());
    CHECK(back.pools[0].buffer == 3);
    CHECK(back.pools[1].unbounded());
    CHECK(back.pools[1].slots == 2);
    CHECK(back.pools[1].dist.mean() == doctest::Approx(cfg.pools[1].dist.mean()));

    SystemConfig pareto = single_pool(0.5, 1.0);
    pareto.pools[0].dist = ServiceDistribution::pareto(1.0, 2.0);
    SystemConfig pb = config_from_json(config_to_json(pareto));
    CHECK(pb.pools[0].dist.kind == DistKind::Pareto);
    CHECK(pb.pools[0].dist.mean() == doctest::Approx(1.0));
}
