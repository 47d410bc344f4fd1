#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pullsim/config.hpp"

namespace pullsim {

struct InitialStateNotDominated : std::runtime_error {
    InitialStateNotDominated()
        : std::runtime_error("InitialStateNotDominated: q0_small must be <= q0_large componentwise") {}
};

struct DominanceViolation : std::runtime_error {
    double time;
    int server;
    DominanceViolation(double t, int s)
        : std::runtime_error("DominanceViolation at t=" + std::to_string(t) + " server " + std::to_string(s)),
          time(t), server(s) {}
};

struct CouplingReport {
    long long events = 0;
    long long violations = 0;  // first violation throws; counted when deferred
    double first_violation_time = -1.0;
    // Small-system marginals, for the law-preservation check.
    long long small_arrivals = 0;
    long long small_waited = 0;
    long long small_blocked = 0;
    std::vector<int> final_small;
    std::vector<int> final_large;
};

// Two copies of the basic system (exponential service, C_j = 1) driven on
// one probability space: common Poisson arrivals, per-server potential
// departure clocks at rate mu_j applied wherever the server is nonempty,
// and arrival assignment following the monotone-coupling construction.
// Componentwise dominance q_small <= q_large is asserted after every
// event; a violation would be an implementation bug.
CouplingReport run_coupled(const ScaledSystem& scaled, const SystemConfig& config,
                           const std::vector<int>& q0_small, const std::vector<int>& q0_large,
                           double horizon, std::uint64_t seed, bool throw_on_violation = true);

}  // namespace pullsim
