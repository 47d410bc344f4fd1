#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pullsim/config.hpp"
#include "pullsim/equilibrium.hpp"

namespace pullsim {

struct NoIdleMass : std::runtime_error {
    NoIdleMass() : std::runtime_error("NoIdleMass: sum_j y_{0,j} <= 0, fluid dynamics undefined") {}
};

struct ShapeMismatch : std::runtime_error {
    ShapeMismatch() : std::runtime_error("ShapeMismatch: mean-field states have different shapes") {}
};

// Mean-field state x_{k,j}: fraction of all servers that are in pool j
// with queue length >= k, truncated at depth k_max. Row 0 is pinned to the
// pool fractions beta_j; columns are nonincreasing in k.
struct MeanFieldState {
    int k_max = 64;
    int pools = 1;
    std::vector<double> data;  // (k_max+1) x pools, row-major in k

    MeanFieldState() = default;
    MeanFieldState(int k_max_, int pools_)
        : k_max(k_max_), pools(pools_), data(static_cast<std::size_t>(k_max_ + 1) * pools_, 0.0) {}

    double& at(int k, int j) { return data[static_cast<std::size_t>(k) * pools + j]; }
    double at(int k, int j) const { return data[static_cast<std::size_t>(k) * pools + j]; }

    // y_{k,j} = x_{k,j} - x_{k+1,j}; x beyond k_max treated as 0.
    double level_mass(int k, int j) const {
        double next = k < k_max ? at(k + 1, j) : 0.0;
        return at(k, j) - next;
    }

    double idle_mass() const {
        double s = 0.0;
        for (int j = 0; j < pools; ++j) s += level_mass(0, j);
        return s;
    }

    bool same_shape(const MeanFieldState& o) const { return k_max == o.k_max && pools == o.pools; }

    // Invariant check: x_{0,j} = beta_j and nonincreasing columns, up to tol.
    std::vector<std::string> check(const SystemConfig& config, double tol = 1e-9) const;
};

// Idle state: x_{0,j} = beta_j, zero above.
MeanFieldState idle_state(const SystemConfig& config, int k_max);

// Equilibrium x*: x_{1,j} = nu_j, zeros for k >= 2.
MeanFieldState equilibrium_state(const SystemConfig& config, int k_max);

// Fluid ODE right-hand side; defined only where idle mass is positive.
MeanFieldState fluid_rhs(const MeanFieldState& state, const SystemConfig& config);

// Metric on the mean-field space: sum_j sum_k 2^-k |dx| / (1 + |dx|).
double rho(const MeanFieldState& a, const MeanFieldState& b);

struct FluidTrajectory {
    std::vector<double> times;
    std::vector<MeanFieldState> states;
    bool stopped_early = false;  // idle mass hit the floor before t_max
    double stop_time = 0.0;
};

// Classical fixed-step RK4. Integration stops early (with the flag set) if
// idle mass falls to <= idle_floor; the ODE is only defined while
// idle mass is positive. States are recorded every sample_dt (and at the
// end); sample_dt <= 0 records only the final state.
FluidTrajectory integrate_fluid(const MeanFieldState& x0, const SystemConfig& config, double t_max,
                                double dt, double sample_dt = 0.0, double idle_floor = 1e-9);

// CSV rows t,pool,k,x for entries with x > 0 or k <= 2.
std::string trajectory_csv(const FluidTrajectory& traj);

}  // namespace pullsim
