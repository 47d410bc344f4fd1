#pragma once

#include <vector>

#include "pullsim/config.hpp"

namespace pullsim {

// The mean-field fixed point: fraction nu_j of all servers in pool j hold
// exactly one customer, the rest are idle. The per-pool fill pressure
// c = nu_j mu_j / (beta_j - nu_j) is common across pools.
struct EquilibriumPoint {
    std::vector<double> nu;
    double idle_fraction = 0.0;
    double pressure = 0.0;
};

// Solves  lambda = sum_j nu_j mu_j  with equal pressure across pools, by
// bisection on c with nu_j(c) = c beta_j / (mu_j + c). The load function
// is strictly increasing in c from 0 to sum_j beta_j mu_j, so the root is
// unique. Residual tolerance 1e-12 on lambda.
EquilibriumPoint solve_equilibrium(const SystemConfig& config);

}  // namespace pullsim
