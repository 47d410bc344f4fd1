#include "pullsim/equilibrium.hpp"

#include <cmath>

namespace pullsim {

namespace {

double offered_load(const SystemConfig& config, double c) {
    double s = 0.0;
    for (auto& p : config.pools) s += c * p.beta / (p.mu + c) * p.mu;
    return s;
}

}  // namespace

EquilibriumPoint solve_equilibrium(const SystemConfig& config) {
    if (!check_subcritical(config)) throw NotSubcritical();

    // Bracket: load(c) -> sum beta_j mu_j > lambda as c -> inf, so doubling
    // from 1 terminates.
    double lo = 0.0, hi = 1.0;
    while (offered_load(config, hi) <= config.lambda) hi *= 2.0;

    double c = hi;
    for (int it = 0; it < 400; ++it) {
        c = 0.5 * (lo + hi);
        double load = offered_load(config, c);
        if (std::abs(load - config.lambda) <= 1e-12) break;
        if (load < config.lambda)
            lo = c;
        else
            hi = c;
    }

    EquilibriumPoint eq;
    eq.pressure = c;
    eq.idle_fraction = 0.0;
    for (auto& p : config.pools) {
        double nu = c * p.beta / (p.mu + c);
        eq.nu.push_back(nu);
        eq.idle_fraction += p.beta - nu;
    }
    return eq;
}

}  // namespace pullsim
