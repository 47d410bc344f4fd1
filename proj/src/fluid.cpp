#include "pullsim/fluid.hpp"

#include <cmath>
#include <sstream>

namespace pullsim {

std::vector<std::string> MeanFieldState::check(const SystemConfig& config, double tol) const {
    std::vector<std::string> errs;
    if (pools != static_cast<int>(config.pools.size())) {
        errs.push_back("pool count mismatch");
        return errs;
    }
    for (int j = 0; j < pools; ++j) {
        if (std::abs(at(0, j) - config.pools[j].beta) > tol)
            errs.push_back("x_{0," + std::to_string(j) + "} != beta_j");
        for (int k = 0; k < k_max; ++k)
            if (at(k + 1, j) > at(k, j) + tol)
                errs.push_back("x_{" + std::to_string(k + 1) + "," + std::to_string(j) + "} exceeds level below");
        if (at(k_max, j) < -tol) errs.push_back("negative mass in pool " + std::to_string(j));
    }
    return errs;
}

MeanFieldState idle_state(const SystemConfig& config, int k_max) {
    MeanFieldState x(k_max, static_cast<int>(config.pools.size()));
    for (int j = 0; j < x.pools; ++j) x.at(0, j) = config.pools[j].beta;
    return x;
}

MeanFieldState equilibrium_state(const SystemConfig& config, int k_max) {
    EquilibriumPoint eq = solve_equilibrium(config);
    MeanFieldState x = idle_state(config, k_max);
    for (int j = 0; j < x.pools; ++j) x.at(1, j) = eq.nu[j];
    return x;
}

MeanFieldState fluid_rhs(const MeanFieldState& state, const SystemConfig& config) {
    double y0 = state.idle_mass();
    if (!(y0 > 0.0)) throw NoIdleMass();

    const double lambda = config.lambda;
    MeanFieldState d(state.k_max, state.pools);
    for (int j = 0; j < state.pools; ++j) {
        const double mu = config.pools[j].mu;
        d.at(1, j) = lambda * state.level_mass(0, j) / y0 - mu * state.level_mass(1, j);
        for (int k = 2; k <= state.k_max; ++k) d.at(k, j) = -mu * state.level_mass(k, j);
    }
    return d;
}

double rho(const MeanFieldState& a, const MeanFieldState& b) {
    if (!a.same_shape(b)) throw ShapeMismatch();
    double s = 0.0;
    for (int k = 0; k <= a.k_max; ++k) {
        double w = std::pow(2.0, -k);
        for (int j = 0; j < a.pools; ++j) {
            double d = std::abs(a.at(k, j) - b.at(k, j));
            s += w * d / (1.0 + d);
        }
    }
    return s;
}

namespace {

void axpy(MeanFieldState& y, double a, const MeanFieldState& x) {
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

// Absorb floating-point drift: clamp tiny negatives and tiny monotonicity
// violations. Anything beyond 1e-12 is a real invariant violation and is
// left in place for check() to flag.
void tidy(MeanFieldState& x) {
    for (int j = 0; j < x.pools; ++j) {
        for (int k = 1; k <= x.k_max; ++k) {
            double& v = x.at(k, j);
            if (v < 0.0 && v > -1e-12) v = 0.0;
            double below = x.at(k - 1, j);
            if (v > below && v < below + 1e-12) v = below;
        }
    }
}

}  // namespace

FluidTrajectory integrate_fluid(const MeanFieldState& x0, const SystemConfig& config, double t_max,
                                double dt, double sample_dt, double idle_floor) {
    if (!(x0.idle_mass() > 0.0)) throw NoIdleMass();

    FluidTrajectory traj;
    MeanFieldState x = x0;
    double t = 0.0;
    double next_sample = 0.0;

    auto record = [&](double time, const MeanFieldState& s) {
        traj.times.push_back(time);
        traj.states.push_back(s);
    };

    if (sample_dt > 0.0) {
        record(0.0, x);
        next_sample = sample_dt;
    }

    while (t < t_max - 1e-12) {
        double h = std::min(dt, t_max - t);
        // If an intermediate stage would exhaust the idle mass, halve the
        // step and creep up to the boundary instead of overshooting it.
        bool stepped = false;
        while (!stepped) {
            MeanFieldState k1 = fluid_rhs(x, config);
            MeanFieldState s2 = x;
            axpy(s2, 0.5 * h, k1);
            MeanFieldState s3, s4;
            bool breach = !(s2.idle_mass() > idle_floor);
            if (!breach) {
                MeanFieldState k2 = fluid_rhs(s2, config);
                s3 = x;
                axpy(s3, 0.5 * h, k2);
                breach = !(s3.idle_mass() > idle_floor);
                if (!breach) {
                    MeanFieldState k3 = fluid_rhs(s3, config);
                    s4 = x;
                    axpy(s4, h, k3);
                    breach = !(s4.idle_mass() > idle_floor);
                    if (!breach) {
                        MeanFieldState k4 = fluid_rhs(s4, config);
                        axpy(x, h / 6.0, k1);
                        axpy(x, h / 3.0, k2);
                        axpy(x, h / 3.0, k3);
                        axpy(x, h / 6.0, k4);
                        tidy(x);
                        t += h;
                        stepped = true;
                    }
                }
            }
            if (breach) {
                h *= 0.5;
                if (h < dt * 1e-9) {
                    traj.stopped_early = true;
                    break;
                }
            }
        }
        if (traj.stopped_early) break;

        if (x.idle_mass() <= idle_floor) {
            traj.stopped_early = true;
            break;
        }
        while (sample_dt > 0.0 && next_sample <= t + 1e-12 && next_sample <= t_max) {
            record(next_sample, x);  // grid aligned with the step size
            next_sample += sample_dt;
        }
    }

    traj.stop_time = t;
    if (traj.times.empty() || traj.times.back() < t) record(t, x);
    return traj;
}

std::string trajectory_csv(const FluidTrajectory& traj) {
    std::ostringstream out;
    out << "t,pool,k,x\n";
    out.precision(12);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const auto& s = traj.states[i];
        for (int j = 0; j < s.pools; ++j)
            for (int k = 0; k <= s.k_max; ++k)
                if (k <= 2 || s.at(k, j) > 0.0)
                    out << traj.times[i] << ',' << j << ',' << k << ',' << s.at(k, j) << '\n';
    }
    return out.str();
}

}  // namespace pullsim
