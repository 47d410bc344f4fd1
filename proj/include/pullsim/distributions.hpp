#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pullsim/rng.hpp"

namespace pullsim {

enum class DistKind { Exponential, Pareto, Hyperexponential };

// Service time distribution. All supported families have decreasing hazard
// rate; each reports its analytic mean and its hazard-rate floor.
struct ServiceDistribution {
    DistKind kind = DistKind::Exponential;
    double rate = 1.0;                                   // exponential
    double sigma = 1.0;                                  // pareto scale, F^c(z) = (1+sigma z)^-alpha
    double alpha = 2.0;                                  // pareto shape, > 1 for finite mean
    std::vector<std::pair<double, double>> branches;     // hyperexp (prob, rate)

    static ServiceDistribution exponential(double rate) {
        ServiceDistribution d;
        d.kind = DistKind::Exponential;
        d.rate = rate;
        return d;
    }
    static ServiceDistribution pareto(double sigma, double alpha) {
        ServiceDistribution d;
        d.kind = DistKind::Pareto;
        d.sigma = sigma;
        d.alpha = alpha;
        return d;
    }
    static ServiceDistribution hyperexponential(std::vector<std::pair<double, double>> branches) {
        ServiceDistribution d;
        d.kind = DistKind::Hyperexponential;
        d.branches = std::move(branches);
        return d;
    }

    double mean() const {
        switch (kind) {
            case DistKind::Exponential:
                return 1.0 / rate;
            case DistKind::Pareto:
                return 1.0 / (sigma * (alpha - 1.0));
            case DistKind::Hyperexponential: {
                double m = 0.0;
                for (auto& [p, r] : branches) m += p / r;
                return m;
            }
        }
        return 0.0;
    }

    // Infimum of the hazard rate. For a hyperexponential the hazard decays
    // to the smallest branch rate; for Pareto it decays to zero.
    double hazard_floor() const {
        switch (kind) {
            case DistKind::Exponential:
                return rate;
            case DistKind::Pareto:
                return 0.0;
            case DistKind::Hyperexponential: {
                double g = branches.empty() ? 0.0 : branches.front().second;
                for (auto& [p, r] : branches)
                    if (r < g) g = r;
                return g;
            }
        }
        return 0.0;
    }

    // Validation messages; empty means the distribution is well formed.
    std::vector<std::string> check() const {
        std::vector<std::string> errs;
        switch (kind) {
            case DistKind::Exponential:
                if (!(rate > 0.0)) errs.push_back("NonPositiveParameter: exponential rate must be > 0");
                break;
            case DistKind::Pareto:
                if (!(sigma > 0.0)) errs.push_back("NonPositiveParameter: pareto sigma must be > 0");
                if (!(alpha > 1.0)) errs.push_back("NonPositiveParameter: pareto alpha must be > 1 for finite mean");
                break;
            case DistKind::Hyperexponential: {
                if (branches.empty()) {
                    errs.push_back("NonPositiveParameter: hyperexponential needs at least one branch");
                    break;
                }
                double psum = 0.0;
                for (auto& [p, r] : branches) {
                    psum += p;
                    if (!(p > 0.0)) errs.push_back("NonPositiveParameter: hyperexponential branch probability must be > 0");
                    if (!(r > 0.0)) errs.push_back("NonPositiveParameter: hyperexponential branch rate must be > 0");
                }
                if (std::abs(psum - 1.0) > 1e-12)
                    errs.push_back("NonPositiveParameter: hyperexponential probabilities must sum to 1");
                break;
            }
        }
        return errs;
    }

    double sample(std::mt19937_64& rng) const {
        switch (kind) {
            case DistKind::Exponential:
                return exp_sample(rate, rng);
            case DistKind::Pareto: {
                // Inverse survival: z = (u^{-1/alpha} - 1) / sigma.
                double u = uniform_open(rng);
                return (std::pow(u, -1.0 / alpha) - 1.0) / sigma;
            }
            case DistKind::Hyperexponential: {
                double u = uniform_open(rng);
                double acc = 0.0;
                for (auto& [p, r] : branches) {
                    acc += p;
                    if (u <= acc) return exp_sample(r, rng);
                }
                return exp_sample(branches.back().second, rng);
            }
        }
        throw std::logic_error("unreachable distribution kind");
    }
};

}  // namespace pullsim
