#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pullsim/distributions.hpp"

namespace pullsim {

constexpr int kUnboundedBuffer = std::numeric_limits<int>::max();

struct ConfigError : std::runtime_error {
    std::vector<std::string> violations;
    explicit ConfigError(std::vector<std::string> v)
        : std::runtime_error(join(v)), violations(std::move(v)) {}
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid config:";
        for (auto& e : v) s += "\n  " + e;
        return s;
    }
};

struct NotSubcritical : std::runtime_error {
    NotSubcritical() : std::runtime_error("NotSubcritical: lambda >= sum_j beta_j mu_j") {}
};

struct NTooSmall : std::runtime_error {
    explicit NTooSmall(int n) : std::runtime_error("NTooSmall: n=" + std::to_string(n) + " leaves a pool empty") {}
};

// One logical pool of identical servers: fraction beta of all servers,
// maximal service rate mu, buffer B, service slots C, per-slot service
// distribution with mean C/mu. A rate_profile gives queue-dependent
// exponential rates f(q) for q = 0..C (f(q) = mu beyond C).
struct PoolSpec {
    double beta = 1.0;
    double mu = 1.0;
    int buffer = kUnboundedBuffer;
    int slots = 1;
    ServiceDistribution dist = ServiceDistribution::exponential(1.0);
    std::optional<std::vector<double>> rate_profile;

    bool unbounded() const { return buffer == kUnboundedBuffer; }

    // Total service rate at queue length q (exponential pools only).
    double markov_rate(int q) const {
        if (q <= 0) return 0.0;
        if (rate_profile) {
            const auto& f = *rate_profile;
            return q < static_cast<int>(f.size()) ? f[q] : mu;
        }
        // Independent sub-servers: each of the min(q, C) busy slots works
        // at rate mu/C.
        int busy = q < slots ? q : slots;
        return mu * static_cast<double>(busy) / static_cast<double>(slots);
    }
};

struct SystemConfig {
    double lambda = 0.5;
    std::vector<PoolSpec> pools;

    double total_capacity() const {
        double c = 0.0;
        for (auto& p : pools) c += p.beta * p.mu;
        return c;
    }
};

struct ScaledSystem {
    int n = 0;
    std::vector<int> pool_sizes;
    double arrival_rate = 0.0;
};

// Returns the list of violated invariants; empty means valid.
std::vector<std::string> validate(const SystemConfig& config);

// Throwing convenience wrapper around validate().
void validate_or_throw(const SystemConfig& config);

// True iff lambda < sum_j beta_j mu_j strictly.
bool check_subcritical(const SystemConfig& config);

// Largest-remainder split of n servers over pools; arrival rate lambda*n.
ScaledSystem scale(const SystemConfig& config, int n);

// JSON round trip; schema documented in README.
SystemConfig config_from_json(const std::string& text);
std::string config_to_json(const SystemConfig& config);
SystemConfig load_config(const std::string& path);

}  // namespace pullsim
