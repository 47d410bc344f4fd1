#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pullsim {

// SplitMix64: full-period mixing, used to expand one root seed into
// decorrelated substream seeds and per-replication seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic, injective seed for replication `index` under `root_seed`.
inline std::uint64_t seed_plan(std::uint64_t root_seed, std::uint64_t index) {
    std::uint64_t s = root_seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64(s);
}

// Named substreams of one replication seed. Keeping arrival/service draws
// on their own streams means the policy choice does not perturb them,
// which enables paired comparisons across policies.
struct RngStreams {
    std::mt19937_64 arrivals;
    std::mt19937_64 service;
    std::mt19937_64 routing;
    std::mt19937_64 policy;

    explicit RngStreams(std::uint64_t seed) {
        std::uint64_t s = seed;
        arrivals.seed(splitmix64(s));
        service.seed(splitmix64(s));
        routing.seed(splitmix64(s));
        policy.seed(splitmix64(s));
    }
};

// Uniform on (0,1): never returns 0, safe for -log(u).
inline double uniform_open(std::mt19937_64& rng) {
    double u;
    do {
        u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    } while (u <= 0.0);
    return u;
}

inline double exp_sample(double rate, std::mt19937_64& rng) {
    return -std::log(uniform_open(rng)) / rate;
}

// Uniform integer in [0, n).
inline int uniform_index(int n, std::mt19937_64& rng) {
    return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

}  // namespace pullsim
