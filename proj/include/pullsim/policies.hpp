#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pullsim/rng.hpp"

namespace pullsim {

struct LedgerInconsistent : std::runtime_error {
    explicit LedgerInconsistent(const std::string& what) : std::runtime_error("LedgerInconsistent: " + what) {}
};

// Outstanding pull-messages, one credit per message. Basic PULL keeps one
// credit per idle server; generalized PULL keeps max(C_j - q, 0) per
// server. A flat multiset of (server) entries with per-server back
// references gives O(1) add, remove and uniform draw.
struct PullLedger {
    std::vector<int> credits;                // per server
    std::vector<int> entries;                // multiset of server ids
    std::vector<std::vector<int>> positions; // per server: indices into entries
    long long total = 0;

    explicit PullLedger(int n = 0) : credits(n, 0), positions(n) {}

    void add_credit(int server) {
        credits[server]++;
        total++;
        positions[server].push_back(static_cast<int>(entries.size()));
        entries.push_back(server);
    }

    void remove_credit(int server) {
        if (credits[server] <= 0) throw LedgerInconsistent("removing credit from server with none");
        int idx = positions[server].back();
        positions[server].pop_back();
        int last = static_cast<int>(entries.size()) - 1;
        if (idx != last) {
            int moved = entries[last];
            entries[idx] = moved;
            for (auto& p : positions[moved])
                if (p == last) {
                    p = idx;
                    break;
                }
        }
        entries.pop_back();
        credits[server]--;
        total--;
    }

    // Uniform draw over the credit multiset; caller must have total > 0.
    int pick(std::mt19937_64& rng) const {
        return entries[uniform_index(static_cast<int>(entries.size()), rng)];
    }
};

struct RoutingPolicy {
    enum class Kind { Pull, PullGen, Jsqd, Random };
    Kind kind = Kind::Pull;
    int d = 2;  // JSQ(d) fanout

    bool uses_ledger() const { return kind == Kind::Pull || kind == Kind::PullGen; }
    std::string name() const;
};

// Parses "pull" | "pull-gen" | "jsq:<d>" | "random".
RoutingPolicy parse_policy(const std::string& text);

struct RoutingDecision {
    int server = -1;
    long long query_messages = 0;  // JSQ(d): 2d per arrival; others 0
};

// Basic PULL: uniform available pull-message, destroyed on use; uniform
// over all n servers when none exist.
RoutingDecision pull_route(PullLedger& ledger, int n, std::mt19937_64& routing, std::mt19937_64& policy);

// Generalized PULL: uniform over the pull-message multiset, so server i is
// chosen with probability credits_i / total.
RoutingDecision pull_gen_route(PullLedger& ledger, int n, std::mt19937_64& routing, std::mt19937_64& policy);

// JSQ(d): d uniform samples with replacement, shortest sampled queue, ties
// uniform among the tied samples.
RoutingDecision jsqd_route(std::span<const int> queues, int d, std::mt19937_64& routing);

RoutingDecision random_route(int n, std::mt19937_64& routing);

}  // namespace pullsim
