#include "pullsim/policies.hpp"

namespace pullsim {

std::string RoutingPolicy::name() const {
    switch (kind) {
        case Kind::Pull:
            return "pull";
        case Kind::PullGen:
            return "pull-gen";
        case Kind::Jsqd:
            return "jsq:" + std::to_string(d);
        case Kind::Random:
            return "random";
    }
    return "?";
}

RoutingPolicy parse_policy(const std::string& text) {
    RoutingPolicy p;
    if (text == "pull") {
        p.kind = RoutingPolicy::Kind::Pull;
    } else if (text == "pull-gen") {
        p.kind = RoutingPolicy::Kind::PullGen;
    } else if (text == "random") {
        p.kind = RoutingPolicy::Kind::Random;
    } else if (text.rfind("jsq:", 0) == 0) {
        p.kind = RoutingPolicy::Kind::Jsqd;
        p.d = std::stoi(text.substr(4));
        if (p.d < 1) throw std::runtime_error("jsq fanout d must be >= 1");
    } else {
        throw std::runtime_error("unknown policy: " + text + " (expected pull | pull-gen | jsq:<d> | random)");
    }
    return p;
}

RoutingDecision pull_route(PullLedger& ledger, int n, std::mt19937_64& routing, std::mt19937_64& policy) {
    RoutingDecision dec;
    if (ledger.total > 0) {
        dec.server = ledger.pick(routing);
        ledger.remove_credit(dec.server);
    } else {
        dec.server = uniform_index(n, policy);
    }
    return dec;
}

RoutingDecision pull_gen_route(PullLedger& ledger, int n, std::mt19937_64& routing, std::mt19937_64& policy) {
    // Same mechanics as basic PULL: the multiset draw is already
    // proportional to per-server credit counts.
    return pull_route(ledger, n, routing, policy);
}

RoutingDecision jsqd_route(std::span<const int> queues, int d, std::mt19937_64& routing) {
    const int n = static_cast<int>(queues.size());
    RoutingDecision dec;
    dec.query_messages = 2LL * d;

    int best = -1;
    int best_q = 0;
    int tie_count = 0;
    for (int i = 0; i < d; ++i) {
        int s = uniform_index(n, routing);
        if (best < 0 || queues[s] < best_q) {
            best = s;
            best_q = queues[s];
            tie_count = 1;
        } else if (queues[s] == best_q) {
            // Reservoir draw keeps ties uniform among tied samples.
            tie_count++;
            if (uniform_index(tie_count, routing) == 0) best = s;
        }
    }
    dec.server = best;
    return dec;
}

RoutingDecision random_route(int n, std::mt19937_64& routing) {
    RoutingDecision dec;
    dec.server = uniform_index(n, routing);
    return dec;
}

}  // namespace pullsim
