#include "pullsim/coupling.hpp"

#include <numeric>

#include "pullsim/rng.hpp"

namespace pullsim {

namespace {

// Idle-server set with O(1) insert, erase and uniform draw.
class IdleSet {
  public:
    explicit IdleSet(int n) : pos_(n, -1) {}

    bool contains(int i) const { return pos_[i] >= 0; }
    bool empty() const { return members_.empty(); }

    void insert(int i) {
        pos_[i] = static_cast<int>(members_.size());
        members_.push_back(i);
    }

    void erase(int i) {
        int idx = pos_[i];
        int last = members_.back();
        members_[idx] = last;
        pos_[last] = idx;
        members_.pop_back();
        pos_[i] = -1;
    }

    int pick(std::mt19937_64& rng) const {
        return members_[uniform_index(static_cast<int>(members_.size()), rng)];
    }

  private:
    std::vector<int> members_;
    std::vector<int> pos_;
};

struct System {
    std::vector<int> q;
    IdleSet idle;
    explicit System(const std::vector<int>& q0) : q(q0), idle(static_cast<int>(q0.size())) {
        for (int i = 0; i < static_cast<int>(q0.size()); ++i)
            if (q0[i] == 0) idle.insert(i);
    }

    // Returns true if admitted and the server had to queue the customer.
    void admit(int i, int buffer, CouplingReport* stats) {
        if (stats) stats->small_arrivals++;
        if (buffer != kUnboundedBuffer && q[i] >= buffer) {
            if (stats) stats->small_blocked++;
            return;
        }
        if (q[i] > 0 && stats) stats->small_waited++;
        if (q[i] == 0) idle.erase(i);
        q[i]++;
    }

    void depart(int i) {
        q[i]--;
        if (q[i] == 0) idle.insert(i);
    }
};

}  // namespace

CouplingReport run_coupled(const ScaledSystem& scaled, const SystemConfig& config,
                           const std::vector<int>& q0_small, const std::vector<int>& q0_large,
                           double horizon, std::uint64_t seed, bool throw_on_violation) {
    for (auto& p : config.pools)
        if (p.dist.kind != DistKind::Exponential || p.slots != 1 || p.rate_profile)
            throw std::runtime_error("coupling harness covers the basic model only (exponential, C=1)");

    const int n = scaled.n;
    if (static_cast<int>(q0_small.size()) != n || static_cast<int>(q0_large.size()) != n)
        throw std::runtime_error("initial state size must equal n");
    for (int i = 0; i < n; ++i)
        if (q0_small[i] > q0_large[i]) throw InitialStateNotDominated();

    std::vector<int> server_pool;
    std::vector<int> server_buffer;
    for (int j = 0; j < static_cast<int>(scaled.pool_sizes.size()); ++j)
        for (int i = 0; i < scaled.pool_sizes[j]; ++i) {
            server_pool.push_back(j);
            server_buffer.push_back(config.pools[j].buffer);
        }

    // Potential-departure clocks: every server ticks at rate mu_j whether
    // busy or not; a tick decrements each system whose copy is nonempty.
    std::vector<double> pool_rate(scaled.pool_sizes.size());
    double departure_rate = 0.0;
    for (std::size_t j = 0; j < scaled.pool_sizes.size(); ++j) {
        pool_rate[j] = scaled.pool_sizes[j] * config.pools[j].mu;
        departure_rate += pool_rate[j];
    }
    const double total_rate = scaled.arrival_rate + departure_rate;

    RngStreams streams(seed);
    System small(q0_small), large(q0_large);
    CouplingReport report;

    // Pool offsets for uniform-server-in-pool draws.
    std::vector<int> pool_offset(scaled.pool_sizes.size() + 1, 0);
    for (std::size_t j = 0; j < scaled.pool_sizes.size(); ++j)
        pool_offset[j + 1] = pool_offset[j] + scaled.pool_sizes[j];

    auto check_dominance = [&](double t, int i) {
        if (small.q[i] > large.q[i]) {
            if (throw_on_violation) throw DominanceViolation(t, i);
            report.violations++;
            if (report.first_violation_time < 0.0) report.first_violation_time = t;
        }
    };

    double clock = 0.0;
    while (true) {
        clock += exp_sample(total_rate, streams.arrivals);
        if (clock >= horizon) break;
        report.events++;

        double u = std::uniform_real_distribution<double>(0.0, total_rate)(streams.arrivals);
        if (u < scaled.arrival_rate) {
            // Coupled arrival assignment per the monotone construction.
            int i_small, i_large;
            if (!small.idle.empty() && !large.idle.empty()) {
                i_small = small.idle.pick(streams.routing);
                i_large = large.idle.contains(i_small) ? i_small : large.idle.pick(streams.routing);
            } else if (!small.idle.empty()) {
                // Larger system is fully busy: independent assignments.
                i_small = small.idle.pick(streams.routing);
                i_large = uniform_index(n, streams.policy);
            } else {
                // Both fully busy: one common uniform assignment.
                i_small = i_large = uniform_index(n, streams.routing);
            }
            small.admit(i_small, server_buffer[i_small], &report);
            large.admit(i_large, server_buffer[i_large], nullptr);
            check_dominance(clock, i_small);
            check_dominance(clock, i_large);
        } else {
            // Potential departure: pick the pool by rate, a server within
            // it uniformly, and apply to each nonempty copy.
            double v = u - scaled.arrival_rate;
            std::size_t j = 0;
            while (j + 1 < pool_rate.size() && v >= pool_rate[j]) v -= pool_rate[j], ++j;
            int i = pool_offset[j] + uniform_index(scaled.pool_sizes[static_cast<int>(j)], streams.arrivals);
            if (small.q[i] > 0) small.depart(i);
            if (large.q[i] > 0) large.depart(i);
            check_dominance(clock, i);
        }
    }
    report.final_small = small.q;
    report.final_large = large.q;
    return report;
}

}  // namespace pullsim
