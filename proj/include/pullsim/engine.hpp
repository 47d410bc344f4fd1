#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pullsim/config.hpp"
#include "pullsim/policies.hpp"

namespace pullsim {

struct PhantomDeparture : std::runtime_error {
    PhantomDeparture() : std::runtime_error("PhantomDeparture: departure event at an empty server") {}
};

struct SimCounters {
    long long arrivals = 0;
    long long departures = 0;
    long long blocked = 0;
    long long waited = 0;
    long long pull_messages_sent = 0;
    long long query_messages_sent = 0;
};

struct TraceEntry {
    double t;
    char kind;  // 'a' arrival, 'd' departure, 'b' blocked
    int server;
    int pool;
    int q_after;
};

// Post-warmup measurement window [t0, t1].
struct BatchStats {
    double t0 = 0.0, t1 = 0.0;
    long long arrivals = 0, admitted = 0, waited = 0, blocked = 0, departures = 0;
    long long pull_msgs = 0, query_msgs = 0;
    // tail_time_avg[j][k-1]: time-average fraction of pool-j servers with
    // queue length >= k, k = 1..tail_kmax.
    std::vector<std::vector<double>> tail_time_avg;
};

// Fluid-scaled snapshot: x[k][j] = (servers in pool j with q >= k) / n.
struct GridSample {
    double t = 0.0;
    std::vector<std::vector<double>> x;
};

struct ReplicationOptions {
    double horizon = 100.0;
    double warmup_fraction = 0.2;
    int n_batches = 20;
    int tail_kmax = 16;
    double grid_dt = 0.0;   // > 0 enables fluid-scale snapshots
    int grid_kmax = 4;
    int growth_points = 200;
    bool collect_trace = false;
    bool collect_queue_histogram = false;  // per-server q samples past warmup
    bool check_ledger = false;             // recompute ledger at every event
    std::vector<int> initial_queues;       // empty = all idle

    // Service-discipline experiment knobs (infinite buffers, C=1):
    // durations drawn at arrival and attached to the customer, so FCFS and
    // LIFO runs see identical work arriving; per-server unfinished work is
    // recorded at every arrival instant.
    enum class Discipline { Fcfs, Lifo };
    Discipline discipline = Discipline::Fcfs;
    bool sample_at_arrival = false;
    bool collect_work_trace = false;
};

struct ReplicationResult {
    SimCounters counters;
    std::vector<BatchStats> batches;
    std::vector<GridSample> grid;
    std::vector<double> growth_times;
    std::vector<double> growth_totals;  // total customers in system
    std::vector<long long> queue_histogram;  // counts by q over sampled instants
    long long queue_samples = 0;
    std::vector<TraceEntry> trace;
    std::vector<std::pair<double, std::vector<double>>> work_trace;  // (t, per-server work)
    long long in_system_at_end = 0;
    bool overflow = false;  // a queue hit the runaway guard
    double horizon = 0.0;
};

// One exact replication: Poisson arrivals at rate lambda*n, per-server
// service per the pool's distribution, routing delegated to the policy.
// Deterministic given (config, scaled, policy, options, seed).
ReplicationResult run_replication(const ScaledSystem& scaled, const SystemConfig& config,
                                  const RoutingPolicy& policy, const ReplicationOptions& options,
                                  std::uint64_t seed);

std::string trace_csv(const ReplicationResult& result, const std::vector<int>& server_pool);

}  // namespace pullsim
