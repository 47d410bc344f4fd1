#include "pullsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>

#include "pullsim/rng.hpp"

namespace pullsim {

namespace {

struct Event {
    double t;
    std::uint64_t seq;  // insertion order breaks ties deterministically
    enum class Kind { Arrival, Departure } kind;
    int server;
    std::uint64_t version;  // markovian departures only
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.seq > b.seq;
    }
};

struct Server {
    int pool;
    int q = 0;
    int in_service = 0;        // sampled-duration pools
    std::uint64_t version = 0; // markovian pools
    // sample-at-arrival mode only:
    std::deque<double> pending;
    double pending_sum = 0.0;
    double busy_until = 0.0;
};

constexpr int kOverflowGuard = 1 << 30;

class Simulation {
  public:
    Simulation(const ScaledSystem& scaled, const SystemConfig& config, const RoutingPolicy& policy,
               const ReplicationOptions& opt, std::uint64_t seed)
        : config_(config), policy_(policy), opt_(opt), n_(scaled.n),
          arrival_rate_(scaled.arrival_rate), streams_(seed), ledger_(scaled.n) {
        servers_.reserve(n_);
        for (int j = 0; j < static_cast<int>(scaled.pool_sizes.size()); ++j)
            for (int i = 0; i < scaled.pool_sizes[j]; ++i) servers_.push_back(Server{j});

        markovian_ = config.pools.front().dist.kind == DistKind::Exponential;
        for (auto& p : config.pools)
            if ((p.dist.kind == DistKind::Exponential) != markovian_)
                throw std::runtime_error("mixed markovian and sampled-duration pools are not supported");
        if (opt.sample_at_arrival) {
            for (auto& p : config.pools)
                if (p.slots != 1 || !p.unbounded())
                    throw std::runtime_error("sample_at_arrival requires C=1 and unbounded buffers");
        }

        queues_.assign(n_, 0);
        if (!opt.initial_queues.empty()) {
            if (static_cast<int>(opt.initial_queues.size()) != n_)
                throw std::runtime_error("initial_queues size must equal n");
            queues_ = opt.initial_queues;
        }

        const int kmax = std::max(opt.tail_kmax, opt.grid_kmax);
        tail_kmax_ = kmax;
        pool_count_ = static_cast<int>(config.pools.size());
        cnt_.assign(pool_count_, std::vector<long long>(kmax + 1, 0));
        area_.assign(pool_count_, std::vector<double>(kmax + 1, 0.0));
        last_t_.assign(pool_count_, std::vector<double>(kmax + 1, 0.0));
        for (int j = 0; j < pool_count_; ++j) cnt_[j][0] = scaled.pool_sizes[j];
    }

    ReplicationResult run() {
        init_state();
        schedule_arrival();

        const double horizon = opt_.horizon;
        const double warmup = opt_.warmup_fraction * horizon;
        const double batch_len = (horizon - warmup) / std::max(1, opt_.n_batches);
        double next_batch_end = warmup + batch_len;
        bool in_warmup = warmup > 0.0;
        open_batch(in_warmup ? 0.0 : warmup);
        if (!in_warmup) current_.t0 = 0.0;

        const double growth_dt = horizon / std::max(1, opt_.growth_points);
        double next_growth = 0.0;
        double next_grid = opt_.grid_dt > 0.0 ? 0.0 : horizon + 1.0;

        while (!heap_.empty()) {
            Event ev = heap_.top();
            if (ev.t >= horizon) break;
            heap_.pop();

            // Emit time-driven samples due before this event; the state is
            // constant between events.
            while (next_growth <= ev.t && next_growth < horizon) {
                sample_growth(next_growth, next_growth >= warmup);
                next_growth += growth_dt;
            }
            while (next_grid <= ev.t && next_grid <= horizon) {
                sample_grid(next_grid);
                next_grid += opt_.grid_dt;
            }
            if (in_warmup && ev.t >= warmup) {
                close_window(warmup, /*record=*/false);
                open_batch(warmup);
                in_warmup = false;
            }
            while (!in_warmup && ev.t >= next_batch_end && next_batch_end <= horizon + 1e-12) {
                close_window(next_batch_end, /*record=*/true);
                open_batch(next_batch_end);
                next_batch_end += batch_len;
            }

            clock_ = ev.t;
            if (ev.kind == Event::Kind::Arrival)
                handle_arrival();
            else
                handle_departure(ev);
            if (opt_.check_ledger && policy_.uses_ledger()) verify_ledger();
        }

        clock_ = horizon;
        while (next_growth < horizon + 1e-12) {
            sample_growth(std::min(next_growth, horizon), next_growth >= warmup);
            next_growth += growth_dt;
        }
        while (opt_.grid_dt > 0.0 && next_grid <= horizon + 1e-12) {
            sample_grid(next_grid);
            next_grid += opt_.grid_dt;
        }
        if (in_warmup) {
            close_window(horizon, /*record=*/false);
        } else {
            while (next_batch_end <= horizon + 1e-9) {
                close_window(next_batch_end, /*record=*/true);
                open_batch(next_batch_end);
                next_batch_end += batch_len;
            }
            close_window(horizon, /*record=*/next_batch_end - batch_len < horizon - 1e-9);
        }

        finalize();
        return std::move(result_);
    }

  private:
    void init_state() {
        for (int i = 0; i < n_; ++i) {
            int q0 = queues_[i];
            Server& s = servers_[i];
            s.q = 0;
            for (int c = 0; c < q0; ++c) admit_initial(i);
            total_in_system_ += q0;
        }
        if (policy_.uses_ledger()) {
            for (int i = 0; i < n_; ++i) {
                int want = ledger_target(i);
                for (int c = 0; c < want; ++c) {
                    ledger_.add_credit(i);
                    counters_.pull_messages_sent++;  // initialization messages
                }
            }
        }
    }

    int ledger_target(int i) const {
        const Server& s = servers_[i];
        if (policy_.kind == RoutingPolicy::Kind::Pull) return s.q == 0 ? 1 : 0;
        int c = config_.pools[s.pool].slots - s.q;
        return c > 0 ? c : 0;
    }

    void admit_initial(int i) {
        Server& s = servers_[i];
        s.q++;
        bump_tail(i, s.q);
        if (markovian_) {
            reschedule_markov(i);
        } else if (s.in_service < config_.pools[s.pool].slots) {
            start_service(i);
        }
    }

    void schedule_arrival() {
        double t = clock_ + exp_sample(arrival_rate_, streams_.arrivals);
        heap_.push(Event{t, seq_++, Event::Kind::Arrival, -1, 0});
    }

    void reschedule_markov(int i) {
        Server& s = servers_[i];
        s.version++;
        double rate = config_.pools[s.pool].markov_rate(s.q);
        if (rate > 0.0) {
            double t = clock_ + exp_sample(rate, streams_.service);
            heap_.push(Event{t, seq_++, Event::Kind::Departure, i, s.version});
        }
    }

    void start_service(int i) {
        Server& s = servers_[i];
        double dur;
        if (opt_.sample_at_arrival) {
            if (s.pending.empty()) throw std::logic_error("start_service without a pending customer");
            if (opt_.discipline == ReplicationOptions::Discipline::Fcfs) {
                dur = s.pending.front();
                s.pending.pop_front();
            } else {
                dur = s.pending.back();
                s.pending.pop_back();
            }
            s.pending_sum -= dur;
            s.busy_until = clock_ + dur;
        } else {
            dur = config_.pools[s.pool].dist.sample(streams_.service);
        }
        s.in_service++;
        heap_.push(Event{clock_ + dur, seq_++, Event::Kind::Departure, i, 0});
    }

    void handle_arrival() {
        counters_.arrivals++;
        window_arrivals_++;
        schedule_arrival();

        RoutingDecision dec;
        switch (policy_.kind) {
            case RoutingPolicy::Kind::Pull:
                dec = pull_route(ledger_, n_, streams_.routing, streams_.policy);
                break;
            case RoutingPolicy::Kind::PullGen:
                dec = pull_gen_route(ledger_, n_, streams_.routing, streams_.policy);
                break;
            case RoutingPolicy::Kind::Jsqd:
                dec = jsqd_route(queues_, policy_.d, streams_.routing);
                break;
            case RoutingPolicy::Kind::Random:
                dec = random_route(n_, streams_.routing);
                break;
        }
        counters_.query_messages_sent += dec.query_messages;
        window_query_msgs_ += dec.query_messages;

        Server& s = servers_[dec.server];
        const PoolSpec& pool = config_.pools[s.pool];
        if (!pool.unbounded() && s.q >= pool.buffer) {
            counters_.blocked++;
            window_blocked_++;
            record_trace('b', dec.server, s.q);
            return;
        }
        if (s.q >= pool.slots) {
            counters_.waited++;
            window_waited_++;
        }
        s.q++;
        queues_[dec.server] = s.q;
        total_in_system_++;
        bump_tail(dec.server, s.q);
        if (s.q >= kOverflowGuard) result_.overflow = true;

        if (opt_.sample_at_arrival) {
            double dur = pool.dist.sample(streams_.service);
            s.pending.push_back(dur);
            s.pending_sum += dur;
            if (s.in_service < pool.slots) start_service(dec.server);
            if (opt_.collect_work_trace) record_work();
        } else if (markovian_) {
            reschedule_markov(dec.server);
        } else if (s.in_service < pool.slots) {
            start_service(dec.server);
        }
        record_trace('a', dec.server, s.q);
    }

    void handle_departure(const Event& ev) {
        Server& s = servers_[ev.server];
        if (markovian_) {
            if (ev.version != s.version) return;  // stale after a rate change
            if (s.q <= 0) throw PhantomDeparture();
            s.q--;
            queues_[ev.server] = s.q;
            drop_tail(ev.server, s.q + 1);
            reschedule_markov(ev.server);
        } else {
            if (s.q <= 0 || s.in_service <= 0) throw PhantomDeparture();
            s.q--;
            s.in_service--;
            queues_[ev.server] = s.q;
            drop_tail(ev.server, s.q + 1);
            if (opt_.sample_at_arrival) s.busy_until = clock_;
            if (s.q > s.in_service) start_service(ev.server);
        }
        counters_.departures++;
        window_departures_++;
        total_in_system_--;

        if (policy_.uses_ledger()) {
            bool grant = policy_.kind == RoutingPolicy::Kind::Pull
                             ? s.q == 0
                             : s.q < config_.pools[s.pool].slots;
            if (grant) {
                ledger_.add_credit(ev.server);
                counters_.pull_messages_sent++;
                window_pull_msgs_++;
            }
        }
        record_trace('d', ev.server, s.q);
    }

    void verify_ledger() const {
        long long total = 0;
        for (int i = 0; i < n_; ++i) {
            int want = ledger_target(i);
            if (ledger_.credits[i] != want)
                throw LedgerInconsistent("server " + std::to_string(i) + " has " +
                                         std::to_string(ledger_.credits[i]) + " credits, expected " +
                                         std::to_string(want));
            total += want;
        }
        if (total != ledger_.total) throw LedgerInconsistent("total mismatch");
    }

    // --- time-averaged tail counters --------------------------------------

    void accrue(int j, int k) {
        area_[j][k] += cnt_[j][k] * (clock_ - last_t_[j][k]);
        last_t_[j][k] = clock_;
    }

    void bump_tail(int server, int new_q) {
        int j = servers_[server].pool;
        if (new_q <= tail_kmax_) {
            accrue(j, new_q);
            cnt_[j][new_q]++;
        }
    }

    void drop_tail(int server, int old_q) {
        int j = servers_[server].pool;
        if (old_q <= tail_kmax_) {
            accrue(j, old_q);
            cnt_[j][old_q]--;
        }
    }

    void flush_all(double t) {
        double saved = clock_;
        clock_ = t;
        for (int j = 0; j < pool_count_; ++j)
            for (int k = 0; k <= tail_kmax_; ++k) accrue(j, k);
        clock_ = saved;
    }

    // --- measurement windows ----------------------------------------------

    void open_batch(double t0) {
        flush_all(t0);
        for (auto& row : area_) std::fill(row.begin(), row.end(), 0.0);
        window_arrivals_ = window_waited_ = window_blocked_ = window_departures_ = 0;
        window_pull_msgs_ = window_query_msgs_ = 0;
        current_ = BatchStats{};
        current_.t0 = t0;
    }

    void close_window(double t1, bool record) {
        flush_all(t1);
        if (!record) return;
        current_.t1 = t1;
        double len = t1 - current_.t0;
        current_.arrivals = window_arrivals_;
        current_.waited = window_waited_;
        current_.blocked = window_blocked_;
        current_.departures = window_departures_;
        current_.admitted = window_arrivals_ - window_blocked_;
        current_.pull_msgs = window_pull_msgs_;
        current_.query_msgs = window_query_msgs_;
        current_.tail_time_avg.assign(pool_count_, std::vector<double>(opt_.tail_kmax, 0.0));
        for (int j = 0; j < pool_count_; ++j) {
            double nj = static_cast<double>(cnt_[j][0]);
            for (int k = 1; k <= opt_.tail_kmax; ++k)
                current_.tail_time_avg[j][k - 1] = len > 0.0 ? area_[j][k] / (len * nj) : 0.0;
        }
        result_.batches.push_back(std::move(current_));
        current_ = BatchStats{};
    }

    void sample_growth(double t, bool past_warmup) {
        result_.growth_times.push_back(t);
        result_.growth_totals.push_back(static_cast<double>(total_in_system_));
        if (opt_.collect_queue_histogram && past_warmup) {
            for (int q : queues_) {
                if (q >= static_cast<int>(result_.queue_histogram.size()))
                    result_.queue_histogram.resize(q + 1, 0);
                result_.queue_histogram[q]++;
            }
            result_.queue_samples += n_;
        }
    }

    void sample_grid(double t) {
        flush_all(t);
        GridSample g;
        g.t = t;
        g.x.assign(opt_.grid_kmax + 1, std::vector<double>(pool_count_, 0.0));
        for (int k = 0; k <= opt_.grid_kmax; ++k)
            for (int j = 0; j < pool_count_; ++j)
                g.x[k][j] = static_cast<double>(cnt_[j][k]) / n_;
        result_.grid.push_back(std::move(g));
    }

    void record_trace(char kind, int server, int q_after) {
        if (!opt_.collect_trace) return;
        result_.trace.push_back(TraceEntry{clock_, kind, server, servers_[server].pool, q_after});
    }

    void record_work() {
        std::vector<double> work(n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            const Server& s = servers_[i];
            work[i] = s.pending_sum + (s.in_service > 0 ? s.busy_until - clock_ : 0.0);
        }
        result_.work_trace.emplace_back(clock_, std::move(work));
    }

    void finalize() {
        result_.counters = counters_;
        result_.in_system_at_end = total_in_system_;
        result_.horizon = opt_.horizon;
        // Conservation: every arrival is accounted for.
        if (counters_.arrivals != counters_.departures + counters_.blocked + total_in_system_)
            throw std::logic_error("conservation violated: arrivals != departures + blocked + in-system");
    }

    const SystemConfig& config_;
    RoutingPolicy policy_;
    ReplicationOptions opt_;
    int n_;
    double arrival_rate_;
    RngStreams streams_;
    PullLedger ledger_;
    std::vector<Server> servers_;
    std::vector<int> queues_;
    std::priority_queue<Event, std::vector<Event>, EventLater> heap_;
    std::uint64_t seq_ = 0;
    double clock_ = 0.0;
    long long total_in_system_ = 0;
    bool markovian_ = true;
    int pool_count_ = 0;
    int tail_kmax_ = 0;

    SimCounters counters_;
    std::vector<std::vector<long long>> cnt_;
    std::vector<std::vector<double>> area_;
    std::vector<std::vector<double>> last_t_;

    long long window_arrivals_ = 0, window_waited_ = 0, window_blocked_ = 0, window_departures_ = 0;
    long long window_pull_msgs_ = 0, window_query_msgs_ = 0;
    BatchStats current_;
    ReplicationResult result_;
};

}  // namespace

ReplicationResult run_replication(const ScaledSystem& scaled, const SystemConfig& config,
                                  const RoutingPolicy& policy, const ReplicationOptions& options,
                                  std::uint64_t seed) {
    if (!(options.horizon > 0.0)) {
        ReplicationResult empty;
        return empty;
    }
    Simulation sim(scaled, config, policy, options, seed);
    return sim.run();
}

std::string trace_csv(const ReplicationResult& result, const std::vector<int>& /*server_pool*/) {
    std::ostringstream out;
    out << "time,kind,server,pool,q_after\n";
    out.precision(12);
    for (const auto& e : result.trace) {
        const char* kind = e.kind == 'a' ? "arrival" : e.kind == 'd' ? "departure" : "blocked";
        out << e.t << ',' << kind << ',' << e.server << ',' << e.pool << ',' << e.q_after << '\n';
    }
    return out.str();
}

}  // namespace pullsim
