#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pullsim/config.hpp"
#include "pullsim/coupling.hpp"
#include "pullsim/engine.hpp"
#include "pullsim/equilibrium.hpp"
#include "pullsim/fluid.hpp"
#include "pullsim/metrics.hpp"
#include "pullsim/policies.hpp"
#include "pullsim/rng.hpp"

namespace {

using namespace pullsim;

int parallelism() {
    if (const char* env = std::getenv("PULLSIM_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

// Runs `seeds` replications in parallel, merged in replication order so
// the result is independent of completion order.
std::vector<ReplicationResult> run_replications(const ScaledSystem& scaled, const SystemConfig& config,
                                                const RoutingPolicy& policy, const ReplicationOptions& opt,
                                                std::uint64_t root_seed, int seeds) {
    std::vector<ReplicationResult> results(seeds);
    std::atomic<int> next{0};
    int workers = std::min(parallelism(), seeds);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < seeds; i = next.fetch_add(1))
                results[i] = run_replication(scaled, config, policy, opt, seed_plan(root_seed, i));
        });
    }
    for (auto& t : threads) t.join();
    return results;
}

MetricsReport simulate_merged(const SystemConfig& config, const RoutingPolicy& policy, int n,
                              const ReplicationOptions& opt, std::uint64_t root_seed, int seeds) {
    ScaledSystem scaled = scale(config, n);
    auto results = run_replications(scaled, config, policy, opt, root_seed, seeds);
    std::vector<MetricsReport> reports;
    reports.reserve(results.size());
    for (auto& r : results) reports.push_back(estimate_steady_state(r));
    return merge_reports(reports);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pullsim: pull-based load distribution simulator and fluid-limit toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, policy_str = "pull", n_list_str;
    int n = 100, seeds = 1;
    std::uint64_t root_seed = 1;
    double horizon = 100.0, warmup = 0.2, dt = 1e-3, grid_dt = 0.0;
    bool trace = false;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", config_path, "system config JSON");
        if (needs_config) opt->required();
        sub->add_option("--out", out_path, "output path (default stdout)");
    };

    auto* eq_cmd = app.add_subcommand("equilibrium", "solve the mean-field equilibrium point");
    add_common(eq_cmd);

    auto* fluid_cmd = app.add_subcommand("fluid", "integrate the fluid ODE from the idle state");
    add_common(fluid_cmd);
    fluid_cmd->add_option("--horizon", horizon, "integration end time")->default_val(20.0);
    fluid_cmd->add_option("--dt", dt, "integrator step")->default_val(1e-3);
    double sample_dt = 0.1;
    fluid_cmd->add_option("--sample-dt", sample_dt, "trajectory output spacing");

    auto* sim_cmd = app.add_subcommand("simulate", "run replications and report steady-state metrics");
    add_common(sim_cmd);
    sim_cmd->add_option("--policy", policy_str, "pull | pull-gen | jsq:<d> | random");
    sim_cmd->add_option("--n", n, "total server count")->required();
    sim_cmd->add_option("--horizon", horizon, "simulated time per replication");
    sim_cmd->add_option("--seeds", seeds, "replication count");
    sim_cmd->add_option("--root-seed", root_seed, "root seed for the replication plan");
    sim_cmd->add_option("--warmup", warmup, "warm-up fraction of the horizon");
    sim_cmd->add_option("--dt", grid_dt, "observer grid spacing (0 = off)");
    sim_cmd->add_flag("--trace", trace, "write the seed-0 event trace next to the report");

    auto* couple_cmd = app.add_subcommand("couple", "run the monotone-coupling dominance harness");
    add_common(couple_cmd);
    couple_cmd->add_option("--n", n, "total server count")->required();
    couple_cmd->add_option("--horizon", horizon, "simulated time per seed");
    couple_cmd->add_option("--seeds", seeds, "seed count");
    couple_cmd->add_option("--root-seed", root_seed, "root seed");

    auto* sweep_cmd = app.add_subcommand("sweep", "run simulate over a list of n");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--policy", policy_str, "pull | pull-gen | jsq:<d> | random");
    sweep_cmd->add_option("--n-list", n_list_str, "comma-separated n values")->required();
    sweep_cmd->add_option("--horizon", horizon, "simulated time per replication");
    sweep_cmd->add_option("--seeds", seeds, "replication count per n");
    sweep_cmd->add_option("--root-seed", root_seed, "root seed");
    sweep_cmd->add_option("--warmup", warmup, "warm-up fraction of the horizon");

    CLI11_PARSE(app, argc, argv);

    try {
        SystemConfig config = load_config(config_path);
        validate_or_throw(config);

        if (eq_cmd->parsed()) {
            EquilibriumPoint eq = solve_equilibrium(config);
            nlohmann::json j;
            j["nu"] = eq.nu;
            j["idle_fraction"] = eq.idle_fraction;
            j["pressure"] = eq.pressure;
            write_output(out_path, j.dump(2));
        } else if (fluid_cmd->parsed()) {
            MeanFieldState x0 = idle_state(config, 64);
            FluidTrajectory traj = integrate_fluid(x0, config, horizon, dt, sample_dt);
            write_output(out_path, trajectory_csv(traj));
            if (traj.stopped_early)
                std::cerr << "idle mass exhausted at t=" << traj.stop_time << "; integration stopped\n";
        } else if (sim_cmd->parsed()) {
            RoutingPolicy policy = parse_policy(policy_str);
            ReplicationOptions opt;
            opt.horizon = horizon;
            opt.warmup_fraction = warmup;
            opt.grid_dt = grid_dt;
            opt.collect_trace = trace;
            ScaledSystem scaled = scale(config, n);
            auto results = run_replications(scaled, config, policy, opt, root_seed, seeds);
            std::vector<MetricsReport> reports;
            for (auto& r : results) reports.push_back(estimate_steady_state(r));
            write_output(out_path, report_json(merge_reports(reports)));
            if (trace) {
                std::string tp = (out_path.empty() || out_path == "-") ? "trace.csv" : out_path + ".trace.csv";
                std::ofstream tf(tp);
                tf << trace_csv(results.front(), {});
            }
        } else if (couple_cmd->parsed()) {
            ScaledSystem scaled = scale(config, n);
            std::vector<int> q0_small(n, 0), q0_large(n, 0);
            long long events = 0, violations = 0;
            for (int s = 0; s < seeds; ++s) {
                std::uint64_t seed = seed_plan(root_seed, s);
                // Dominated pair: empty system vs a seeded non-empty one.
                std::mt19937_64 init(seed ^ 0x5bf0a8f1d6c1e3b7ULL);
                for (int i = 0; i < n; ++i) {
                    int cap = config.pools.front().unbounded() ? 5 : config.pools.front().buffer;
                    q0_large[i] = uniform_index(cap + 1, init);
                }
                CouplingReport rep = run_coupled(scaled, config, q0_small, q0_large, horizon, seed,
                                                 /*throw_on_violation=*/false);
                events += rep.events;
                violations += rep.violations;
                std::cout << "seed " << s << ": events=" << rep.events
                          << " violations=" << rep.violations << '\n';
            }
            nlohmann::json j;
            j["seeds"] = seeds;
            j["events"] = events;
            j["violations"] = violations;
            write_output(out_path, j.dump(2));
            if (violations > 0) return 2;
        } else if (sweep_cmd->parsed()) {
            RoutingPolicy policy = parse_policy(policy_str);
            std::vector<int> n_values;
            std::stringstream ss(n_list_str);
            std::string tok;
            while (std::getline(ss, tok, ',')) n_values.push_back(std::stoi(tok));
            if (n_values.empty()) throw std::runtime_error("--n-list must be nonempty");

            ReplicationOptions opt;
            opt.horizon = horizon;
            opt.warmup_fraction = warmup;
            std::ostringstream csv;
            csv << "n,policy,metric,pool,k,value,ci\n";
            csv.precision(10);
            for (int nv : n_values) {
                MetricsReport rep = simulate_merged(config, policy, nv, opt, root_seed, seeds);
                csv << nv << ',' << policy.name() << ",waiting_prob,,," << rep.waiting_prob.value << ','
                    << rep.waiting_prob.ci << '\n';
                csv << nv << ',' << policy.name() << ",blocking_prob,,," << rep.blocking_prob.value << ','
                    << rep.blocking_prob.ci << '\n';
                csv << nv << ',' << policy.name() << ",msg_per_customer,,," << rep.msg_per_customer << ",\n";
                csv << nv << ',' << policy.name() << ",growth_slope,,," << rep.growth_slope.value << ','
                    << rep.growth_slope.ci << '\n';
                for (std::size_t j = 0; j < rep.tail.size(); ++j)
                    for (std::size_t k = 0; k < rep.tail[j].size(); ++k)
                        csv << nv << ',' << policy.name() << ",tail_p," << j << ',' << (k + 1) << ','
                            << rep.tail[j][k] << ",\n";
            }
            write_output(out_path, csv.str());
        }
    } catch (const DominanceViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const LedgerInconsistent& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
