#include "pullsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace pullsim {

std::vector<std::string> validate(const SystemConfig& config) {
    std::vector<std::string> errs;
    if (!(config.lambda > 0.0)) errs.push_back("NonPositiveParameter: lambda must be > 0");
    if (config.pools.empty()) errs.push_back("NonPositiveParameter: at least one pool required");

    double beta_sum = 0.0;
    for (std::size_t j = 0; j < config.pools.size(); ++j) {
        const auto& p = config.pools[j];
        const std::string tag = "pool " + std::to_string(j);
        beta_sum += p.beta;
        if (!(p.beta > 0.0 && p.beta <= 1.0))
            errs.push_back("NonPositiveParameter: " + tag + " beta must be in (0,1]");
        if (!(p.mu > 0.0)) errs.push_back("NonPositiveParameter: " + tag + " mu must be > 0");
        if (p.buffer < 1) errs.push_back("NonPositiveParameter: " + tag + " buffer must be >= 1");
        if (p.slots < 1) errs.push_back("NonPositiveParameter: " + tag + " slots must be >= 1");
        if (p.slots > p.buffer) errs.push_back("SlotsExceedBuffer: " + tag + " has C > B");

        for (auto& e : p.dist.check()) errs.push_back(tag + ": " + e);
        double want_mean = static_cast<double>(p.slots) / p.mu;
        double got_mean = p.dist.mean();
        if (std::abs(got_mean - want_mean) > 1e-9 * std::max(1.0, want_mean))
            errs.push_back("NonPositiveParameter: " + tag + " service mean " + std::to_string(got_mean) +
                           " != C/mu = " + std::to_string(want_mean));

        if (p.rate_profile) {
            const auto& f = *p.rate_profile;
            if (p.dist.kind != DistKind::Exponential)
                errs.push_back("RateProfileShape: " + tag + " rate_profile requires exponential service");
            if (static_cast<int>(f.size()) != p.slots + 1) {
                errs.push_back("RateProfileShape: " + tag + " rate_profile must list f(0)..f(C)");
            } else {
                if (f.front() != 0.0) errs.push_back("RateProfileShape: " + tag + " f(0) must be 0");
                if (!std::is_sorted(f.begin(), f.end()))
                    errs.push_back("RateProfileShape: " + tag + " f must be nondecreasing");
                if (std::abs(f.back() - p.mu) > 1e-12)
                    errs.push_back("RateProfileShape: " + tag + " f(C) must equal mu");
            }
        }
    }
    if (!config.pools.empty() && std::abs(beta_sum - 1.0) > 1e-12)
        errs.push_back("BetaSumViolation: sum of betas is " + std::to_string(beta_sum));
    return errs;
}

void validate_or_throw(const SystemConfig& config) {
    auto errs = validate(config);
    if (!errs.empty()) throw ConfigError(std::move(errs));
}

bool check_subcritical(const SystemConfig& config) {
    return config.lambda < config.total_capacity();
}

ScaledSystem scale(const SystemConfig& config, int n) {
    const int j_count = static_cast<int>(config.pools.size());
    if (n < j_count) throw NTooSmall(n);

    std::vector<int> sizes(j_count);
    std::vector<std::pair<double, int>> remainders(j_count);
    int assigned = 0;
    for (int j = 0; j < j_count; ++j) {
        double exact = config.pools[j].beta * n;
        sizes[j] = static_cast<int>(std::floor(exact));
        remainders[j] = {exact - sizes[j], j};
        assigned += sizes[j];
    }
    // Leftovers go to the pools with the largest fractional remainder;
    // ties resolved by pool index so the split is deterministic.
    std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int i = 0; assigned < n; ++i, ++assigned) sizes[remainders[i % j_count].second]++;

    for (int j = 0; j < j_count; ++j)
        if (sizes[j] < 1) throw NTooSmall(n);

    ScaledSystem s;
    s.n = n;
    s.pool_sizes = std::move(sizes);
    s.arrival_rate = config.lambda * n;
    return s;
}

namespace {

using nlohmann::json;

ServiceDistribution dist_from_json(const json& jd) {
    std::string kind = jd.at("kind").get<std::string>();
    if (kind == "exp") return ServiceDistribution::exponential(jd.at("rate").get<double>());
    if (kind == "pareto")
        return ServiceDistribution::pareto(jd.at("sigma").get<double>(), jd.at("alpha").get<double>());
    if (kind == "hyperexp") {
        std::vector<std::pair<double, double>> branches;
        for (auto& b : jd.at("branches")) branches.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
        return ServiceDistribution::hyperexponential(std::move(branches));
    }
    throw std::runtime_error("unknown dist kind: " + kind);
}

json dist_to_json(const ServiceDistribution& d) {
    json j;
    switch (d.kind) {
        case DistKind::Exponential:
            j["kind"] = "exp";
            j["rate"] = d.rate;
            break;
        case DistKind::Pareto:
            j["kind"] = "pareto";
            j["sigma"] = d.sigma;
            j["alpha"] = d.alpha;
            break;
        case DistKind::Hyperexponential:
            j["kind"] = "hyperexp";
            j["branches"] = json::array();
            for (auto& [p, r] : d.branches) j["branches"].push_back({p, r});
            break;
    }
    return j;
}

}  // namespace

SystemConfig config_from_json(const std::string& text) {
    json j = json::parse(text);
    SystemConfig cfg;
    cfg.lambda = j.at("lambda").get<double>();
    for (auto& jp : j.at("pools")) {
        PoolSpec p;
        p.beta = jp.at("beta").get<double>();
        p.mu = jp.at("mu").get<double>();
        if (jp.contains("buffer")) {
            if (jp["buffer"].is_string()) {
                if (jp["buffer"].get<std::string>() != "inf")
                    throw std::runtime_error("buffer must be a number or \"inf\"");
                p.buffer = kUnboundedBuffer;
            } else {
                p.buffer = jp["buffer"].get<int>();
            }
        }
        if (jp.contains("slots")) p.slots = jp["slots"].get<int>();
        if (jp.contains("dist")) {
            p.dist = dist_from_json(jp["dist"]);
        } else {
            // Default: exponential per-slot mean C/mu.
            p.dist = ServiceDistribution::exponential(p.mu / p.slots);
        }
        if (jp.contains("rate_profile")) p.rate_profile = jp["rate_profile"].get<std::vector<double>>();
        cfg.pools.push_back(std::move(p));
    }
    return cfg;
}

std::string config_to_json(const SystemConfig& config) {
    json j;
    j["lambda"] = config.lambda;
    j["pools"] = json::array();
    for (auto& p : config.pools) {
        json jp;
        jp["beta"] = p.beta;
        jp["mu"] = p.mu;
        if (p.unbounded())
            jp["buffer"] = "inf";
        else
            jp["buffer"] = p.buffer;
        jp["slots"] = p.slots;
        jp["dist"] = dist_to_json(p.dist);
        if (p.rate_profile) jp["rate_profile"] = *p.rate_profile;
        j["pools"].push_back(std::move(jp));
    }
    return j.dump(2);
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

}  // namespace pullsim
