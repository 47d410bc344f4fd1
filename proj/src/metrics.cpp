#include "pullsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace pullsim {

namespace {

Estimate batch_estimate(const std::vector<double>& per_batch, double pooled) {
    Estimate e;
    e.value = pooled;
    e.ci = ci_halfwidth_95(per_batch);
    return e;
}

}  // namespace

MetricsReport estimate_steady_state(const ReplicationResult& result) {
    const auto& batches = result.batches;
    if (static_cast<int>(batches.size()) < 5) throw InsufficientBatches();

    MetricsReport rep;
    rep.samples = static_cast<int>(batches.size());
    rep.horizon = result.horizon;

    long long arrivals = 0, admitted = 0, waited = 0, blocked = 0, msgs = 0;
    std::vector<double> wait_frac, block_frac;
    for (const auto& b : batches) {
        arrivals += b.arrivals;
        admitted += b.admitted;
        waited += b.waited;
        blocked += b.blocked;
        msgs += b.pull_msgs + b.query_msgs;
        if (b.admitted > 0) wait_frac.push_back(static_cast<double>(b.waited) / b.admitted);
        if (b.arrivals > 0) block_frac.push_back(static_cast<double>(b.blocked) / b.arrivals);
    }
    rep.waiting_prob = batch_estimate(wait_frac, admitted > 0 ? static_cast<double>(waited) / admitted : 0.0);
    rep.blocking_prob = batch_estimate(block_frac, arrivals > 0 ? static_cast<double>(blocked) / arrivals : 0.0);
    rep.msg_per_customer = arrivals > 0 ? static_cast<double>(msgs) / arrivals : 0.0;

    const int pools = static_cast<int>(batches.front().tail_time_avg.size());
    const int kmax = pools > 0 ? static_cast<int>(batches.front().tail_time_avg.front().size()) : 0;
    rep.tail.assign(pools, std::vector<double>(kmax, 0.0));
    double total_len = 0.0;
    for (const auto& b : batches) {
        double len = b.t1 - b.t0;
        total_len += len;
        for (int j = 0; j < pools; ++j)
            for (int k = 0; k < kmax; ++k) rep.tail[j][k] += len * b.tail_time_avg[j][k];
    }
    if (total_len > 0.0)
        for (auto& row : rep.tail)
            for (auto& v : row) v /= total_len;

    // Growth slope over post-warmup growth samples.
    double warmup_end = batches.front().t0;
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < result.growth_times.size(); ++i) {
        if (result.growth_times[i] >= warmup_end) {
            ts.push_back(result.growth_times[i]);
            ys.push_back(result.growth_totals[i]);
        }
    }
    SlopeFit fit = growth_diagnostic(ts, ys);
    rep.growth_slope = {fit.slope, fit.ci_halfwidth};
    return rep;
}

double jsqd_tail_reference(double rho, int d, int k) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::runtime_error("jsqd_tail_reference needs 0 < rho < 1");
    if (d < 1) throw std::runtime_error("jsqd_tail_reference needs d >= 1");
    if (k <= 0) return 1.0;
    if (d == 1) return std::pow(rho, k);
    double expo = (std::pow(static_cast<double>(d), k) - 1.0) / (d - 1.0);
    return std::pow(rho, expo);
}

SlopeFit growth_diagnostic(std::span<const double> times, std::span<const double> totals) {
    if (times.size() < 2) throw std::runtime_error("growth_diagnostic needs at least 2 points");
    return ols_slope(times, totals);
}

DominanceResult empirical_dominance(const std::vector<long long>& hist_a, long long count_a,
                                    const std::vector<long long>& hist_b, long long count_b) {
    if (count_a <= 0 || count_b <= 0) throw std::runtime_error("empirical_dominance needs nonempty samples");

    const int kmax = static_cast<int>(std::max(hist_a.size(), hist_b.size()));
    auto survival = [kmax](const std::vector<long long>& h, long long count, int k) {
        long long ge = 0;
        for (int q = k; q < static_cast<int>(h.size()); ++q) ge += h[q];
        return static_cast<double>(ge) / count;
    };

    DominanceResult res;
    res.band = dkw_band_95(static_cast<std::size_t>(count_a)) + dkw_band_95(static_cast<std::size_t>(count_b));
    for (int k = 1; k <= kmax; ++k) {
        double fa = survival(hist_a, count_a, k);
        double fb = survival(hist_b, count_b, k);
        res.max_gap_a_over_b = std::max(res.max_gap_a_over_b, fa - fb);
        res.max_gap_b_over_a = std::max(res.max_gap_b_over_a, fb - fa);
    }
    bool a_le_b = res.max_gap_a_over_b <= res.band;
    bool b_le_a = res.max_gap_b_over_a <= res.band;
    if (a_le_b && b_le_a)
        res.verdict = DominanceVerdict::Both;
    else if (a_le_b)
        res.verdict = DominanceVerdict::ALeB;
    else if (b_le_a)
        res.verdict = DominanceVerdict::BLeA;
    else
        res.verdict = DominanceVerdict::Incomparable;
    return res;
}

MetricsReport merge_reports(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw std::runtime_error("merge_reports: empty input");
    if (reports.size() == 1) return reports.front();

    MetricsReport out;
    out.samples = static_cast<int>(reports.size());
    out.horizon = reports.front().horizon;

    std::vector<double> wait, block, slope, msgs;
    for (const auto& r : reports) {
        wait.push_back(r.waiting_prob.value);
        block.push_back(r.blocking_prob.value);
        slope.push_back(r.growth_slope.value);
        msgs.push_back(r.msg_per_customer);
    }
    out.waiting_prob = {mean_of(wait), ci_halfwidth_95(wait)};
    out.blocking_prob = {mean_of(block), ci_halfwidth_95(block)};
    out.growth_slope = {mean_of(slope), ci_halfwidth_95(slope)};
    out.msg_per_customer = mean_of(msgs);

    out.tail = reports.front().tail;
    for (std::size_t r = 1; r < reports.size(); ++r)
        for (std::size_t j = 0; j < out.tail.size(); ++j)
            for (std::size_t k = 0; k < out.tail[j].size(); ++k) out.tail[j][k] += reports[r].tail[j][k];
    for (auto& row : out.tail)
        for (auto& v : row) v /= static_cast<double>(reports.size());
    return out;
}

std::string report_json(const MetricsReport& r) {
    nlohmann::json j;
    j["waiting_prob"] = {{"value", r.waiting_prob.value}, {"ci", r.waiting_prob.ci}};
    j["blocking_prob"] = {{"value", r.blocking_prob.value}, {"ci", r.blocking_prob.ci}};
    j["msg_per_customer"] = r.msg_per_customer;
    j["growth_slope"] = {{"value", r.growth_slope.value}, {"ci", r.growth_slope.ci}};
    j["samples"] = r.samples;
    j["horizon"] = r.horizon;
    j["tail"] = r.tail;
    return j.dump(2);
}

std::string report_csv(const MetricsReport& r) {
    std::ostringstream out;
    out << "metric,pool,k,value,ci\n";
    out.precision(10);
    out << "waiting_prob,,," << r.waiting_prob.value << ',' << r.waiting_prob.ci << '\n';
    out << "blocking_prob,,," << r.blocking_prob.value << ',' << r.blocking_prob.ci << '\n';
    out << "msg_per_customer,,," << r.msg_per_customer << ",\n";
    out << "growth_slope,,," << r.growth_slope.value << ',' << r.growth_slope.ci << '\n';
    for (std::size_t j = 0; j < r.tail.size(); ++j)
        for (std::size_t k = 0; k < r.tail[j].size(); ++k)
            out << "tail_p," << j << ',' << (k + 1) << ',' << r.tail[j][k] << ",\n";
    return out.str();
}

}  // namespace pullsim
