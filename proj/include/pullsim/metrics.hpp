#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pullsim/engine.hpp"
#include "pullsim/stats.hpp"

namespace pullsim {

struct InsufficientBatches : std::runtime_error {
    InsufficientBatches() : std::runtime_error("InsufficientBatches: need at least 5 batches") {}
};

struct Estimate {
    double value = 0.0;
    double ci = 0.0;  // 95% half-width
};

struct MetricsReport {
    Estimate waiting_prob;   // admitted arrivals that found all slots busy
    Estimate blocking_prob;  // lost / arrivals
    std::vector<std::vector<double>> tail;  // [pool][k-1]: p_k, k = 1..
    double msg_per_customer = 0.0;
    Estimate growth_slope;  // customers per unit time
    int samples = 0;        // batch count behind the CIs
    double horizon = 0.0;
};

// Batch-means estimation over the post-warmup windows of one replication.
MetricsReport estimate_steady_state(const ReplicationResult& result);

// Reference tail law for JSQ(d) on a homogeneous system:
// rho^((d^k-1)/(d-1)) for d >= 2; rho^k for d = 1.
double jsqd_tail_reference(double rho, int d, int k);

// Least-squares slope of total-in-system vs time past warmup; a positive
// slope whose CI excludes 0 flags instability.
SlopeFit growth_diagnostic(std::span<const double> times, std::span<const double> totals);

enum class DominanceVerdict { ALeB, BLeA, Both, Incomparable };

struct DominanceResult {
    DominanceVerdict verdict = DominanceVerdict::Incomparable;
    double max_gap_a_over_b = 0.0;  // max_k F^c_a(k) - F^c_b(k)
    double max_gap_b_over_a = 0.0;
    double band = 0.0;
};

// Empirical stochastic-dominance comparison of two integer sample sets
// given as histograms: a <= b iff F^c_a(k) <= F^c_b(k) + band for all k,
// with a DKW 95% band on each empirical CDF.
DominanceResult empirical_dominance(const std::vector<long long>& hist_a, long long count_a,
                                    const std::vector<long long>& hist_b, long long count_b);

// Across-seed merge: point estimates averaged, CIs recomputed across seeds.
// Associative and commutative in the input order.
MetricsReport merge_reports(const std::vector<MetricsReport>& reports);

std::string report_json(const MetricsReport& r);
std::string report_csv(const MetricsReport& r);

}  // namespace pullsim
