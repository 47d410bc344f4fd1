#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

namespace pullsim {

inline double mean_of(std::span<const double> xs) {
    double m = 0.0;
    std::size_t c = 0;
    for (double x : xs) m += (x - m) / static_cast<double>(++c);
    return m;
}

inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

// Two-sided 95% Student-t quantile; exact table through df=30, then the
// normal value is close enough for our batch counts.
inline double t_quantile_975(int df) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                   2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                   2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                   2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return 12.706;
    if (df <= 30) return table[df - 1];
    return 1.96;
}

// Batch-means style 95% CI half-width over per-batch (or per-seed) values.
inline double ci_halfwidth_95(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double se = std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
    return t_quantile_975(static_cast<int>(xs.size()) - 1) * se;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_halfwidth = 0.0;  // 95% on the slope
};

// Ordinary least squares y = a + b t with the classical slope CI.
inline SlopeFit ols_slope(std::span<const double> t, std::span<const double> y) {
    SlopeFit fit;
    const std::size_t m = t.size();
    if (m < 2 || y.size() != m) return fit;
    double tm = mean_of(t), ym = mean_of(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (t[i] - tm) * (t[i] - tm);
        sxy += (t[i] - tm) * (y[i] - ym);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * tm;
    if (m > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double r = y[i] - fit.intercept - fit.slope * t[i];
            sse += r * r;
        }
        double se = std::sqrt(sse / static_cast<double>(m - 2) / sxx);
        fit.ci_halfwidth = t_quantile_975(static_cast<int>(m) - 2) * se;
    }
    return fit;
}

// Two-sided 95% DKW band for an empirical CDF on m samples.
inline double dkw_band_95(std::size_t m) {
    if (m == 0) return 1.0;
    return std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(m)));
}

}  // namespace pullsim
