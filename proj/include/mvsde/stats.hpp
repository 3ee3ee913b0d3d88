#pragma once

#include "mvsde/common.hpp"

#include <vector>

namespace mvsde {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_with_se(const std::vector<double>& xs);

// Sample mean / covariance of row-per-sample data, with entrywise standard
// errors of the covariance entries estimated from fourth moments.
struct MomentSummary {
    Vec mean;
    Vec mean_se;
    Mat cov;
    Mat cov_se;
    long n = 0;
};

MomentSummary moment_summary(const Mat& samples);

// L1 total variation between the binned laws of two scalar samples,
// normalized so that disjoint supports give 2. Bin width by
// Freedman-Diaconis on the pooled sample (fallback to Scott / range).
struct HistogramTv {
    double tv = 0.0;
    double bin_width = 0.0;
    int bins = 0;
};

HistogramTv histogram_tv(const std::vector<double>& a, const std::vector<double>& b);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b| and the
// asymptotic rejection threshold c(alpha) * sqrt((n+m)/(n m)).
double ks_statistic(std::vector<double> a, std::vector<double> b);
double ks_threshold(double alpha, std::size_t n, std::size_t m);

// Least-squares slope of log(y) against log(x); xs, ys > 0.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// Deterministic quasi-random points in [0,1)^dim (additive recurrence over
// square roots of primes). Point j is independent of how many are requested.
std::vector<double> kronecker_point(long index, int dim);

} // namespace mvsde
