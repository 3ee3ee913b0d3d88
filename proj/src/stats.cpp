#include "mvsde/stats.hpp"

#include <algorithm>
#include <cmath>

namespace mvsde {

MeanSe mean_with_se(const std::vector<double>& xs) {
    MeanSe out;
    const long n = static_cast<long>(xs.size());
    if (n == 0) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double x : xs) {
            const double d = x - out.mean;
            ss += d * d;
        }
        out.se = std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
    }
    return out;
}

MomentSummary moment_summary(const Mat& samples) {
    MomentSummary out;
    const long n = samples.rows();
    const long d = samples.cols();
    require(n > 1, "moment_summary: need at least two samples");
    out.n = n;
    out.mean = samples.colwise().mean();
    Mat centered = samples.rowwise() - out.mean.transpose();
    out.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    out.mean_se = (out.cov.diagonal().array() / static_cast<double>(n)).sqrt();
    // SE of cov entries from the empirical fourth moments:
    // Var(c_ij) ~ (E[u_i^2 u_j^2] - c_ij^2) / n.
    out.cov_se = Mat::Zero(d, d);
    for (long i = 0; i < d; ++i) {
        for (long j = i; j < d; ++j) {
            const double m4 =
                (centered.col(i).array().square() * centered.col(j).array().square()).mean();
            const double v = std::max(0.0, m4 - out.cov(i, j) * out.cov(i, j));
            out.cov_se(i, j) = out.cov_se(j, i) = std::sqrt(v / static_cast<double>(n));
        }
    }
    return out;
}

HistogramTv histogram_tv(const std::vector<double>& a, const std::vector<double>& b) {
    HistogramTv out;
    require(!a.empty() && !b.empty(), "histogram_tv: empty sample");
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    const std::size_t n = pooled.size();
    const double lo = pooled.front();
    const double hi = pooled.back();
    const double q1 = pooled[n / 4];
    const double q3 = pooled[(3 * n) / 4];
    double width = 2.0 * (q3 - q1) / std::cbrt(static_cast<double>(n));
    if (width <= 0.0) width = (hi - lo) / 64.0;
    if (width <= 0.0) {
        // Pooled sample is a single point: identical laws.
        out.bins = 1;
        return out;
    }
    const int bins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)) + 1);
    out.bin_width = width;
    out.bins = bins;
    std::vector<double> pa(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> pb(static_cast<std::size_t>(bins), 0.0);
    auto bin_of = [&](double x) {
        int k = static_cast<int>((x - lo) / width);
        return std::clamp(k, 0, bins - 1);
    };
    for (double x : a) pa[static_cast<std::size_t>(bin_of(x))] += 1.0 / static_cast<double>(a.size());
    for (double x : b) pb[static_cast<std::size_t>(bin_of(x))] += 1.0 / static_cast<double>(b.size());
    double tv = 0.0;
    for (int k = 0; k < bins; ++k) tv += std::abs(pa[static_cast<std::size_t>(k)] - pb[static_cast<std::size_t>(k)]);
    out.tv = tv;
    return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), "ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_threshold(double alpha, std::size_t n, std::size_t m) {
    require(alpha > 0.0 && alpha < 1.0, "ks_threshold: alpha in (0,1)");
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    return c * std::sqrt((nn + mm) / (nn * mm));
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size() && xs.size() >= 2, "loglog_slope: need >= 2 points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        require(xs[k] > 0.0 && ys[k] > 0.0, "loglog_slope: positive data required");
        const double lx = std::log(xs[k]);
        const double ly = std::log(ys[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> kronecker_point(long index, int dim) {
    static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    require(dim >= 1 && dim <= 12, "kronecker_point: dim in [1,12]");
    std::vector<double> p(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
        const double alpha = std::sqrt(primes[k]);
        const double v = (static_cast<double>(index) + 1.0) * alpha;
        p[static_cast<std::size_t>(k)] = v - std::floor(v);
    }
    return p;
}

} // namespace mvsde
