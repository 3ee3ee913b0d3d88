#include "mvsde/timechange.hpp"

#include "mvsde/parallel.hpp"
#include "mvsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvsde {

RadialDecomposition radial_decompose(const Mat& path, const StateDiffusion& sigma,
                                     const std::vector<double>& times, double origin_eps) {
    const long steps = path.rows() - 1;
    const int d = static_cast<int>(path.cols());
    require(d >= 2, "radial_decompose: needs state dimension >= 2");
    require(static_cast<long>(times.size()) == steps + 1, "radial_decompose: time grid mismatch");
    RadialDecomposition out;
    out.drift.resize(static_cast<std::size_t>(steps));
    out.psi.resize(static_cast<std::size_t>(steps));
    out.rows = Mat::Zero(steps, d);
    for (long k = 0; k < steps; ++k) {
        const Vec x = path.row(k).transpose();
        const double r = x.norm();
        if (r < origin_eps) {
            throw NumericError("radial_decompose: path within origin guard at step " +
                               std::to_string(k));
        }
        const Vec xhat = x / r;
        const Mat sig = sigma(times[static_cast<std::size_t>(k)], x);
        require(sig.rows() == d, "radial_decompose: sigma row dimension mismatch");
        const Mat a = sig * sig.transpose();
        const double b = (a.trace() - xhat.dot(a * xhat)) / r;
        const Vec row = sig.transpose() * xhat;
        if (!std::isfinite(b) || !row.allFinite()) {
            throw NumericError("radial_decompose: non-finite value at step " + std::to_string(k));
        }
        out.drift[static_cast<std::size_t>(k)] = b;
        out.rows.row(k) = row.transpose();
        out.psi[static_cast<std::size_t>(k)] = row.norm();
    }
    return out;
}

namespace {

double piecewise_linear(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

} // namespace

double TimeChange::tau(double t) const {
    std::vector<double> model(tau_grid.size());
    for (std::size_t k = 0; k < model.size(); ++k) model[k] = dt * static_cast<double>(k);
    return piecewise_linear(model, tau_grid, t);
}

double TimeChange::chi(double u) const {
    std::vector<double> model(tau_grid.size());
    for (std::size_t k = 0; k < model.size(); ++k) model[k] = dt * static_cast<double>(k);
    return piecewise_linear(tau_grid, model, u);
}

TimeChange build_time_change(const std::vector<double>& psi, double dt) {
    require(!psi.empty(), "build_time_change: empty integrand");
    require(dt > 0.0, "build_time_change: dt must be positive");
    TimeChange tc;
    tc.dt = dt;
    tc.tau_grid.reserve(psi.size() + 1);
    tc.clock_grid.reserve(psi.size() + 1);
    tc.tau_grid.push_back(0.0);
    tc.clock_grid.push_back(0.0);
    double c0 = 1.0;
    for (double p : psi) {
        require(p > 0.0, "build_time_change: integrand must stay positive");
        const double p2 = p * p;
        tc.tau_grid.push_back(tc.tau_grid.back() + dt / p2);
        tc.clock_grid.push_back(tc.clock_grid.back() + dt * p2);
        c0 = std::max({c0, p2, 1.0 / p2});
    }
    tc.c0 = c0;
    return tc;
}

std::vector<double> time_changed_increments(const RadialDecomposition& radial, const Mat& noise) {
    require(noise.rows() == radial.rows.rows(), "time_changed_increments: step count mismatch");
    require(noise.cols() == radial.rows.cols(), "time_changed_increments: dimension mismatch");
    std::vector<double> out(static_cast<std::size_t>(noise.rows()));
    for (long k = 0; k < noise.rows(); ++k) {
        out[static_cast<std::size_t>(k)] = radial.rows.row(k).dot(noise.row(k));
    }
    return out;
}

ReflectedPath reflect_simulate(const std::vector<double>& w_hat_increments,
                               const std::vector<double>& du, double c1, double z0,
                               double barrier) {
    require(w_hat_increments.size() == du.size(), "reflect_simulate: grid mismatch");
    require(z0 >= barrier, "reflect_simulate: start below the barrier");
    ReflectedPath path;
    path.barrier = barrier;
    path.drift = c1;
    path.z.reserve(w_hat_increments.size() + 1);
    path.local_time.reserve(w_hat_increments.size());
    path.z.push_back(z0);
    double z = z0;
    for (std::size_t k = 0; k < w_hat_increments.size(); ++k) {
        const double free = z + w_hat_increments[k] + c1 * du[k];
        const double corrected = std::max(barrier, free);
        path.local_time.push_back(corrected - free);
        z = corrected;
        path.z.push_back(z);
    }
    return path;
}

ReflectedPath reflect_simulate(const std::vector<double>& w_hat_increments, double du, double c1,
                               double z0, double barrier) {
    return reflect_simulate(w_hat_increments,
                            std::vector<double>(w_hat_increments.size(), du), c1, z0, barrier);
}

double comparison_violation_fraction(const std::vector<double>& hat_x, const ReflectedPath& z,
                                     double tolerance) {
    require(hat_x.size() == z.z.size(), "comparison: grid mismatch");
    if (hat_x.empty()) return 0.0;
    long violations = 0;
    for (std::size_t k = 0; k < hat_x.size(); ++k) {
        if (z.z[k] < hat_x[k] - tolerance) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(hat_x.size());
}

ModulusPath sign_sde_reduce(double v0, const std::vector<double>& v_increments) {
    ModulusPath out;
    out.abs_path.reserve(v_increments.size() + 1);
    out.local_time.reserve(v_increments.size());
    double v = v0;
    out.abs_path.push_back(std::abs(v));
    auto sgn = [](double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); };
    for (double dv : v_increments) {
        const double prev = v;
        v += dv;
        // Local time accrues only across sign changes; same-sign steps keep
        // d|V| = sign(V) dV exactly.
        double tanaka = 0.0;
        if (sgn(prev) != sgn(v)) {
            tanaka = std::max(0.0, std::abs(v) - std::abs(prev) - sgn(prev) * dv);
        }
        out.local_time.push_back(tanaka);
        out.abs_path.push_back(std::abs(v));
    }
    return out;
}

double sup_wiener_exp_moment(double r, double T) {
    require(T > 0.0, "sup_wiener_exp_moment: T must be positive");
    require(r >= 0.0, "sup_wiener_exp_moment: r must be nonnegative");
    if (2.0 * r * T >= 1.0) return std::numeric_limits<double>::infinity();
    return 1.0 / std::sqrt(1.0 - 2.0 * r * T);
}

double mc_sup_wiener_exp_moment(double r, double T, long paths, long steps, std::uint64_t seed,
                                int workers) {
    require(paths >= 1 && steps >= 1, "mc_sup_wiener_exp_moment: need paths, steps >= 1");
    const double sdt = std::sqrt(T / static_cast<double>(steps));
    std::vector<double> vals(static_cast<std::size_t>(paths));
    parallel_for(paths, workers, [&](long p) {
        SplitRng rng(seed, static_cast<std::uint64_t>(p));
        double w = 0.0;
        double sup = 0.0; // one-sided running maximum
        for (long k = 0; k < steps; ++k) {
            w += sdt * rng.next_normal();
            if (w > sup) sup = w;
        }
        vals[static_cast<std::size_t>(p)] = std::exp(r * sup * sup);
    });
    double acc = 0.0;
    for (double v : vals) acc += v;
    return acc / static_cast<double>(paths);
}

} // namespace mvsde
