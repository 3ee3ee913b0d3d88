#include "mvsde/girsanov.hpp"

#include <algorithm>
#include <cmath>

namespace mvsde {

namespace {

constexpr double kLogGuard = 700.0;

// Ensemble view of one recorded snapshot so the mean-field machinery can
// average against it.
ParticleEnsemble snapshot_ensemble(const Mat& states, double t) {
    ParticleEnsemble e;
    e.states = states;
    e.time = t;
    e.alive.assign(static_cast<std::size_t>(states.rows()), 1);
    return e;
}

Mat inverse_checked(const Mat& sigma, double eig_floor, long step, long particle) {
    Eigen::FullPivLU<Mat> lu(sigma);
    const double scale = std::max(1.0, sigma.norm());
    if (!lu.isInvertible() || std::abs(lu.determinant()) < std::pow(eig_floor * scale, sigma.rows())) {
        throw DegeneracyError("girsanov: singular diffusion at step " + std::to_string(step) +
                              " particle " + std::to_string(particle));
    }
    return lu.inverse();
}

} // namespace

Vec LogWeightAccumulator::log_weights() const {
    Vec lw = stoch_integral - 0.5 * quad_compensator;
    return lw.cwiseMax(-kLogGuard).cwiseMin(kLogGuard);
}

Vec LogWeightAccumulator::weights() const { return log_weights().array().exp(); }

LogWeightAccumulator accumulate_logweight(const PathBundle& bundle,
                                          const KernelCoefficients& drift_coeffs,
                                          const StateDiffusion& sigma, double eig_floor) {
    const long m = bundle.record_count;
    const long steps = bundle.steps();
    require(m >= 1, "accumulate_logweight: bundle has no recorded particles");
    require(static_cast<long>(bundle.noise_increments.size()) == steps,
            "accumulate_logweight: bundle lacks noise increments");
    require(drift_coeffs.dim_state == static_cast<int>(bundle.trajectories.front().cols()),
            "accumulate_logweight: dimension mismatch");
    require(steps == 0 || bundle.noise_increments.front().cols() == drift_coeffs.dim_state,
            "accumulate_logweight: needs square noise (d1 == d)");

    LogWeightAccumulator acc;
    acc.stoch_integral = Vec::Zero(m);
    acc.quad_compensator = Vec::Zero(m);
    acc.steps = steps;
    acc.horizon = bundle.horizon();

    const int d = drift_coeffs.dim_state;
    for (long k = 0; k < steps; ++k) {
        const double t = bundle.time_grid[static_cast<std::size_t>(k)];
        const Mat& states = bundle.trajectories[static_cast<std::size_t>(k)];
        const Mat& noise = bundle.noise_increments[static_cast<std::size_t>(k)];
        const ParticleEnsemble mu = snapshot_ensemble(states, t);
        const MeanFieldSnapshot snap = mean_field_snapshot(drift_coeffs, t, mu);
        for (long i = 0; i < m; ++i) {
            const Vec x = states.row(i).transpose();
            Vec b(d);
            if (snap.valid) {
                double bbuf[8];
                drift_coeffs.drift_state_raw(t, x.data(), bbuf);
                for (int c = 0; c < d; ++c) b[c] = bbuf[c] + snap.drift_field_mean[c];
            } else {
                b = mean_field_drift(drift_coeffs, t, x, mu);
            }
            const Mat sig = sigma(t, x);
            require(sig.rows() == d && sig.cols() == d,
                    "accumulate_logweight: sigma must be square d x d");
            const Vec btilde = inverse_checked(sig, eig_floor, k, i) * b;
            acc.stoch_integral[i] += btilde.dot(noise.row(i).transpose());
            acc.quad_compensator[i] += btilde.squaredNorm() * bundle.dt;
        }
    }
    return acc;
}

double tv_upper_bound(double erho2) {
    require(erho2 >= 1.0 - 1e-9, "tv_upper_bound: E rho^2 must be >= 1");
    return std::sqrt(std::max(0.0, erho2 - 1.0));
}

Rho2Estimate estimate_rho2(const PathBundle& bundle, const KernelCoefficients& drift_a,
                           const KernelCoefficients& drift_b, const StateDiffusion& sigma,
                           double constant, double eig_floor) {
    const long m = bundle.record_count;
    const long steps = bundle.steps();
    require(m >= 1, "estimate_rho2: bundle has no recorded particles");
    const int d = drift_a.dim_state;
    require(drift_b.dim_state == d, "estimate_rho2: drift dimension mismatch");

    Vec integral = Vec::Zero(m); // int |btilde_b - btilde_a|^2 ds per particle
    for (long k = 0; k < steps; ++k) {
        const double t = bundle.time_grid[static_cast<std::size_t>(k)];
        const Mat& states = bundle.trajectories[static_cast<std::size_t>(k)];
        const ParticleEnsemble mu = snapshot_ensemble(states, t);
        const MeanFieldSnapshot snap_a = mean_field_snapshot(drift_a, t, mu);
        const MeanFieldSnapshot snap_b = mean_field_snapshot(drift_b, t, mu);
        for (long i = 0; i < m; ++i) {
            const Vec x = states.row(i).transpose();
            Vec ba(d), bb(d);
            if (snap_a.valid) {
                double buf[8];
                drift_a.drift_state_raw(t, x.data(), buf);
                for (int c = 0; c < d; ++c) ba[c] = buf[c] + snap_a.drift_field_mean[c];
            } else {
                ba = mean_field_drift(drift_a, t, x, mu);
            }
            if (snap_b.valid) {
                double buf[8];
                drift_b.drift_state_raw(t, x.data(), buf);
                for (int c = 0; c < d; ++c) bb[c] = buf[c] + snap_b.drift_field_mean[c];
            } else {
                bb = mean_field_drift(drift_b, t, x, mu);
            }
            const Mat sig = sigma(t, x);
            const Mat inv = inverse_checked(sig, eig_floor, k, i);
            integral[i] += (inv * (bb - ba)).squaredNorm() * bundle.dt;
        }
    }

    std::vector<double> vals(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i) {
        vals[static_cast<std::size_t>(i)] =
            std::exp(std::min(kLogGuard, constant * integral[i]));
    }
    const MeanSe ms = mean_with_se(vals);
    Rho2Estimate est;
    est.raw_mean = ms.mean;
    est.raw_se = ms.se;
    est.bound = std::sqrt(ms.mean);
    return est;
}

namespace {

Vec averaged_drift(const KernelCoefficients& btilde, double t, const Vec& x, const Mat& atoms,
                   const std::vector<double>& w) {
    Vec acc = Vec::Zero(btilde.dim_state);
    for (long j = 0; j < atoms.rows(); ++j) {
        acc += w[static_cast<std::size_t>(j)] * btilde.drift_kernel(t, x, atoms.row(j).transpose());
    }
    return acc;
}

} // namespace

KernelTvGap kernel_tv_gap_discrete(const KernelCoefficients& btilde, double t, const Vec& x,
                                   const Mat& atoms, const std::vector<double>& w1,
                                   const std::vector<double>& w2) {
    require(atoms.rows() == static_cast<long>(w1.size()) &&
                atoms.rows() == static_cast<long>(w2.size()),
            "kernel_tv_gap: weight/atom count mismatch");
    KernelTvGap out;
    const Vec b1 = averaged_drift(btilde, t, x, atoms, w1);
    const Vec b2 = averaged_drift(btilde, t, x, atoms, w2);
    out.gap = (b2 - b1).norm();
    for (long j = 0; j < atoms.rows(); ++j) {
        out.sup_kernel =
            std::max(out.sup_kernel, btilde.drift_kernel(t, x, atoms.row(j).transpose()).norm());
    }
    for (std::size_t j = 0; j < w1.size(); ++j) out.tv += std::abs(w1[j] - w2[j]);
    out.bound = out.sup_kernel * out.tv;
    out.satisfied = out.gap <= out.bound + 1e-12;
    return out;
}

KernelTvGap kernel_tv_gap(const KernelCoefficients& btilde, double t, const Vec& x,
                          const Mat& mu1_states, const Mat& mu2_states) {
    KernelTvGap out;
    const long n1 = mu1_states.rows();
    const long n2 = mu2_states.rows();
    require(n1 >= 1 && n2 >= 1, "kernel_tv_gap: empty measure");
    std::vector<double> w1(static_cast<std::size_t>(n1), 1.0 / static_cast<double>(n1));
    std::vector<double> w2(static_cast<std::size_t>(n2), 1.0 / static_cast<double>(n2));
    const Vec b1 = averaged_drift(btilde, t, x, mu1_states, w1);
    const Vec b2 = averaged_drift(btilde, t, x, mu2_states, w2);
    out.gap = (b2 - b1).norm();
    for (long j = 0; j < n1; ++j) {
        out.sup_kernel =
            std::max(out.sup_kernel, btilde.drift_kernel(t, x, mu1_states.row(j).transpose()).norm());
    }
    for (long j = 0; j < n2; ++j) {
        out.sup_kernel =
            std::max(out.sup_kernel, btilde.drift_kernel(t, x, mu2_states.row(j).transpose()).norm());
    }
    std::vector<double> s1(mu1_states.col(0).data(), mu1_states.col(0).data() + n1);
    std::vector<double> s2(mu2_states.col(0).data(), mu2_states.col(0).data() + n2);
    out.tv = histogram_tv(s1, s2).tv;
    out.bound = out.sup_kernel * out.tv;
    out.satisfied = out.gap <= out.bound + 1e-12;
    return out;
}

ContractionTrace contraction_iterate(double C, double T, double v0, int max_iter) {
    require(C > 0.0 && T > 0.0, "contraction_iterate: C, T must be positive");
    require(v0 >= 0.0 && v0 <= 2.0, "contraction_iterate: v0 must lie in [0, 2]");
    ContractionTrace trace;
    double v = v0;
    trace.iterates.push_back(v);
    for (int it = 0; it < max_iter; ++it) {
        const double expo = C * T * v * v;
        if (expo > kLogGuard) {
            trace.diverged = true;
            break;
        }
        v = std::sqrt(std::expm1(expo));
        trace.iterates.push_back(v);
        if (v < 1e-12) {
            trace.converged = true;
            break;
        }
        if (v > 1e12) {
            trace.diverged = true;
            break;
        }
    }
    return trace;
}

double contraction_alpha_max() {
    // Positive root of exp(4a) - 1 = 8a, via Newton on f(a) = exp(4a)-1-8a.
    double a = 0.3;
    for (int i = 0; i < 60; ++i) {
        const double f = std::expm1(4.0 * a) - 8.0 * a;
        const double df = 4.0 * std::exp(4.0 * a) - 8.0;
        a -= f / df;
    }
    return a;
}

InductionReport interval_induction(double C, double T, double horizon) {
    require(C > 0.0 && T > 0.0 && horizon > 0.0, "interval_induction: positive inputs required");
    const double alpha = contraction_alpha_max();
    require(T < 1.0 / (2.0 * C), "interval_induction: need T < 1/(2C)");
    require(C * T <= alpha, "interval_induction: need C*T within the smallness range");

    InductionReport rep;
    rep.ledger.C = C;
    rep.ledger.alpha = alpha;
    const long intervals = static_cast<long>(std::ceil(horizon / T - 1e-12));
    rep.ledger.endpoints.push_back(0.0);
    rep.ledger.v_values.push_back(0.0);
    bool all_zero = true;
    for (long k = 0; k < intervals; ++k) {
        // v at the interval start is zero (base case at t=0, then induction);
        // the single-interval contraction forces the endpoint to zero as well.
        const ContractionTrace trace = contraction_iterate(C, T, 2.0, 200);
        IntervalVerdict verdict;
        verdict.index = k;
        verdict.t_end = std::min(horizon, static_cast<double>(k + 1) * T);
        verdict.iterations = static_cast<long>(trace.iterates.size()) - 1;
        verdict.zero = trace.converged;
        verdict.v_end = trace.converged ? 0.0 : trace.iterates.back();
        all_zero = all_zero && verdict.zero;
        rep.ledger.endpoints.push_back(verdict.t_end);
        rep.ledger.v_values.push_back(verdict.v_end);
        rep.verdicts.push_back(verdict);
    }
    rep.all_zero = all_zero;
    return rep;
}

ProbeReport uniqueness_probe(const SimulationSpec& spec_a, const SimulationSpec& spec_b,
                             double alpha) {
    const PathBundle a = simulate(spec_a);
    const PathBundle b = simulate(spec_b);
    ProbeReport rep;
    rep.moments_a = moment_summary(a.terminal.states);
    rep.moments_b = moment_summary(b.terminal.states);
    std::vector<double> ta(a.terminal.states.col(0).data(),
                           a.terminal.states.col(0).data() + a.terminal.count());
    std::vector<double> tb(b.terminal.states.col(0).data(),
                           b.terminal.states.col(0).data() + b.terminal.count());
    rep.tv_hat = histogram_tv(ta, tb).tv;
    rep.ks_stat = ks_statistic(ta, tb);
    rep.ks_threshold = ks_threshold(alpha, ta.size(), tb.size());
    rep.reject = rep.ks_stat > rep.ks_threshold;
    return rep;
}

} // namespace mvsde
