#pragma once

#include "mvsde/coeffs.hpp"
#include "mvsde/simulate.hpp"
#include "mvsde/stats.hpp"

#include <vector>

namespace mvsde {

// Per-particle running pieces of the change-of-measure exponent
//   log gamma_i = M_i - Q_i/2,  M = int btilde . dW,  Q = int |btilde|^2 ds,
// with btilde(t,x) = sigma(t,x)^{-1} b[t,x,mu] averaged against the bundle's
// empirical measure. All weight arithmetic stays in log space; log-weights
// are clamped at +-700 before exponentiation.
struct LogWeightAccumulator {
    Vec stoch_integral;   // M per particle
    Vec quad_compensator; // Q per particle, nondecreasing
    long steps = 0;
    double horizon = 0.0;

    Vec log_weights() const;
    Vec weights() const;
};

// Accumulates along every recorded particle of the bundle using the stored
// noise increments (left-endpoint evaluation). Throws DegeneracyError when
// sigma at a visited state has an eigenvalue below eig_floor.
LogWeightAccumulator accumulate_logweight(const PathBundle& bundle,
                                          const KernelCoefficients& drift_coeffs,
                                          const StateDiffusion& sigma,
                                          double eig_floor = 1e-10);

// sqrt(E rho^2 - 1); tiny negative defects are clipped to zero.
double tv_upper_bound(double erho2);

// Monte Carlo estimate of E exp(constant * int |btilde_b - btilde_a|^2 ds)
// along the bundle, and the square-root bound on E rho^2 derived from it.
struct Rho2Estimate {
    double raw_mean = 0.0; // MC mean of the exponential
    double raw_se = 0.0;
    double bound = 0.0;    // sqrt(raw_mean)
};

Rho2Estimate estimate_rho2(const PathBundle& bundle, const KernelCoefficients& drift_a,
                           const KernelCoefficients& drift_b, const StateDiffusion& sigma,
                           double constant = 6.0, double eig_floor = 1e-10);

// Mean-field gap |btilde[t,x,mu2] - btilde[t,x,mu1]| against the bound
// sup_y |btilde(t,x,y)| * TV(mu1, mu2). The discrete overload takes two
// weight vectors on shared atoms and uses the exact L1 distance; the
// empirical overload bins particle clouds first.
struct KernelTvGap {
    double gap = 0.0;
    double sup_kernel = 0.0;
    double tv = 0.0;
    double bound = 0.0;
    bool satisfied = false;
};

KernelTvGap kernel_tv_gap_discrete(const KernelCoefficients& btilde, double t, const Vec& x,
                                   const Mat& atoms, const std::vector<double>& w1,
                                   const std::vector<double>& w2);

KernelTvGap kernel_tv_gap(const KernelCoefficients& btilde, double t, const Vec& x,
                          const Mat& mu1_states, const Mat& mu2_states);

// Iterates v -> sqrt(exp(C T v^2) - 1) from v0. Converged when an iterate
// drops below 1e-12; diverged when the exponent would overflow or the
// iterate exceeds 1e12.
struct ContractionTrace {
    std::vector<double> iterates;
    bool converged = false;
    bool diverged = false;
};

ContractionTrace contraction_iterate(double C, double T, double v0, int max_iter = 200);

// Largest alpha with exp(4 alpha) - 1 <= 8 alpha.
double contraction_alpha_max();

// Interval bookkeeping for the contraction: per-interval endpoint values of
// the path-law total variation v(kT), the constant, and the smallness
// parameter in force.
struct TVLedger {
    std::vector<double> endpoints;
    std::vector<double> v_values;
    double C = 0.0;
    double alpha = 0.0;
};

struct IntervalVerdict {
    long index = 0;
    double t_end = 0.0;
    double v_end = 0.0;
    long iterations = 0;
    bool zero = false;
};

struct InductionReport {
    TVLedger ledger;
    std::vector<IntervalVerdict> verdicts;
    bool all_zero = false;
};

// Applies the single-interval contraction on consecutive intervals of length
// T covering the horizon, assuming v = 0 carries over from each interval to
// the next. Preconditions: T < 1/(2C) and C*T <= alpha_max.
InductionReport interval_induction(double C, double T, double horizon);

// Two independent simulations of the same equation: binned TV and
// two-sample KS on the terminal first coordinate, with the alpha-level
// rejection threshold.
struct ProbeReport {
    double tv_hat = 0.0;
    double ks_stat = 0.0;
    double ks_threshold = 0.0;
    bool reject = false;
    MomentSummary moments_a, moments_b;
};

ProbeReport uniqueness_probe(const SimulationSpec& spec_a, const SimulationSpec& spec_b,
                             double alpha = 0.01);

} // namespace mvsde
