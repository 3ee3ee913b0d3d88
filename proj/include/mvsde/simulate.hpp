#pragma once

#include "mvsde/coeffs.hpp"
#include "mvsde/ensemble.hpp"

#include <cstdint>
#include <optional>

namespace mvsde {

struct InitialLaw {
    enum class Type { point, gaussian };
    Type type = Type::point;
    Vec mean;
    Mat cov; // gaussian only; must be SPD or zero
};

InitialLaw point_mass(const Vec& x0);
InitialLaw gaussian_law(const Vec& mean, const Mat& cov);

struct SimulationSpec {
    KernelCoefficients coeffs;
    long particles = 1;
    long steps = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream_offset = 0;
    InitialLaw initial;
    long record = -1; // how many leading particles keep trajectories/noise; -1 = all
    std::optional<double> stopping_radius;
    int workers = 1;
};

// One explicit Euler update over the supplied noise block (N x d1 rows of
// N(0, dt I) increments). The empirical measure is the pre-step ensemble,
// stopped particles included; only alive particles move.
ParticleEnsemble euler_step(const ParticleEnsemble& ensemble, const KernelCoefficients& coeffs,
                            double dt, const Mat& noise);

// Drives euler_step over the uniform grid. Deterministic given the seed, for
// any worker count: particle i always consumes stream (offset + i).
PathBundle simulate(const SimulationSpec& spec);

// Same spec on disjoint streams (offset shifted by `offset_particles`,
// default one full ensemble). Requesting a zero shift is an error.
PathBundle spawn_independent_copy(const SimulationSpec& spec, long offset_particles = -1);

// Recomputes stopping at the given radius from recorded trajectories:
// freezes each recorded particle at its first grid time with running
// sup-norm >= radius and reports the exit fraction.
PathBundle apply_stopping(const PathBundle& bundle, double radius);

struct MomentReport {
    double sup_m2 = 0.0;
    double sup_m4 = 0.0;
    // Fitted slope of log E|X_{t+h}-X_t|^4 against log h over a dyadic
    // ladder; NaN when every increment vanishes.
    double increment_exponent = 0.0;
    std::vector<double> ladder_h;
    std::vector<double> ladder_m4;
    // c2_hat = sup_m2 / (1+m2(0)), c4_hat likewise, c_incr = max m4(h)/h^2.
    double c2_hat = 0.0, c4_hat = 0.0, c_incr = 0.0;
};

MomentReport moment_report(const PathBundle& bundle);

} // namespace mvsde
