#pragma once

#include "mvsde/common.hpp"
#include "mvsde/ensemble.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace mvsde {

enum class BuiltinTag { constant, linear, mean_reverting, step_drift, bounded_measurable };

std::string to_string(BuiltinTag tag);

// Drift/diffusion of the state-only form sigma(t,x), used where the equation
// requires a measure-free diffusion.
using StateDrift = std::function<Vec(double, const Vec&)>;
using StateDiffusion = std::function<Mat(double, const Vec&)>;

// Allocation-free separable evaluators: write dim_state (drift) or
// dim_state*dim_noise row-major (diffusion) doubles into out.
using RawVecFn = std::function<void(double, const double*, double*)>;

// The two-point kernels b(t,x,y) in R^d and sigma(t,x,y) in R^{d x d1},
// together with their measure-averaged forms against an empirical measure.
//
// Kernels that decompose as k(t,x,y) = k_state(t,x) + k_field(t,y) should
// install the separable evaluators: the integrator then averages the field
// part once per step instead of once per particle pair.
struct KernelCoefficients {
    int dim_state = 1;
    int dim_noise = 1;
    std::function<Vec(double, const Vec&, const Vec&)> drift_kernel;
    std::function<Mat(double, const Vec&, const Vec&)> diffusion_kernel;
    double growth_constant = 0.0;
    std::optional<BuiltinTag> builtin_tag;

    // Separable fast path (all four must be set together).
    RawVecFn drift_state_raw, drift_field_raw;
    RawVecFn diffusion_state_raw, diffusion_field_raw;

    bool diffusion_y_free = false;   // sigma(t,x,y) == sigma(t,x)
    bool time_independent = false;   // kernels ignore t (for t >= 0)

    bool separable() const { return static_cast<bool>(drift_state_raw); }

    // sigma(t,x) view; requires diffusion_y_free.
    StateDiffusion state_diffusion() const;
};

// Identity with ones on the main diagonal, the rectangular convention used
// when extending the diffusion to negative times.
Mat rect_identity(int d, int d1);

// (1/N) sum_j kernel(t, x, Y_j) over ensemble states. Dimension mismatches
// raise ConfigError; non-finite kernel output raises NumericError naming the
// offending particle index.
Vec mean_field_drift(const KernelCoefficients& coeffs, double t, const Vec& x,
                     const ParticleEnsemble& ensemble);
Mat mean_field_diffusion(const KernelCoefficients& coeffs, double t, const Vec& x,
                         const ParticleEnsemble& ensemble);

// Per-step snapshot of the field averages of a separable kernel, so repeated
// queries at the same (t, ensemble) cost O(1) per particle.
struct MeanFieldSnapshot {
    double t = 0.0;
    Vec drift_field_mean;       // d
    Mat diffusion_field_mean;   // d x d1
    bool valid = false;
};

MeanFieldSnapshot mean_field_snapshot(const KernelCoefficients& coeffs, double t,
                                      const ParticleEnsemble& ensemble);

// Builtin coefficient families, selected by name + scalar parameters:
//   constant:            b = c, sigma = s * I_rect                params c, s
//   linear:              b = a*x + beta*y, sigma = s * I_rect     params a, beta, s
//   mean_reverting:      b = -theta*(x - y), sigma = s * I_rect   params theta, s
//   step_drift:          b = amp*sign(x), sigma = s * I_rect      params amp, s
//   bounded_measurable:  b = sign(sin(freq*x)) + coupling*tanh(y) + offset,
//                        sigma = (base + amp*sin(x_1)) * I_rect   params freq,
//                        coupling, offset, sigma_base, sigma_amp
// All are componentwise in x/y where vector-valued.
KernelCoefficients make_builtin(const std::string& name,
                                const std::map<std::string, double>& params,
                                int d, int d1);

std::vector<std::string> builtin_names();

// Assembles a kernel from raw separable parts; the public closures mirror
// the raw evaluators.
KernelCoefficients make_separable_kernel(int d, int d1, RawVecFn drift_state,
                                         RawVecFn drift_field, RawVecFn diffusion_state,
                                         RawVecFn diffusion_field, double growth_constant,
                                         bool diffusion_y_free, bool time_independent);

// Same kernel with a constant vector added to the drift.
KernelCoefficients with_drift_offset(const KernelCoefficients& base, const Vec& offset);

} // namespace mvsde
