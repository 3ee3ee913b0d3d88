#pragma once

#include "mvsde/coeffs.hpp"

#include <map>
#include <string>

namespace mvsde {

enum class Condition {
    linear_growth,
    nondegeneracy,
    nondegeneracy_strong,
    lipschitz_x_local_y,
    lipschitz_sigma_global,
};

std::string to_string(Condition c);

// Deterministic quasi-random sweep over a bounded (t, x, y) box; the same
// plan always visits the same points, so reports are bit-reproducible.
struct SamplePlan {
    double t_max = 1.0;
    double x_radius = 5.0;
    double y_radius = 5.0;
    long count = 4096;
};

struct ConditionWitness {
    double t = 0.0;
    Vec x;
    Vec x2; // second state point for Lipschitz quotients
    Vec y;
};

struct ConditionReport {
    Condition condition = Condition::linear_growth;
    long samples_checked = 0;
    // Worst observed quotient against the claimed bound; passing means
    // worst_ratio <= 1 + tolerance.
    double worst_ratio = 0.0;
    ConditionWitness worst_witness;
    bool passed = false;
    double tolerance = 0.0;
    // Smallest eigenvalue seen (nondegeneracy variants only).
    double min_eigenvalue = 0.0;
};

// |b| + ||sigma||_F <= C (1 + |x|) with C = coeffs.growth_constant.
ConditionReport check_linear_growth(const KernelCoefficients& coeffs, const SamplePlan& plan,
                                    double tolerance = 1e-9);

// Smallest eigenvalue of sigma sigma^T over the box, compared against
// `floor` (strong variant: eigenvalues of the symmetric part of a square
// sigma itself).
ConditionReport check_nondegeneracy(const KernelCoefficients& coeffs, const SamplePlan& plan,
                                    double floor_value, bool strong = false);

// Difference quotients in the state variable:
//   lipschitz_x_local_y:     (|db| + ||dsigma||_F) <= C (1+|y|^2) |x-x'|
//   lipschitz_sigma_global:  ||dsigma||_F          <= C |x-x'|
ConditionReport check_lipschitz(const KernelCoefficients& coeffs, const SamplePlan& plan,
                                Condition variant, double claimed_constant,
                                double tolerance = 1e-9);

// Known verdicts per builtin family (with default parameters), reproduced by
// the checkers; used to validate checker soundness.
std::map<Condition, bool> builtin_condition_verdicts(const std::string& name);

} // namespace mvsde
