#pragma once

#include "mvsde/common.hpp"

#include <vector>

namespace mvsde {

// Reduction of a rectangular diffusion sigma (d x d1, d1 >= d) to the square
// symmetric one: a = sigma sigma^T, sqrt_a its symmetric root,
// p = sqrt_a^{-1} sigma, and a synthesized d1-dimensional Wiener process
//   dW0 = p^T dWt + (I - p^T p) dWb
// from a d-dimensional drive Wt plus an independent d1-dimensional Wb.
struct LiftOperators {
    Mat a;          // d x d, SPD
    Mat sqrt_a;     // d x d, symmetric
    Mat p;          // d x d1
    Mat projector;  // d1 x d1 = p^T p, symmetric idempotent
    Mat complement; // d1 x d1 = I - p^T p
    double min_eig_a = 0.0;
};

// Default eigenvalue floor: 1e-8 * trace(a)/d.
double default_eig_floor(const Mat& a);

// Unique SPD square root via symmetric eigendecomposition. Throws
// DegeneracyError when the smallest eigenvalue is below the floor.
Mat sym_sqrt(const Mat& a, double floor_value);

LiftOperators build_lift(const Mat& sigma, double floor_value);

// Per step: dW0_k = p_k^T dWt_k + (I - p_k^T p_k) dWb_k. A single lift may be
// supplied for all steps.
std::vector<Vec> synthesize_w0(const std::vector<LiftOperators>& lifts,
                               const std::vector<Vec>& dw_tilde,
                               const std::vector<Vec>& dw_bar);

struct LevyReport {
    Mat covariation;       // sum of dW0 dW0^T
    double max_offdiag = 0.0;
    double max_diag_reldev = 0.0; // max |cov_ii - T| / T
    long steps = 0;
    double horizon = 0.0;
};

LevyReport levy_check(const std::vector<Vec>& w0_increments, double horizon);

// Max per-step norm of sigma dW0 - sqrt_a dWt, an algebraic identity that
// must vanish to rounding for every nondegenerate sigma.
double reconstruction_check(const std::vector<Mat>& sigma_per_step,
                            const std::vector<LiftOperators>& lifts,
                            const std::vector<Vec>& dw_tilde,
                            const std::vector<Vec>& dw0);

} // namespace mvsde
