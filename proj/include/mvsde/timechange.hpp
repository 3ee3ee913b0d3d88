#pragma once

#include "mvsde/coeffs.hpp"

#include <cstdint>
#include <vector>

namespace mvsde {

// Scalar reduction of a driftless d-dimensional path (d >= 2): per step, the
// radial drift  B = |X|^{-1} (Tr a - (a xhat, xhat))  with a = sigma sigma^T
// and unit radial direction xhat, and the diffusion row xhat^T sigma whose
// norm psi drives the time change.
struct RadialDecomposition {
    std::vector<double> drift; // B_k at the left endpoint of each step
    Mat rows;                  // K x d diffusion rows
    std::vector<double> psi;   // row norms
};

RadialDecomposition radial_decompose(const Mat& path, const StateDiffusion& sigma,
                                     const std::vector<double>& times,
                                     double origin_eps = 1e-8);

// Bookkeeping for reparameterizing by the squared diffusion norm. tau_grid
// accumulates psi^{-2} dt (the slope-bounded reparameterization map, with chi
// its piecewise-linear inverse); clock_grid accumulates psi^{+2} dt, the
// quadratic-variation clock on which the time-changed driving integral is a
// standard Wiener process. Both slopes are certified inside [1/c0, c0].
struct TimeChange {
    std::vector<double> tau_grid;
    std::vector<double> clock_grid;
    double c0 = 1.0;
    double dt = 0.0;

    double tau(double t) const;  // piecewise-linear in model time
    double chi(double u) const;  // inverse of tau
};

TimeChange build_time_change(const std::vector<double>& psi, double dt);

// Scalar increments of the time-changed driving integral: dWhat_k =
// row_k . dW_k, living on the clock grid. Their running quadratic variation
// tracks the clock.
std::vector<double> time_changed_increments(const RadialDecomposition& radial, const Mat& noise);

// Projection discretization of the reflecting SDE
//   dZ = dWhat + C1 du + dphi,  Z >= barrier,
// on the (possibly nonuniform) grid du: z <- max(barrier, z + dw + C1 du),
// with the applied correction recorded as the local-time increment.
struct ReflectedPath {
    std::vector<double> z;          // K+1 values, z[k] >= barrier
    std::vector<double> local_time; // K increments, >= 0
    double barrier = 1.0;
    double drift = 0.0;
};

ReflectedPath reflect_simulate(const std::vector<double>& w_hat_increments,
                               const std::vector<double>& du, double c1, double z0,
                               double barrier = 1.0);
ReflectedPath reflect_simulate(const std::vector<double>& w_hat_increments, double du, double c1,
                               double z0, double barrier = 1.0);

// Fraction of grid points with Z < Xhat - tolerance; both paths must share
// the same driving increments for the comparison to be meaningful.
double comparison_violation_fraction(const std::vector<double>& hat_x, const ReflectedPath& z,
                                     double tolerance = 1e-9);

// Modulus path of a scalar process given its increments, with the discrete
// Tanaka correction at zero recorded as local time.
struct ModulusPath {
    std::vector<double> abs_path;
    std::vector<double> local_time;
};

ModulusPath sign_sde_reduce(double v0, const std::vector<double>& v_increments);

// Closed form of int_0^inf e^{r x^2} f(x) dx for the running-sup density
// f(x) = 2 (2 pi T)^{-1/2} exp(-x^2/(2T)): equals (1-2rT)^{-1/2} when
// 2rT < 1, +infinity otherwise.
double sup_wiener_exp_moment(double r, double T);

// Monte Carlo oracle over discrete one-sided sup of random walks.
double mc_sup_wiener_exp_moment(double r, double T, long paths, long steps, std::uint64_t seed,
                                int workers = 1);

} // namespace mvsde
