#pragma once

#include "mvsde/coeffs.hpp"

#include <vector>

namespace mvsde {

// Delta-sequence smoother: one compactly supported C-infinity bump per axis
// group (time, state, measure argument), bandwidths 1/level, tensor-product
// Gauss-Legendre quadrature with `quadrature_nodes` points per axis.
struct Mollifier {
    int level = 1;
    double h_t = 1.0, h_x = 1.0, h_y = 1.0;
    int quadrature_nodes = 8;
};

Mollifier make_mollifier(int level, int quadrature_nodes = 8);

// Quadrature discretization of the bump exp(-1/(1-u^2)) on (-1,1). Weights
// are normalized to sum to one, so smoothing preserves constants exactly.
struct BumpQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

BumpQuadrature bump_quadrature(int nodes);

// Plain Gauss-Legendre rule on (-1,1).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Convolves both kernels with the mollifier's bumps. For negative time
// arguments the drift extends as zero and the diffusion as the rectangular
// identity. Separable kernels stay separable (and keep the fast-path
// evaluators); generic kernels pay the full tensor-product cost.
KernelCoefficients mollify(const KernelCoefficients& base, const Mollifier& m);

} // namespace mvsde
