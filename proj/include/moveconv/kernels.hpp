#pragma once

#include "moveconv/core.hpp"
#include "moveconv/warp.hpp"

namespace moveconv {

enum class KernelFamily { BrownianIndicator, Gaussian, GaussianIntegrated };

struct KernelSpec {
  KernelFamily family = KernelFamily::GaussianIntegrated;
  double range = 0.01;  // phi, squared scaled-time units (Gaussian families)

  void validate() const;
};

// Pointwise kernel weight g(t, tau). Brownian indicator: 1 if tau < t, else 0
// (warp ignored). Gaussian: exp(-(w(t)-tau)^2/range), w(t) = t when no warp.
// The integrated family needs a grid; use integrated_basis.
double eval_kernel(const KernelSpec& spec, double t, double tau,
                   const WarpSpec* warp = nullptr);

// h(t, tau) = integral of the Gaussian kernel from tau to the domain end,
// approximated as delta * sum of g(t, node) over grid nodes strictly above
// tau. Summed from the top node down, so it reproduces the discrete product
// with the Brownian indicator exactly. tau at or past the last node gives 0.
double integrated_basis(const KernelSpec& spec, const TimeGrid& grid, double t,
                        double tau, const WarpSpec* warp = nullptr);

// n x m kernel evaluations: rows are evaluation times, columns grid nodes.
struct BasisMatrix {
  VectorXd rows;    // evaluation times t_i
  VectorXd cols;    // integration nodes tau_j
  MatrixXd values;  // n x m
  double delta = 0.0;

  int n() const { return static_cast<int>(values.rows()); }
  int m() const { return static_cast<int>(values.cols()); }
};

// Element (i, j) = eval_kernel or integrated_basis at (t_i, tau_j) per
// family. Deterministic; throws on empty obs_times or non-finite output.
BasisMatrix build_basis(const KernelSpec& spec, const VectorXd& obs_times,
                        const TimeGrid& grid, const WarpSpec* warp = nullptr);

}  // namespace moveconv
