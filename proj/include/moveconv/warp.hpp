#pragma once

#include <vector>

#include "moveconv/core.hpp"

namespace moveconv {

// Base density f(t) driving the time warp: a truncated Gaussian bump on the
// domain, or the exact uniform density (which makes the warp the identity).
enum class WarpDensity { TruncatedGaussian, Uniform };

// One candidate time warp. The warp is the cumulative map
//   w(t) = (magnitude * F(t) + t - t_start) / (magnitude + t_end - t_start),
// with F the cumulative of f; its derivative is
//   dw/dt = (magnitude * f(t) + 1) / (magnitude + t_end - t_start),
// strictly positive, so warped time never folds, and w maps the domain onto
// [0, 1] with the endpoints fixed.
struct WarpSpec {
  WarpDensity density = WarpDensity::TruncatedGaussian;
  double center = 0.5;     // bump location t*
  double scale = 0.04;     // squared-scale denominator of exp(-(t-center)^2/scale)
  double magnitude = 0.0;  // sigma_w^2 >= 0; 0 disables the deformation
  double t_start = 0.0;
  double t_end = 1.0;

  // uniform density, zero magnitude: w(t) = t on (0,1)
  static WarpSpec identity(double t_start = 0.0, double t_end = 1.0);

  void validate() const;

  // f(t); integrates to 1 over (t_start, t_end)
  double density_at(double t) const;
  // F(t) = int_{t_start}^t f, in [0,1]
  double cumulative_at(double t) const;
  double warp(double t) const;
  double warp_derivative(double t) const;
};

// Cartesian product of n_centers equally spaced bump locations strictly
// inside (t_start, t_end) with every (scale, magnitude) pair. Center i sits
// at t_start + i * span / (n_centers + 1), i = 1..n_centers.
std::vector<WarpSpec> enumerate_warp_candidates(int n_centers,
                                                const std::vector<double>& scales,
                                                const std::vector<double>& magnitudes,
                                                double t_start = 0.0,
                                                double t_end = 1.0);

// default search ranges: 10 scales in [0.01, 0.0625], 10 magnitudes in [0.6, 0.8]
std::vector<double> default_warp_scales();
std::vector<double> default_warp_magnitudes();

}  // namespace moveconv
