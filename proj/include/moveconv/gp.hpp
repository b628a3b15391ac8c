#pragma once

#include <cstdint>
#include <vector>

#include "moveconv/core.hpp"
#include "moveconv/kernels.hpp"
#include "moveconv/telemetry.hpp"

namespace moveconv {

struct MovementParams {
  double meas_var = 1e-6;          // sigma_s^2, squared scaled-position units
  double proc_var = 1e-3;          // sigma_mu^2
  double range = 0.01;             // phi
  Vector2d origin = Vector2d::Zero();  // mu_0

  double ratio2() const { return proc_var / meas_var; }
  void validate() const;
};

// Sigma_mu = proc_var * H H' * delta, per coordinate. Symmetric PSD.
MatrixXd process_covariance(const BasisMatrix& H, double proc_var);

// log N(s; mu_0 (x) 1, meas_var (I + ratio2 (I2 (x) H)(I2 (x) H)' delta)),
// evaluated per coordinate through the Woodbury identity and the matrix
// determinant lemma with an m x m inner solve. Throws NumericalError (with
// the parameter values) on a non-finite result or irrecoverable
// factorization failure.
double marginal_loglik(const Track& s, const BasisMatrix& H, const MovementParams& p);

// Gaussian conditional of the latent path at prediction times given the
// observations: mean mu_0 + C_ps Sigma_s^{-1} (s - mu_0), covariance
// C_pp - C_ps Sigma_s^{-1} C_sp, with C blocks from process_covariance and
// Sigma_s the marginal. Covariance is shared by the two coordinates.
struct GpConditional {
  VectorXd times;
  MatrixX2d mean;  // n_pred x 2
  MatrixXd cov;    // n_pred x n_pred
};

GpConditional gp_conditional(const Track& s, const BasisMatrix& H_obs,
                             const BasisMatrix& H_pred, const MovementParams& p);

struct TrajectoryDraws {
  VectorXd times;
  MatrixXd draws;              // D x (2 n_pred): x block, then y block
  std::vector<int> model_ids;  // provenance, one per draw

  int n_draws() const { return static_cast<int>(draws.rows()); }
  int n_times() const { return static_cast<int>(times.size()); }
  double x(int d, int i) const { return draws(d, i); }
  double y(int d, int i) const { return draws(d, n_times() + i); }
};

// D joint draws from the conditional; deterministic given seed. The
// conditional covariance is factorized by symmetric eigendecomposition with
// small negative eigenvalues (within 1e-10 of the spectral radius) clamped
// to zero; anything worse throws NumericalError.
TrajectoryDraws predict_trajectory(const Track& s, const BasisMatrix& H_obs,
                                   const BasisMatrix& H_pred, const MovementParams& p,
                                   int n_draws, std::uint64_t seed);

struct PathSummary {
  VectorXd length_km;   // per draw
  VectorXd speed_kmh;   // per draw (0 when the elapsed time is zero)
  double length_mean = 0.0, length_sd = 0.0;
  double speed_mean = 0.0, speed_sd = 0.0;
};

// Consecutive-segment path length and mean speed per draw, converted to km
// and km/hr through the projection metadata.
PathSummary path_summaries(const TrajectoryDraws& draws, const ProjectionMeta& meta);

// Smallest radius containing `level` of the draws around their mean position
// at the given time index. Requires at least 100 draws.
double credible_circle_radius(const TrajectoryDraws& draws, int time_index,
                              double level = 0.95);

struct TrajectoryCsvOptions {
  int precision = 12;
};

}  // namespace moveconv
