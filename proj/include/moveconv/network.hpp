#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moveconv/dist.hpp"
#include "moveconv/gp.hpp"
#include "moveconv/kernels.hpp"
#include "moveconv/telemetry.hpp"

namespace moveconv {

// latent positions: J paths, each m_w x 2 on the latent grid
using LatentPaths = std::vector<MatrixX2d>;

struct GroupModelSpec {
  int J = 1;
  TimeGrid obs_grid;     // m nodes shared by all individuals
  TimeGrid latent_grid;  // m_w nodes (m_w <= m); the network varies slowly
  double range = 0.01;   // phi for the inertial smoothing kernel (initial value in fits)
  double sigma_z = 10.0; // latent density: larger pushes individuals apart
  double phi_z = 0.08;   // latent range: larger means a slower-moving network

  InvGammaPrior meas_var_prior{1e-3, 1e-3};
  InvGammaPrior ratio2_prior{1e-3, 1e-3};
  GammaPrior range_prior{2.0, 200.0};
  InvGammaPrior origin_var_prior{1.0, 10.0};  // sigma_0^2
  InvGammaPrior aux_var_prior{52.0, 10.0};    // recorded; not used by the sampler

  void validate() const;
};

struct GroupParams {
  double meas_var = 1e-6;
  double ratio2 = 1.0;  // sigma_mu^2 / sigma_s^2
  double range = 0.01;  // phi
  MatrixX2d origins;    // J x 2 initial locations

  void validate(int J) const;
};

// Independent per-individual, per-coordinate Gaussian-process prior for the
// latent paths with covariance sigma_z^2 Hz Hz' delta_w, Hz the Gaussian
// kernel exp(-(t-tau)^2/phi_z) on the latent grid. Near-singular covariances
// get one jitter retry, then throw.
double latent_z_logprior(const LatentPaths& z, const GroupModelSpec& spec);

// Kernel regression of one latent path onto arbitrary times with the same
// Gaussian kernel used in the prior construction.
MatrixX2d latent_at_times(const MatrixX2d& z_path, const TimeGrid& latent_grid,
                          const VectorXd& times, double phi_z);

// nu_jk(t) = exp(-|z_j(t) - z_k(t)|^2) at the obs-grid nodes: one J x J
// symmetric unit-diagonal matrix per node.
std::vector<MatrixXd> network_weights(const LatentPaths& z, const GroupModelSpec& spec);

// Row-stochastic mixing matrix at one time: row j is nu_j. / sum_k nu_jk.
MatrixXd build_H3(const MatrixXd& nu_t);

// d_j(t) = sum of off-diagonal weights in row j.
double degree(const MatrixXd& nu_t, int j);

struct LatentNetworkState {
  LatentPaths z;
  std::vector<MatrixXd> nu;  // per obs-grid node
  MatrixXd degrees;          // J x m
};

LatentNetworkState make_network_state(const LatentPaths& z, const GroupModelSpec& spec);

// Stacked three-level basis with one row per observation at its exact time.
// Row (j, t), column block k, column c:
//   B = sum_{g : tau_g > tau_c} exp(-(t - tau_g)^2/phi) H3_jk(tau_g) delta,
// i.e. Brownian integration and inertial smoothing per individual, with the
// network mixing applied at the grid nodes. With J = 1 this reduces exactly
// to the single-individual integrated basis.
struct GroupBasis {
  MatrixXd values;                  // N x (J m)
  std::vector<int> row_individual;  // N
  VectorXd row_times;               // N
  double delta = 0.0;
};

GroupBasis build_group_basis(const std::vector<VectorXd>& times_per_individual,
                             const LatentPaths& z, double range,
                             const GroupModelSpec& spec);

// Joint Gaussian log density of all observations under the nested
// convolution: per coordinate, N(mu_0 per individual,
// meas_var (I + ratio2 B B' delta)), evaluated by the Woodbury identity with
// a (J m) x (J m) inner solve.
double group_loglik(const std::vector<Track>& s_all, const LatentPaths& z,
                    const GroupParams& p, const GroupModelSpec& spec);

struct GroupFitOptions {
  int iterations = 4000;
  int burn_in = 1500;
  int thin = 2;
  std::uint64_t seed = 1;
  double z_step = 0.4;      // initial latent proposal sd (adapted in burn-in)
  double ratio_step = 0.6;  // initial log-scale step for ratio2
  double range_step = 0.4;  // initial log-scale step for phi

  void validate() const;
};

struct GroupChains {
  VectorXd meas_var, ratio2, range, origin_var, loglik;
  MatrixXd origins_x, origins_y;        // draws x J
  std::vector<LatentPaths> z;           // per stored draw
  std::vector<MatrixXd> degree_draws;   // per stored draw: J x m
  std::vector<MatrixXd> nu_mean;        // posterior mean weights per grid node
  double accept_z = 0.0, accept_ratio2 = 0.0, accept_range = 0.0;
  std::vector<std::string> diagnostics;
  std::uint64_t seed = 0;

  int n_draws() const { return static_cast<int>(meas_var.size()); }
};

// Metropolis-within-Gibbs over (meas_var, ratio2, phi, mu_0, sigma_0^2, z):
// conjugate draws for meas_var, mu_0 and sigma_0^2; log-scale random walks
// for ratio2 and phi; nodewise 2-D random-walk proposals for the latent
// paths against latent_z_logprior. Deterministic given opt.seed.
GroupChains fit_group(const std::vector<Track>& s_all, const GroupModelSpec& spec,
                      const GroupFitOptions& opt);

// Posterior predictive draws of each individual's path at pred_times,
// cycling over stored chain draws (parameters and latent paths per draw).
std::vector<TrajectoryDraws> group_predict(const std::vector<Track>& s_all,
                                           const GroupModelSpec& spec,
                                           const GroupChains& chains,
                                           const VectorXd& pred_times, int n_draws,
                                           std::uint64_t seed);

struct UncertaintyCurves {
  VectorXd times;
  MatrixXd radius_joint;  // J x T
  MatrixXd radius_indep;  // J x T
};

// Credible-circle radii per individual and time under the joint fit and
// under per-individual fits of the same model with J = 1.
UncertaintyCurves uncertainty_comparison(const std::vector<Track>& s_all,
                                         const GroupModelSpec& spec,
                                         const GroupFitOptions& opt,
                                         const VectorXd& pred_times, int n_draws,
                                         double level = 0.95);

}  // namespace moveconv
