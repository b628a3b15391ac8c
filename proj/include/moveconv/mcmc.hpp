#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "moveconv/dist.hpp"
#include "moveconv/gp.hpp"
#include "moveconv/kernels.hpp"
#include "moveconv/rng.hpp"
#include "moveconv/telemetry.hpp"
#include "moveconv/warp.hpp"

namespace moveconv {

struct FitConfig {
  VectorXd phi_grid;  // strictly increasing, all > 0
  // informative measurement-error prior; both argument orders are reachable
  // by setting shape/scale directly
  InvGammaPrior meas_var_prior{2.0, 1.0558e-10};
  double ratio_upper = 20.0;  // sd-scale ratio prior Unif(0, ratio_upper)
  int iterations = 20000;
  int burn_in = 5000;
  int thin = 5;
  std::uint64_t seed = 1;
  int grid_m = 800;             // integration nodes
  double cache_cap_bytes = 4e9;
  bool prior_only = false;      // sample the prior (likelihood switched off)

  static VectorXd default_phi_grid();  // 100 equally spaced in [0.001, 0.02]
  void validate() const;
};

struct PosteriorChains {
  VectorXd meas_var;  // sigma_s^2 draws
  VectorXd ratio;     // sd-scale ratio sigma_{mu}/sigma_s draws
  VectorXd phi;       // range draws (grid values)
  std::vector<int> phi_index;
  VectorXd loglik;
  double accept_rate_ratio = 0.0;
  std::uint64_t seed = 0;
  int model_id = 0;
  std::optional<WarpSpec> warp;
  std::vector<std::string> diagnostics;
  int n_obs = 0;
  int iterations = 0, burn_in = 0, thin = 1;

  int n_draws() const { return static_cast<int>(meas_var.size()); }
};

double chain_mean(const VectorXd& v);
double chain_quantile(const VectorXd& v, double p);

// Per-phi basis Grams reduced to eigenvalue/projector form: with
// A = sqrt(delta) H_phi, each entry stores the eigenvalues lambda of A A'
// (equivalently the nonzero spectrum of delta H'H) and a k x n map P with
// u = P r, so that for any (meas_var, ratio2) the marginal log likelihood is
// O(k) per coordinate:
//   r' (I + c A A')^{-1} r = r'r - c sum u_i^2 / (1 + c lambda_i),
//   log det (I + c A A')   = sum log(1 + c lambda_i).
// Built once per fit and shared read-only afterwards.
class PhiGramCache {
 public:
  struct Entry {
    double phi;
    VectorXd eigvals;  // k, clamped >= 0
    MatrixXd proj;     // k x n
  };

  static PhiGramCache build(const VectorXd& obs_times, const TimeGrid& grid,
                            const VectorXd& phi_grid, const WarpSpec* warp,
                            double cache_cap_bytes);

  int size() const { return static_cast<int>(entries_.size()); }
  const Entry& entry(int i) const { return entries_.at(i); }
  int n_obs() const { return n_; }
  const VectorXd& phis() const { return phis_; }

  // total entries constructed process-wide (cache-reuse instrumentation)
  static long entries_built();

 private:
  std::vector<Entry> entries_;
  VectorXd phis_;
  int n_ = 0;
};

// The cache bound to one track's residuals (origin fixed at the first
// observation unless given): precomputes u = P r per phi and coordinate.
class CachedFit {
 public:
  CachedFit(const PhiGramCache& cache, const Track& s, const Vector2d& origin);

  double loglik(int phi_idx, double meas_var, double ratio2) const;
  // sum over coordinates of r' (I + c A A')^{-1} r
  double quad(int phi_idx, double ratio2) const;
  int n_obs() const { return n_; }
  int n_phis() const { return static_cast<int>(u_.size()); }

 private:
  const PhiGramCache* cache_;
  std::vector<MatrixX2d> u_;  // per phi: k x 2
  double rr_[2] = {0.0, 0.0};
  int n_ = 0;
};

// Full-conditional pieces, shared by the sampler and its distribution tests.
// meas_var | rest is inverse gamma with shape prior.shape + n and scale
// prior.scale + quad/2; phi | rest is the discrete distribution over the
// grid proportional to the marginal likelihood (uniform prior).
double conjugate_meas_var_draw(const CachedFit& fit, int phi_idx, double ratio,
                               const InvGammaPrior& prior, Rng& rng);
VectorXd phi_conditional_probs(const CachedFit& fit, double meas_var, double ratio);

// Metropolis-within-Gibbs for one individual: conjugate inverse-gamma update
// for meas_var, log-scale random walk for the sd ratio (Robbins-Monro
// adapted to 0.44 acceptance during burn-in, frozen after), and a discrete
// full-conditional draw for phi over the grid using the cache. mu_0 is fixed
// at the first observation. Deterministic given config.seed.
PosteriorChains fit_single(const Track& s, const WarpSpec* warp, const FitConfig& cfg);

struct ScoredWarp {
  WarpSpec warp;
  double deviance;
};

// Deviance (-2 log likelihood) of every candidate warp at the baseline
// posterior-mean parameters; returns the top_k lowest, ascending.
std::vector<ScoredWarp> deviance_screen(const Track& s,
                                        const std::vector<WarpSpec>& candidates,
                                        const PosteriorChains& baseline, int top_k,
                                        const FitConfig& cfg);

}  // namespace moveconv
