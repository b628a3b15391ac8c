#pragma once

#include <cstdint>
#include <vector>

#include "moveconv/gp.hpp"
#include "moveconv/mcmc.hpp"
#include "moveconv/warp.hpp"

namespace moveconv {

struct WarpModel {
  WarpSpec warp;
  PosteriorChains chains;
};

struct WarpMixture {
  std::vector<WarpModel> models;
  VectorXd probs;        // posterior model probabilities, sum to 1
  VectorXd prior_probs;  // defaults to uniform
};

// Second-stage Gibbs over the model index: each sweep draws a stored
// parameter vector from the current model's chain, re-evaluates every
// model's marginal likelihood at that shared parameter triple (the models
// differ only in their fixed warp), and samples the index from the
// normalized likelihood-times-prior weights. Returns index visit
// frequencies. All chains must have the same stored length.
VectorXd posterior_model_probs(const Track& s, const std::vector<WarpModel>& models,
                               const FitConfig& cfg, const VectorXd& prior_probs,
                               int iterations, std::uint64_t seed);

WarpMixture fit_mixture(const Track& s, std::vector<WarpModel> models,
                        const FitConfig& cfg, int stage2_iterations,
                        std::uint64_t seed);

// D draws allocated to models by their probabilities; each draw conditions
// on a parameter vector sampled from that model's chain with that model's
// warped basis. model_ids records the provenance.
TrajectoryDraws model_averaged_predict(const Track& s, const WarpMixture& mix,
                                       const FitConfig& cfg, const VectorXd& pred_times,
                                       int n_draws, std::uint64_t seed);

// Pointwise mixture of the per-model warp derivatives with a weighted
// 2.5/97.5% band; dw/dt = 1 is the compression/expansion reference level.
struct WarpDerivativeCurve {
  VectorXd t;
  MatrixXd per_model;  // T x L
  VectorXd averaged;   // T
  VectorXd lo, hi;     // T, weighted quantiles across models
  double reference = 1.0;
};

WarpDerivativeCurve averaged_warp_derivative(const WarpMixture& mix, const VectorXd& t);

}  // namespace moveconv
