#include "moveconv/bma.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "moveconv/rng.hpp"

namespace moveconv {

namespace {

// Per (model, phi) eigenvalue/projection reductions of the marginal
// likelihood for the shared data, built for the phi indices any chain
// visits. Each entry is O(k) storage, so the whole mixture stays small.
class MixtureLik {
 public:
  MixtureLik(const Track& s, const std::vector<WarpModel>& models, const FitConfig& cfg) {
    const int n = s.n();
    n_ = n;
    const Vector2d origin = s.pos.row(0).transpose();
    const MatrixX2d resid = s.pos.rowwise() - origin.transpose();
    rr_[0] = resid.col(0).squaredNorm();
    rr_[1] = resid.col(1).squaredNorm();

    std::set<int> visited;
    for (const auto& m : models)
      for (int idx : m.chains.phi_index) visited.insert(idx);

    const TimeGrid grid = TimeGrid::regular(0.0, 1.0, cfg.grid_m);
    const int m_nodes = grid.size();
    entries_.resize(models.size());
    for (std::size_t l = 0; l < models.size(); ++l) {
      for (int idx : visited) {
        KernelSpec spec{KernelFamily::GaussianIntegrated, cfg.phi_grid[idx]};
        const BasisMatrix H = build_basis(spec, s.times, grid, &models[l].warp);
        const MatrixXd A = std::sqrt(H.delta) * H.values;
        Entry e;
        if (n <= m_nodes) {
          Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A * A.transpose());
          e.eigvals = eig.eigenvalues().cwiseMax(0.0);
          e.u = e.eigvals.cwiseSqrt().asDiagonal() * (eig.eigenvectors().transpose() * resid);
        } else {
          Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A.transpose() * A);
          e.eigvals = eig.eigenvalues().cwiseMax(0.0);
          e.u = eig.eigenvectors().transpose() * (A.transpose() * resid);
        }
        entries_[l].emplace(idx, std::move(e));
      }
    }
  }

  double loglik(std::size_t model, int phi_idx, double meas_var, double ratio2) const {
    const Entry& e = entries_[model].at(phi_idx);
    double logdet = 0.0, quad = 0.0;
    for (int d = 0; d < 2; ++d) {
      double corr = 0.0;
      for (int i = 0; i < e.eigvals.size(); ++i)
        corr += e.u(i, d) * e.u(i, d) / (1.0 + ratio2 * e.eigvals[i]);
      quad += rr_[d] - ratio2 * corr;
    }
    for (int i = 0; i < e.eigvals.size(); ++i) logdet += std::log1p(ratio2 * e.eigvals[i]);
    const double n_tot = 2.0 * n_;
    return -0.5 * (n_tot * std::log(2.0 * M_PI * meas_var) + 2.0 * logdet + quad / meas_var);
  }

 private:
  struct Entry {
    VectorXd eigvals;
    MatrixX2d u;
  };
  std::vector<std::map<int, Entry>> entries_;
  double rr_[2] = {0.0, 0.0};
  int n_ = 0;
};

VectorXd normalized_prior(const VectorXd& prior, std::size_t L) {
  VectorXd p;
  if (prior.size() == 0) {
    p = VectorXd::Constant(L, 1.0 / static_cast<double>(L));
  } else {
    if (static_cast<std::size_t>(prior.size()) != L)
      throw std::invalid_argument("posterior_model_probs: prior size mismatch");
    if (!(prior.minCoeff() > 0.0))
      throw std::invalid_argument("posterior_model_probs: prior probabilities must be > 0");
    p = prior / prior.sum();
  }
  return p;
}

}  // namespace

VectorXd posterior_model_probs(const Track& s, const std::vector<WarpModel>& models,
                               const FitConfig& cfg, const VectorXd& prior_probs,
                               int iterations, std::uint64_t seed) {
  if (models.empty()) throw std::invalid_argument("posterior_model_probs: no models");
  const std::size_t L = models.size();
  const int len = models.front().chains.n_draws();
  if (len == 0) throw std::invalid_argument("posterior_model_probs: empty chains");
  for (const auto& m : models)
    if (m.chains.n_draws() != len)
      throw std::invalid_argument("posterior_model_probs: chain lengths differ");
  const VectorXd prior = normalized_prior(prior_probs, L);
  if (L == 1) return VectorXd::Ones(1);
  if (iterations < 1) throw std::invalid_argument("posterior_model_probs: iterations < 1");

  const MixtureLik lik(s, models, cfg);
  Rng rng(seed);
  std::size_t cur = 0;
  VectorXd counts = VectorXd::Zero(L);
  std::vector<double> logw(L);
  for (int sweep = 0; sweep < iterations; ++sweep) {
    const int j = std::min(len - 1, static_cast<int>(rng.uniform() * len));
    const auto& ch = models[cur].chains;
    const double mv = ch.meas_var[j];
    const double r = ch.ratio[j];
    const int phi_idx = ch.phi_index[j];
    for (std::size_t k = 0; k < L; ++k)
      logw[k] = lik.loglik(k, phi_idx, mv, r * r) + std::log(prior[k]);
    cur = static_cast<std::size_t>(rng.categorical_log(logw));
    counts[cur] += 1.0;
  }
  return counts / counts.sum();
}

WarpMixture fit_mixture(const Track& s, std::vector<WarpModel> models,
                        const FitConfig& cfg, int stage2_iterations, std::uint64_t seed) {
  WarpMixture mix;
  mix.prior_probs = VectorXd::Constant(models.size(), 1.0 / models.size());
  mix.probs = posterior_model_probs(s, models, cfg, mix.prior_probs, stage2_iterations, seed);
  mix.models = std::move(models);
  return mix;
}

TrajectoryDraws model_averaged_predict(const Track& s, const WarpMixture& mix,
                                       const FitConfig& cfg, const VectorXd& pred_times,
                                       int n_draws, std::uint64_t seed) {
  if (mix.models.empty()) throw std::invalid_argument("model_averaged_predict: no models");
  if (mix.probs.size() != static_cast<Eigen::Index>(mix.models.size()))
    throw std::invalid_argument("model_averaged_predict: probabilities not computed");
  if (n_draws < 1) throw std::invalid_argument("model_averaged_predict: n_draws < 1");

  const TimeGrid grid = TimeGrid::regular(0.0, 1.0, cfg.grid_m);
  Rng rng(seed);
  std::vector<double> w(mix.probs.data(), mix.probs.data() + mix.probs.size());

  TrajectoryDraws out;
  out.times = pred_times;
  const int np = static_cast<int>(pred_times.size());
  out.draws.resize(n_draws, 2 * np);
  out.model_ids.resize(n_draws);

  for (int d = 0; d < n_draws; ++d) {
    const int l = rng.categorical(w);
    const auto& ch = mix.models[l].chains;
    const int j = std::min(ch.n_draws() - 1, static_cast<int>(rng.uniform() * ch.n_draws()));
    MovementParams p;
    p.meas_var = ch.meas_var[j];
    p.proc_var = ch.ratio[j] * ch.ratio[j] * p.meas_var;
    p.range = ch.phi[j];
    p.origin = s.pos.row(0).transpose();
    const KernelSpec spec{KernelFamily::GaussianIntegrated, p.range};
    const BasisMatrix H_obs = build_basis(spec, s.times, grid, &mix.models[l].warp);
    const BasisMatrix H_pred = build_basis(spec, pred_times, grid, &mix.models[l].warp);
    const TrajectoryDraws one =
        predict_trajectory(s, H_obs, H_pred, p, 1, derive_seed(seed, 1000 + d));
    out.draws.row(d) = one.draws.row(0);
    out.model_ids[d] = l;
  }
  return out;
}

WarpDerivativeCurve averaged_warp_derivative(const WarpMixture& mix, const VectorXd& t) {
  if (mix.models.empty()) throw std::invalid_argument("averaged_warp_derivative: no models");
  if (mix.probs.size() != static_cast<Eigen::Index>(mix.models.size()))
    throw std::invalid_argument("averaged_warp_derivative: probabilities not computed");
  const int T = static_cast<int>(t.size());
  const int L = static_cast<int>(mix.models.size());

  WarpDerivativeCurve out;
  out.t = t;
  out.per_model.resize(T, L);
  out.averaged.resize(T);
  out.lo.resize(T);
  out.hi.resize(T);
  for (int i = 0; i < T; ++i) {
    for (int l = 0; l < L; ++l)
      out.per_model(i, l) = mix.models[l].warp.warp_derivative(t[i]);
    out.averaged[i] = out.per_model.row(i) * mix.probs;

    // weighted pointwise quantiles across models
    std::vector<std::pair<double, double>> vw(L);
    for (int l = 0; l < L; ++l) vw[l] = {out.per_model(i, l), mix.probs[l]};
    std::sort(vw.begin(), vw.end());
    auto quantile = [&](double q) {
      double acc = 0.0;
      for (const auto& [v, wgt] : vw) {
        acc += wgt;
        if (acc >= q) return v;
      }
      return vw.back().first;
    };
    out.lo[i] = quantile(0.025);
    out.hi[i] = quantile(0.975);
  }
  return out;
}

}  // namespace moveconv
