#include "moveconv/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "moveconv/rng.hpp"

namespace moveconv {

VectorXd FitConfig::default_phi_grid() {
  VectorXd g(100);
  for (int i = 0; i < 100; ++i) g[i] = 0.001 + (0.02 - 0.001) * i / 99.0;
  return g;
}

void FitConfig::validate() const {
  if (phi_grid.size() == 0) throw std::invalid_argument("FitConfig: empty phi grid");
  for (int i = 0; i < phi_grid.size(); ++i) {
    if (!(phi_grid[i] > 0.0)) throw std::invalid_argument("FitConfig: phi grid values must be > 0");
    if (i > 0 && !(phi_grid[i] > phi_grid[i - 1]))
      throw std::invalid_argument("FitConfig: phi grid must be strictly increasing");
  }
  if (!(iterations > burn_in) || burn_in < 0)
    throw std::invalid_argument("FitConfig: need iterations > burn_in >= 0");
  if (thin < 1) throw std::invalid_argument("FitConfig: thin must be >= 1");
  if (!(ratio_upper > 0.0)) throw std::invalid_argument("FitConfig: ratio_upper must be > 0");
  if (grid_m < 2) throw std::invalid_argument("FitConfig: grid_m must be >= 2");
  if (!(meas_var_prior.shape > 0.0) || !(meas_var_prior.scale > 0.0))
    throw std::invalid_argument("FitConfig: invalid meas_var prior");
}

double chain_mean(const VectorXd& v) {
  if (v.size() == 0) throw std::invalid_argument("chain_mean: empty");
  return v.mean();
}

double chain_quantile(const VectorXd& v, double p) {
  if (v.size() == 0) throw std::invalid_argument("chain_quantile: empty");
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  const double idx = std::clamp(p, 0.0, 1.0) * (s.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = idx - lo;
  return s[lo] * (1.0 - frac) + s[hi] * frac;
}

namespace {
std::atomic<long> g_entries_built{0};
}

long PhiGramCache::entries_built() { return g_entries_built.load(); }

PhiGramCache PhiGramCache::build(const VectorXd& obs_times, const TimeGrid& grid,
                                 const VectorXd& phi_grid, const WarpSpec* warp,
                                 double cache_cap_bytes) {
  const int n = static_cast<int>(obs_times.size());
  const int m = grid.size();
  const int k = std::min(n, m);
  const double need =
      static_cast<double>(phi_grid.size()) * (static_cast<double>(k) * n + k) * 8.0;
  if (need > cache_cap_bytes) {
    std::ostringstream os;
    os << "PhiGramCache: estimated " << need / 1048576.0 << " MiB exceeds the cap of "
       << cache_cap_bytes / 1048576.0
       << " MiB; reduce the phi grid, the integration grid, or raise the cache cap";
    throw std::invalid_argument(os.str());
  }

  PhiGramCache cache;
  cache.n_ = n;
  cache.phis_ = phi_grid;
  cache.entries_.reserve(phi_grid.size());
  for (int g = 0; g < phi_grid.size(); ++g) {
    KernelSpec spec{KernelFamily::GaussianIntegrated, phi_grid[g]};
    const BasisMatrix H = build_basis(spec, obs_times, grid, warp);
    const MatrixXd A = std::sqrt(H.delta) * H.values;

    Entry e;
    e.phi = phi_grid[g];
    if (n <= m) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A * A.transpose());
      if (eig.info() != Eigen::Success)
        throw NumericalError("PhiGramCache: eigendecomposition failed");
      e.eigvals = eig.eigenvalues().cwiseMax(0.0);
      e.proj = e.eigvals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A.transpose() * A);
      if (eig.info() != Eigen::Success)
        throw NumericalError("PhiGramCache: eigendecomposition failed");
      e.eigvals = eig.eigenvalues().cwiseMax(0.0);
      e.proj = eig.eigenvectors().transpose() * A.transpose();
    }
    cache.entries_.push_back(std::move(e));
    ++g_entries_built;
  }
  return cache;
}

CachedFit::CachedFit(const PhiGramCache& cache, const Track& s, const Vector2d& origin)
    : cache_(&cache), n_(s.n()) {
  if (s.n() != cache.n_obs())
    throw std::invalid_argument("CachedFit: track size does not match cache");
  const MatrixX2d resid = s.pos.rowwise() - origin.transpose();
  rr_[0] = resid.col(0).squaredNorm();
  rr_[1] = resid.col(1).squaredNorm();
  u_.reserve(cache.size());
  for (int g = 0; g < cache.size(); ++g) u_.push_back(cache.entry(g).proj * resid);
}

double CachedFit::quad(int phi_idx, double ratio2) const {
  const auto& e = cache_->entry(phi_idx);
  const auto& u = u_[phi_idx];
  double total = 0.0;
  for (int d = 0; d < 2; ++d) {
    double corr = 0.0;
    for (int i = 0; i < e.eigvals.size(); ++i)
      corr += u(i, d) * u(i, d) / (1.0 + ratio2 * e.eigvals[i]);
    total += rr_[d] - ratio2 * corr;
  }
  return total;
}

double CachedFit::loglik(int phi_idx, double meas_var, double ratio2) const {
  const auto& e = cache_->entry(phi_idx);
  double logdet = 0.0;
  for (int i = 0; i < e.eigvals.size(); ++i) logdet += std::log1p(ratio2 * e.eigvals[i]);
  const double n_tot = 2.0 * n_;
  return -0.5 * (n_tot * std::log(2.0 * M_PI * meas_var) + 2.0 * logdet +
                 quad(phi_idx, ratio2) / meas_var);
}

double conjugate_meas_var_draw(const CachedFit& fit, int phi_idx, double ratio,
                               const InvGammaPrior& prior, Rng& rng) {
  const double shape = prior.shape + fit.n_obs();
  const double scale = prior.scale + 0.5 * fit.quad(phi_idx, ratio * ratio);
  return rng.inv_gamma(shape, scale);
}

VectorXd phi_conditional_probs(const CachedFit& fit, double meas_var, double ratio) {
  const int G = fit.n_phis();
  VectorXd logw(G);
  for (int g = 0; g < G; ++g) logw[g] = fit.loglik(g, meas_var, ratio * ratio);
  const double lse = log_sum_exp(logw);
  VectorXd probs(G);
  for (int g = 0; g < G; ++g) probs[g] = std::exp(logw[g] - lse);
  return probs / probs.sum();
}

PosteriorChains fit_single(const Track& s, const WarpSpec* warp, const FitConfig& cfg) {
  cfg.validate();
  if (s.n() < 1) throw std::invalid_argument("fit_single: empty track");

  const TimeGrid grid = TimeGrid::regular(0.0, 1.0, cfg.grid_m);
  const PhiGramCache cache =
      PhiGramCache::build(s.times, grid, cfg.phi_grid, warp, cfg.cache_cap_bytes);
  const Vector2d origin = s.pos.row(0).transpose();
  const CachedFit fit(cache, s, origin);

  const int G = cache.size();
  const int n = s.n();
  Rng rng(cfg.seed);

  // deterministic data-driven initial state
  const double pos_var =
      (s.pos.rowwise() - s.pos.colwise().mean()).squaredNorm() / std::max(1, 2 * n - 2);
  double meas_var = std::max(1e-12, 1e-3 * std::max(pos_var, 1e-9));
  double ratio = 0.5 * cfg.ratio_upper;
  int phi_idx = G / 2;
  double log_step = std::log(0.5);

  auto cur_loglik = [&](int g, double mv, double r) {
    return cfg.prior_only ? 0.0 : fit.loglik(g, mv, r * r);
  };
  double ll = cur_loglik(phi_idx, meas_var, ratio);

  const int kept = (cfg.iterations - cfg.burn_in) / cfg.thin;
  PosteriorChains out;
  out.meas_var.resize(kept);
  out.ratio.resize(kept);
  out.phi.resize(kept);
  out.loglik.resize(kept);
  out.phi_index.resize(kept);
  out.seed = cfg.seed;
  out.n_obs = n;
  out.iterations = cfg.iterations;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  if (warp) out.warp = *warp;

  long ratio_accepts = 0, ratio_proposals = 0;
  long window_accepts = 0;
  std::vector<double> phi_weights(G);
  int stored = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    // phi: discrete full conditional over the grid (uniform prior)
    if (G > 1) {
      if (cfg.prior_only) {
        phi_idx = std::min(static_cast<int>(rng.uniform() * G), G - 1);
      } else {
        const VectorXd probs = phi_conditional_probs(fit, meas_var, ratio);
        phi_weights.assign(probs.data(), probs.data() + G);
        phi_idx = rng.categorical(phi_weights);
      }
      ll = cur_loglik(phi_idx, meas_var, ratio);
    }

    // sd ratio: log-scale random walk within (0, ratio_upper)
    {
      ++ratio_proposals;
      const double step = std::exp(log_step);
      const double theta = std::log(ratio);
      const double theta_star = theta + step * rng.gaussian();
      const double ratio_star = std::exp(theta_star);
      double alpha = 0.0;
      if (ratio_star < cfg.ratio_upper) {
        const double ll_star = cur_loglik(phi_idx, meas_var, ratio_star);
        // flat prior on the ratio plus the log-transform Jacobian
        alpha = std::min(1.0, std::exp(ll_star - ll + theta_star - theta));
        if (rng.uniform() < alpha) {
          ratio = ratio_star;
          ll = ll_star;
          ++ratio_accepts;
          ++window_accepts;
        }
      }
      if (it < cfg.burn_in) {
        const double gamma = 1.0 / std::pow(it + 1.0, 0.7);
        log_step += gamma * (alpha - 0.44);
        log_step = std::clamp(log_step, std::log(1e-4), std::log(10.0));
      }
    }

    // meas_var: conjugate inverse gamma
    {
      meas_var = cfg.prior_only
                     ? rng.inv_gamma(cfg.meas_var_prior.shape, cfg.meas_var_prior.scale)
                     : conjugate_meas_var_draw(fit, phi_idx, ratio, cfg.meas_var_prior, rng);
      ll = cur_loglik(phi_idx, meas_var, ratio);
    }

    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 && stored < kept) {
      out.meas_var[stored] = meas_var;
      out.ratio[stored] = ratio;
      out.phi[stored] = cfg.phi_grid[phi_idx];
      out.phi_index[stored] = phi_idx;
      out.loglik[stored] = ll;
      ++stored;
    }
  }

  out.accept_rate_ratio =
      ratio_proposals > 0 ? static_cast<double>(ratio_accepts) / ratio_proposals : 0.0;
  const long post_window = cfg.iterations - cfg.burn_in;
  if (post_window > 100 && window_accepts == 0)
    out.diagnostics.push_back("ratio proposals all rejected after adaptation window");
  return out;
}

std::vector<ScoredWarp> deviance_screen(const Track& s,
                                        const std::vector<WarpSpec>& candidates,
                                        const PosteriorChains& baseline, int top_k,
                                        const FitConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("deviance_screen: no candidates");
  if (baseline.n_draws() == 0) throw std::invalid_argument("deviance_screen: empty baseline fit");

  MovementParams p;
  p.meas_var = chain_mean(baseline.meas_var);
  const double mean_ratio = chain_mean(baseline.ratio);
  p.proc_var = mean_ratio * mean_ratio * p.meas_var;
  p.range = chain_mean(baseline.phi);
  p.origin = s.pos.row(0).transpose();

  const TimeGrid grid = TimeGrid::regular(0.0, 1.0, cfg.grid_m);
  const KernelSpec spec{KernelFamily::GaussianIntegrated, p.range};

  std::vector<ScoredWarp> scored;
  scored.reserve(candidates.size());
  for (const auto& w : candidates) {
    const BasisMatrix H = build_basis(spec, s.times, grid, &w);
    scored.push_back({w, -2.0 * marginal_loglik(s, H, p)});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredWarp& a, const ScoredWarp& b) {
                     return a.deviance < b.deviance;
                   });
  const std::size_t keep = std::min<std::size_t>(
      scored.size(), static_cast<std::size_t>(std::max(top_k, 1)));
  scored.resize(keep);
  return scored;
}

}  // namespace moveconv
