#include "moveconv/gp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "moveconv/rng.hpp"

namespace moveconv {

void MovementParams::validate() const {
  if (!(meas_var > 0.0)) throw std::invalid_argument("MovementParams: meas_var must be > 0");
  if (!(proc_var >= 0.0)) throw std::invalid_argument("MovementParams: proc_var must be >= 0");
  if (!(range > 0.0)) throw std::invalid_argument("MovementParams: range must be > 0");
}

MatrixXd process_covariance(const BasisMatrix& H, double proc_var) {
  if (!(proc_var >= 0.0)) throw std::invalid_argument("process_covariance: proc_var < 0");
  MatrixXd cov = proc_var * H.delta * (H.values * H.values.transpose());
  return 0.5 * (cov + cov.transpose());  // enforce exact symmetry
}

namespace {

std::string param_dump(const MovementParams& p) {
  std::ostringstream os;
  os << "meas_var=" << p.meas_var << " proc_var=" << p.proc_var << " range=" << p.range;
  return os.str();
}

// LLT with one jitter retry (1e-10 * mean diagonal), then failure.
Eigen::LLT<MatrixXd> llt_with_jitter(MatrixXd M, const std::string& what) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * M.diagonal().mean();
  M.diagonal().array() += jitter;
  llt.compute(M);
  if (llt.info() == Eigen::Success) return llt;
  throw NumericalError(what + ": covariance factorization failed beyond jitter");
}

}  // namespace

double marginal_loglik(const Track& s, const BasisMatrix& H, const MovementParams& p) {
  p.validate();
  const int n = s.n();
  if (n < 1) throw std::invalid_argument("marginal_loglik: empty track");
  if (H.n() != n) throw std::invalid_argument("marginal_loglik: H rows != observations");

  const double c = p.ratio2();
  const MatrixX2d resid = s.pos.rowwise() - p.origin.transpose();

  double quad = 0.0;
  double logdet_inner = 0.0;
  if (c > 0.0) {
    const int m = H.m();
    const MatrixXd A = std::sqrt(H.delta) * H.values;  // n x m
    MatrixXd M = c * (A.transpose() * A);
    M.diagonal().array() += 1.0;
    Eigen::LLT<MatrixXd> llt;
    try {
      llt = llt_with_jitter(std::move(M), "marginal_loglik");
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " [" + param_dump(p) + "]");
    }
    for (int i = 0; i < m; ++i) logdet_inner += 2.0 * std::log(llt.matrixLLT()(i, i));
    const MatrixXd v = A.transpose() * resid;  // m x 2
    const MatrixXd w = llt.solve(v);
    for (int d = 0; d < 2; ++d)
      quad += resid.col(d).squaredNorm() - c * v.col(d).dot(w.col(d));
  } else {
    quad = resid.squaredNorm();
  }
  quad /= p.meas_var;

  const double n_tot = 2.0 * n;
  const double ll = -0.5 * (n_tot * std::log(2.0 * M_PI) + n_tot * std::log(p.meas_var) +
                            2.0 * logdet_inner + quad);
  if (!std::isfinite(ll))
    throw NumericalError("marginal_loglik: non-finite result [" + param_dump(p) + "]");
  return ll;
}

GpConditional gp_conditional(const Track& s, const BasisMatrix& H_obs,
                             const BasisMatrix& H_pred, const MovementParams& p) {
  p.validate();
  const int n = s.n();
  if (H_obs.n() != n) throw std::invalid_argument("gp_conditional: H_obs rows != observations");
  const int np = H_pred.n();

  const double pv = p.proc_var * H_obs.delta;
  MatrixXd sigma_s = pv * (H_obs.values * H_obs.values.transpose());
  sigma_s.diagonal().array() += p.meas_var;
  Eigen::LLT<MatrixXd> llt;
  try {
    llt = llt_with_jitter(std::move(sigma_s), "gp_conditional");
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " [" + param_dump(p) + "]");
  }

  const MatrixXd cross = pv * (H_pred.values * H_obs.values.transpose());  // np x n
  const MatrixX2d resid = s.pos.rowwise() - p.origin.transpose();

  GpConditional out;
  out.times = H_pred.rows;
  out.mean.resize(np, 2);
  const MatrixXd sol = llt.solve(resid);  // n x 2
  for (int d = 0; d < 2; ++d) out.mean.col(d) = (cross * sol.col(d)).array() + p.origin[d];

  const MatrixXd prior_pp = pv * (H_pred.values * H_pred.values.transpose());
  const MatrixXd reduction = cross * llt.solve(cross.transpose());
  out.cov = prior_pp - reduction;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

TrajectoryDraws predict_trajectory(const Track& s, const BasisMatrix& H_obs,
                                   const BasisMatrix& H_pred, const MovementParams& p,
                                   int n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw std::invalid_argument("predict_trajectory: n_draws < 1");
  const GpConditional cond = gp_conditional(s, H_obs, H_pred, p);
  const int np = static_cast<int>(cond.times.size());

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cond.cov);
  if (eig.info() != Eigen::Success)
    throw NumericalError("predict_trajectory: eigendecomposition failed [" + param_dump(p) + "]");
  VectorXd lam = eig.eigenvalues();
  const double spectral = std::max(lam.cwiseAbs().maxCoeff(), 0.0);
  for (int i = 0; i < np; ++i) {
    if (lam[i] < -1e-10 * std::max(spectral, 1e-300))
      throw NumericalError("predict_trajectory: conditional covariance not PSD beyond tolerance [" +
                           param_dump(p) + "]");
    lam[i] = std::max(lam[i], 0.0);
  }
  const MatrixXd root = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();

  TrajectoryDraws out;
  out.times = cond.times;
  out.draws.resize(n_draws, 2 * np);
  out.model_ids.assign(n_draws, 0);
  Rng rng(seed);
  VectorXd xi(np);
  for (int d = 0; d < n_draws; ++d) {
    for (int coord = 0; coord < 2; ++coord) {
      for (int i = 0; i < np; ++i) xi[i] = rng.gaussian();
      out.draws.row(d).segment(coord * np, np) =
          (cond.mean.col(coord) + root * xi).transpose();
    }
  }
  return out;
}

PathSummary path_summaries(const TrajectoryDraws& draws, const ProjectionMeta& meta) {
  const int D = draws.n_draws();
  const int T = draws.n_times();
  if (D < 1) throw std::invalid_argument("path_summaries: no draws");
  if (!(meta.scale_km > 0.0) || !(meta.time_span_hours > 0.0))
    throw std::invalid_argument("path_summaries: projection metadata incomplete");

  PathSummary out;
  out.length_km.resize(D);
  out.speed_kmh.resize(D);
  const double elapsed_h =
      T > 1 ? (draws.times[T - 1] - draws.times[0]) * meta.time_span_hours : 0.0;
  for (int d = 0; d < D; ++d) {
    double len = 0.0;
    for (int i = 0; i + 1 < T; ++i) {
      const double dx = draws.x(d, i + 1) - draws.x(d, i);
      const double dy = draws.y(d, i + 1) - draws.y(d, i);
      len += std::sqrt(dx * dx + dy * dy);
    }
    out.length_km[d] = len * meta.scale_km;
    out.speed_kmh[d] = elapsed_h > 0.0 ? out.length_km[d] / elapsed_h : 0.0;
  }
  out.length_mean = out.length_km.mean();
  out.speed_mean = out.speed_kmh.mean();
  if (D > 1) {
    out.length_sd = std::sqrt((out.length_km.array() - out.length_mean).square().sum() /
                              static_cast<double>(D - 1));
    out.speed_sd = std::sqrt((out.speed_kmh.array() - out.speed_mean).square().sum() /
                             static_cast<double>(D - 1));
  }
  return out;
}

double credible_circle_radius(const TrajectoryDraws& draws, int time_index, double level) {
  const int D = draws.n_draws();
  if (D < 100) throw std::invalid_argument("credible_circle_radius: need at least 100 draws");
  if (time_index < 0 || time_index >= draws.n_times())
    throw std::invalid_argument("credible_circle_radius: time index out of range");
  if (level <= 0.0) return 0.0;
  if (level > 1.0) throw std::invalid_argument("credible_circle_radius: level > 1");

  double mx = 0.0, my = 0.0;
  for (int d = 0; d < D; ++d) {
    mx += draws.x(d, time_index);
    my += draws.y(d, time_index);
  }
  mx /= D;
  my /= D;
  std::vector<double> dist(D);
  for (int d = 0; d < D; ++d)
    dist[d] = std::hypot(draws.x(d, time_index) - mx, draws.y(d, time_index) - my);
  std::sort(dist.begin(), dist.end());
  const int k = std::min(D, static_cast<int>(std::ceil(level * D)));
  return dist[std::max(k - 1, 0)];
}

}  // namespace moveconv
