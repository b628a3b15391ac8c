#include "moveconv/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "moveconv/rng.hpp"

namespace moveconv {

void GroupModelSpec::validate() const {
  if (J < 1) throw std::invalid_argument("GroupModelSpec: J must be >= 1");
  obs_grid.validate();
  latent_grid.validate();
  if (latent_grid.size() > obs_grid.size())
    throw std::invalid_argument("GroupModelSpec: latent grid must not exceed the obs grid");
  if (!(sigma_z > 0.0)) throw std::invalid_argument("GroupModelSpec: sigma_z must be > 0");
  if (!(phi_z > 0.0)) throw std::invalid_argument("GroupModelSpec: phi_z must be > 0");
  if (!(range > 0.0)) throw std::invalid_argument("GroupModelSpec: range must be > 0");
}

void GroupParams::validate(int J) const {
  if (!(meas_var > 0.0)) throw std::invalid_argument("GroupParams: meas_var must be > 0");
  if (!(ratio2 >= 0.0)) throw std::invalid_argument("GroupParams: ratio2 must be >= 0");
  if (!(range > 0.0)) throw std::invalid_argument("GroupParams: range must be > 0");
  if (origins.rows() != J) throw std::invalid_argument("GroupParams: origins rows != J");
}

namespace {

std::string group_param_dump(const GroupParams& p) {
  std::ostringstream os;
  os << "meas_var=" << p.meas_var << " ratio2=" << p.ratio2 << " range=" << p.range;
  return os.str();
}

// latent covariance sigma_z^2 Hz Hz' delta_w with one jitter retry
Eigen::LLT<MatrixXd> latent_cov_llt(const GroupModelSpec& spec) {
  const int mw = spec.latent_grid.size();
  MatrixXd Hz(mw, mw);
  for (int i = 0; i < mw; ++i)
    for (int j = 0; j < mw; ++j) {
      const double d = spec.latent_grid.nodes[i] - spec.latent_grid.nodes[j];
      Hz(i, j) = std::exp(-d * d / spec.phi_z);
    }
  MatrixXd cov =
      spec.sigma_z * spec.sigma_z * spec.latent_grid.delta * (Hz * Hz.transpose());
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-10 * cov.diagonal().mean();
    llt.compute(cov);
    if (llt.info() != Eigen::Success)
      throw NumericalError("latent_z_logprior: singular latent covariance beyond jitter");
  }
  return llt;
}

double llt_logdet(const Eigen::LLT<MatrixXd>& llt) {
  double out = 0.0;
  for (int i = 0; i < llt.matrixLLT().rows(); ++i)
    out += 2.0 * std::log(llt.matrixLLT()(i, i));
  return out;
}

}  // namespace

double latent_z_logprior(const LatentPaths& z, const GroupModelSpec& spec) {
  spec.validate();
  if (static_cast<int>(z.size()) != spec.J)
    throw std::invalid_argument("latent_z_logprior: z size != J");
  const int mw = spec.latent_grid.size();
  const Eigen::LLT<MatrixXd> llt = latent_cov_llt(spec);
  const double logdet = llt_logdet(llt);

  double out = 0.0;
  for (const auto& path : z) {
    if (path.rows() != mw) throw std::invalid_argument("latent_z_logprior: path rows != m_w");
    const MatrixXd sol = llt.solve(path);
    for (int d = 0; d < 2; ++d) {
      const double quad = path.col(d).dot(sol.col(d));
      out += -0.5 * (mw * std::log(2.0 * M_PI) + logdet + quad);
    }
  }
  return out;
}

MatrixX2d latent_at_times(const MatrixX2d& z_path, const TimeGrid& latent_grid,
                          const VectorXd& times, double phi_z) {
  const int mw = latent_grid.size();
  if (z_path.rows() != mw)
    throw std::invalid_argument("latent_at_times: path rows != latent grid size");
  MatrixX2d out(times.size(), 2);
  for (int i = 0; i < times.size(); ++i) {
    double wsum = 0.0;
    Eigen::RowVector2d acc = Eigen::RowVector2d::Zero();
    for (int w = 0; w < mw; ++w) {
      const double d = times[i] - latent_grid.nodes[w];
      const double wt = std::exp(-d * d / phi_z);
      wsum += wt;
      acc += wt * z_path.row(w);
    }
    out.row(i) = acc / wsum;
  }
  return out;
}

std::vector<MatrixXd> network_weights(const LatentPaths& z, const GroupModelSpec& spec) {
  spec.validate();
  const int J = spec.J;
  if (static_cast<int>(z.size()) != J)
    throw std::invalid_argument("network_weights: z size != J");
  const int m = spec.obs_grid.size();

  std::vector<MatrixX2d> z_at(m > 0 ? J : 0);
  for (int j = 0; j < J; ++j)
    z_at[j] = latent_at_times(z[j], spec.latent_grid, spec.obs_grid.nodes, spec.phi_z);

  std::vector<MatrixXd> nu(m, MatrixXd::Ones(J, J));
  for (int g = 0; g < m; ++g) {
    for (int j = 0; j < J; ++j)
      for (int k = j + 1; k < J; ++k) {
        const double dx = z_at[j](g, 0) - z_at[k](g, 0);
        const double dy = z_at[j](g, 1) - z_at[k](g, 1);
        const double w = std::exp(-(dx * dx + dy * dy));
        nu[g](j, k) = w;
        nu[g](k, j) = w;
      }
  }
  return nu;
}

MatrixXd build_H3(const MatrixXd& nu_t) {
  const int J = static_cast<int>(nu_t.rows());
  if (nu_t.cols() != J) throw std::invalid_argument("build_H3: nu must be square");
  MatrixXd h3(J, J);
  for (int j = 0; j < J; ++j) {
    const double rowsum = nu_t.row(j).sum();
    h3.row(j) = nu_t.row(j) / rowsum;
  }
  return h3;
}

double degree(const MatrixXd& nu_t, int j) {
  if (j < 0 || j >= nu_t.rows()) throw std::invalid_argument("degree: index out of range");
  return nu_t.row(j).sum() - nu_t(j, j);
}

LatentNetworkState make_network_state(const LatentPaths& z, const GroupModelSpec& spec) {
  LatentNetworkState st;
  st.z = z;
  st.nu = network_weights(z, spec);
  const int m = spec.obs_grid.size();
  st.degrees.resize(spec.J, m);
  for (int g = 0; g < m; ++g)
    for (int j = 0; j < spec.J; ++j) st.degrees(j, g) = degree(st.nu[g], j);
  return st;
}

GroupBasis build_group_basis(const std::vector<VectorXd>& times_per_individual,
                             const LatentPaths& z, double range,
                             const GroupModelSpec& spec) {
  spec.validate();
  const int J = spec.J;
  if (static_cast<int>(times_per_individual.size()) != J)
    throw std::invalid_argument("build_group_basis: times size != J");
  if (!(range > 0.0)) throw std::invalid_argument("build_group_basis: range must be > 0");
  const int m = spec.obs_grid.size();
  const VectorXd& nodes = spec.obs_grid.nodes;
  const double delta = spec.obs_grid.delta;

  const std::vector<MatrixXd> nu = network_weights(z, spec);
  std::vector<MatrixXd> h3(m);
  for (int g = 0; g < m; ++g) h3[g] = build_H3(nu[g]);

  int N = 0;
  for (const auto& t : times_per_individual) N += static_cast<int>(t.size());

  GroupBasis out;
  out.delta = delta;
  out.values.resize(N, J * m);
  out.row_individual.resize(N);
  out.row_times.resize(N);

  VectorXd g_row(m);
  int row = 0;
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < times_per_individual[j].size(); ++i, ++row) {
      const double t = times_per_individual[j][i];
      out.row_individual[row] = j;
      out.row_times[row] = t;
      for (int g = 0; g < m; ++g) {
        const double d = t - nodes[g];
        g_row[g] = std::exp(-d * d / range);
      }
      // per source individual k: suffix sums of g(t, tau_g) H3_jk(tau_g),
      // accumulated top-down like the single-individual integrated basis
      for (int k = 0; k < J; ++k) {
        double acc = 0.0;
        out.values(row, k * m + m - 1) = 0.0;
        for (int g = m - 1; g >= 1; --g) {
          acc += g_row[g] * h3[g](j, k);
          out.values(row, k * m + g - 1) = acc * delta;
        }
      }
    }
  }
  if (!out.values.allFinite())
    throw NumericalError("build_group_basis: non-finite basis value");
  return out;
}

namespace {

struct StackedObs {
  MatrixX2d pos;                    // N x 2, individual-major
  std::vector<VectorXd> times;      // per individual
  std::vector<int> row_individual;  // N
  MatrixXd X;                       // N x J indicator
  int N = 0;
};

StackedObs stack_tracks(const std::vector<Track>& s_all, int J) {
  if (static_cast<int>(s_all.size()) != J)
    throw std::invalid_argument("group model: track count != J");
  StackedObs st;
  st.times.resize(J);
  for (int j = 0; j < J; ++j) {
    if (s_all[j].n() < 1) throw std::invalid_argument("group model: empty track");
    st.times[j] = s_all[j].times;
    st.N += s_all[j].n();
  }
  st.pos.resize(st.N, 2);
  st.X = MatrixXd::Zero(st.N, J);
  st.row_individual.resize(st.N);
  int row = 0;
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < s_all[j].n(); ++i, ++row) {
      st.pos.row(row) = s_all[j].pos.row(i);
      st.X(row, j) = 1.0;
      st.row_individual[row] = j;
    }
  return st;
}

}  // namespace

double group_loglik(const std::vector<Track>& s_all, const LatentPaths& z,
                    const GroupParams& p, const GroupModelSpec& spec) {
  spec.validate();
  p.validate(spec.J);
  const StackedObs st = stack_tracks(s_all, spec.J);
  const GroupBasis basis = build_group_basis(st.times, z, p.range, spec);

  MatrixX2d resid = st.pos;
  for (int row = 0; row < st.N; ++row)
    resid.row(row) -= p.origins.row(st.row_individual[row]);

  const double c = p.ratio2;
  double quad = 0.0, logdet_inner = 0.0;
  if (c > 0.0) {
    const MatrixXd A = std::sqrt(basis.delta) * basis.values;  // N x Jm
    MatrixXd M = c * (A.transpose() * A);
    M.diagonal().array() += 1.0;
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) {
      M.diagonal().array() += 1e-10 * M.diagonal().mean();
      llt.compute(M);
      if (llt.info() != Eigen::Success)
        throw NumericalError("group_loglik: inner factorization failed [" +
                             group_param_dump(p) + "]");
    }
    logdet_inner = llt_logdet(llt);
    const MatrixXd v = A.transpose() * resid;
    const MatrixXd w = llt.solve(v);
    for (int d = 0; d < 2; ++d)
      quad += resid.col(d).squaredNorm() - c * v.col(d).dot(w.col(d));
  } else {
    quad = resid.squaredNorm();
  }
  quad /= p.meas_var;

  const double n_tot = 2.0 * st.N;
  const double ll = -0.5 * (n_tot * std::log(2.0 * M_PI) + n_tot * std::log(p.meas_var) +
                            2.0 * logdet_inner + quad);
  if (!std::isfinite(ll))
    throw NumericalError("group_loglik: non-finite result [" + group_param_dump(p) + "]");
  return ll;
}

namespace {

// N-side state for the sampler: AAt = delta B B' changes with (z, range);
// the factorization of C = I + ratio2 AAt changes with ratio2 as well.
// Residual quadratics are expressed through X so the conjugate mu_0 draw and
// the Metropolis likelihoods share the same solves.
struct GroupStructure {
  std::vector<MatrixXd> nu;  // per grid node
  MatrixXd AAt;              // N x N
};

GroupStructure make_structure(const StackedObs& st, const LatentPaths& z, double range,
                              const GroupModelSpec& spec) {
  GroupStructure s;
  s.nu = network_weights(z, spec);
  const GroupBasis basis = build_group_basis(st.times, z, range, spec);
  s.AAt = basis.delta * (basis.values * basis.values.transpose());
  s.AAt = 0.5 * (s.AAt + s.AAt.transpose()).eval();
  return s;
}

struct GroupFactor {
  double logdetC = 0.0;
  MatrixXd XtCX;   // J x J
  MatrixX2d XtCs;  // J x 2
  Vector2d sCs;

  void compute(const MatrixXd& AAt, double ratio2, const StackedObs& st) {
    MatrixXd C = ratio2 * AAt;
    C.diagonal().array() += 1.0;
    Eigen::LLT<MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
      C.diagonal().array() += 1e-10 * C.diagonal().mean();
      llt.compute(C);
      if (llt.info() != Eigen::Success)
        throw NumericalError("fit_group: covariance factorization failed");
    }
    logdetC = llt_logdet(llt);
    const MatrixXd CX = llt.solve(st.X);
    const MatrixXd Cs = llt.solve(st.pos);
    XtCX = st.X.transpose() * CX;
    XtCs = st.X.transpose() * Cs;
    for (int d = 0; d < 2; ++d) sCs[d] = st.pos.col(d).dot(Cs.col(d));
  }

  // sum over coordinates of (s - X mu0)' C^{-1} (s - X mu0)
  double quad(const MatrixX2d& origins) const {
    double out = 0.0;
    for (int d = 0; d < 2; ++d)
      out += sCs[d] - 2.0 * origins.col(d).dot(XtCs.col(d)) +
             origins.col(d).dot(XtCX * origins.col(d));
    return out;
  }

  double loglik(double meas_var, const MatrixX2d& origins, int N) const {
    const double n_tot = 2.0 * N;
    return -0.5 * (n_tot * std::log(2.0 * M_PI * meas_var) + 2.0 * logdetC +
                   quad(origins) / meas_var);
  }
};

}  // namespace

void GroupFitOptions::validate() const {
  if (!(iterations > burn_in) || burn_in < 0)
    throw std::invalid_argument("GroupFitOptions: need iterations > burn_in >= 0");
  if (thin < 1) throw std::invalid_argument("GroupFitOptions: thin must be >= 1");
  if (!(z_step > 0.0) || !(ratio_step > 0.0) || !(range_step > 0.0))
    throw std::invalid_argument("GroupFitOptions: steps must be > 0");
}

GroupChains fit_group(const std::vector<Track>& s_all, const GroupModelSpec& spec,
                      const GroupFitOptions& opt) {
  spec.validate();
  opt.validate();
  const int J = spec.J;
  const StackedObs st = stack_tracks(s_all, J);
  const int mw = spec.latent_grid.size();
  const int m = spec.obs_grid.size();

  const Eigen::LLT<MatrixXd> z_prior_llt = latent_cov_llt(spec);
  auto z_prior_quad = [&](const MatrixX2d& path) {
    const MatrixXd sol = z_prior_llt.solve(path);
    return path.col(0).dot(sol.col(0)) + path.col(1).dot(sol.col(1));
  };

  Rng rng(opt.seed);

  // deterministic initial state
  double meas_var = std::max(
      1e-12, 1e-3 * (st.pos.rowwise() - st.pos.colwise().mean()).squaredNorm() /
                 std::max(1, 2 * st.N - 2));
  double range = spec.range;
  double origin_var = 1.0;
  MatrixX2d origins(J, 2);
  for (int j = 0; j < J; ++j) origins.row(j) = s_all[j].pos.row(0);
  // start the individuals disconnected: each track first gets its own fit,
  // and pairs are pulled together only where the likelihood demands it
  LatentPaths z(J, MatrixX2d::Zero(mw, 2));
  for (int j = 0; j < J; ++j) z[j].col(0).setConstant(3.0 * j);
  std::vector<double> zq(J);
  for (int j = 0; j < J; ++j) zq[j] = z_prior_quad(z[j]);

  GroupStructure structure = make_structure(st, z, range, spec);
  // moment-matched start: meas_var (1 + ratio2 mean diag(AAt)) ~ position variance
  const double pos_var = (st.pos.rowwise() - st.pos.colwise().mean()).squaredNorm() /
                         std::max(1, 2 * st.N - 2);
  const double mean_diag = std::max(structure.AAt.diagonal().mean(), 1e-12);
  double ratio2 = std::max(1.0, (pos_var / meas_var - 1.0) / mean_diag);
  GroupFactor factor;
  factor.compute(structure.AAt, ratio2, st);
  double ll = factor.loglik(meas_var, origins, st.N);
  if (!std::isfinite(ll))
    throw NumericalError("fit_group: non-finite initial likelihood");

  double log_z_step = std::log(opt.z_step);
  double log_path_step = std::log(2.0 * opt.z_step);
  double log_r_step = std::log(opt.ratio_step);
  double log_s_step = std::log(opt.ratio_step);
  double log_p_step = std::log(opt.range_step);

  const int kept = (opt.iterations - opt.burn_in) / opt.thin;
  GroupChains out;
  out.meas_var.resize(kept);
  out.ratio2.resize(kept);
  out.range.resize(kept);
  out.origin_var.resize(kept);
  out.loglik.resize(kept);
  out.origins_x.resize(kept, J);
  out.origins_y.resize(kept, J);
  out.z.reserve(kept);
  out.degree_draws.reserve(kept);
  out.seed = opt.seed;
  std::vector<MatrixXd> nu_sum(m, MatrixXd::Zero(J, J));

  long z_prop = 0, z_acc = 0, r_prop = 0, r_acc = 0, p_prop = 0, p_acc = 0;
  long s_prop = 0, s_acc = 0;
  int stored = 0;

  for (int it = 0; it < opt.iterations; ++it) {
    // latent paths: nodewise 2-D random walks
    double z_alpha_sum = 0.0;
    for (int j = 0; j < J; ++j) {
      for (int w = 0; w < mw; ++w) {
        ++z_prop;
        const double step = std::exp(log_z_step);
        LatentPaths z_cand = z;
        z_cand[j](w, 0) += step * rng.gaussian();
        z_cand[j](w, 1) += step * rng.gaussian();
        const double zq_cand = z_prior_quad(z_cand[j]);
        GroupStructure cand = make_structure(st, z_cand, range, spec);
        GroupFactor cand_factor;
        cand_factor.compute(cand.AAt, ratio2, st);
        const double cand_ll = cand_factor.loglik(meas_var, origins, st.N);
        if (!std::isfinite(cand_ll))
          throw NumericalError("fit_group: non-finite likelihood at z proposal [" +
                               std::to_string(j) + "," + std::to_string(w) + "]");
        const double log_alpha = cand_ll - ll - 0.5 * (zq_cand - zq[j]);
        const double alpha = std::min(1.0, std::exp(log_alpha));
        z_alpha_sum += alpha;
        if (rng.uniform() < alpha) {
          z = std::move(z_cand);
          zq[j] = zq_cand;
          structure = std::move(cand);
          factor = cand_factor;
          ll = cand_ll;
          ++z_acc;
        }
      }
    }
    if (it < opt.burn_in) {
      const double gamma = 1.0 / std::pow(it + 1.0, 0.7);
      log_z_step += gamma * (z_alpha_sum / (J * mw) - 0.35);
      log_z_step = std::clamp(log_z_step, std::log(1e-3), std::log(10.0));
    }

    // whole-path shifts: one move can merge or separate a pair, which
    // nodewise proposals only reach through a long funnel
    for (int j = 0; j < J; ++j) {
      ++z_prop;
      const double step = std::exp(log_path_step);
      LatentPaths z_cand = z;
      const double dx = step * rng.gaussian();
      const double dy = step * rng.gaussian();
      z_cand[j].col(0).array() += dx;
      z_cand[j].col(1).array() += dy;
      const double zq_cand = z_prior_quad(z_cand[j]);
      GroupStructure cand = make_structure(st, z_cand, range, spec);
      GroupFactor cand_factor;
      cand_factor.compute(cand.AAt, ratio2, st);
      const double cand_ll = cand_factor.loglik(meas_var, origins, st.N);
      if (!std::isfinite(cand_ll))
        throw NumericalError("fit_group: non-finite likelihood at path proposal");
      const double alpha =
          std::min(1.0, std::exp(cand_ll - ll - 0.5 * (zq_cand - zq[j])));
      if (rng.uniform() < alpha) {
        z = std::move(z_cand);
        zq[j] = zq_cand;
        structure = std::move(cand);
        factor = cand_factor;
        ll = cand_ll;
        ++z_acc;
      }
      if (it < opt.burn_in) {
        const double gamma = 1.0 / std::pow(it + 1.0, 0.7);
        log_path_step += gamma * (alpha - 0.3);
        log_path_step = std::clamp(log_path_step, std::log(1e-3), std::log(10.0));
      }
    }

    // ratio2: log-scale random walk
    {
      ++r_prop;
      const double step = std::exp(log_r_step);
      const double cand_r2 = ratio2 * std::exp(step * rng.gaussian());
      GroupFactor cand_factor;
      cand_factor.compute(structure.AAt, cand_r2, st);
      const double cand_ll = cand_factor.loglik(meas_var, origins, st.N);
      const double log_alpha = cand_ll - ll + spec.ratio2_prior.logpdf(cand_r2) -
                               spec.ratio2_prior.logpdf(ratio2) + std::log(cand_r2) -
                               std::log(ratio2);
      const double alpha = std::min(1.0, std::exp(log_alpha));
      if (rng.uniform() < alpha) {
        ratio2 = cand_r2;
        factor = cand_factor;
        ll = cand_ll;
        ++r_acc;
      }
      if (it < opt.burn_in) {
        const double gamma = 1.0 / std::pow(it + 1.0, 0.7);
        log_r_step += gamma * (alpha - 0.44);
        log_r_step = std::clamp(log_r_step, std::log(1e-3), std::log(10.0));
      }
    }

    // noise-split move: scale meas_var by f and ratio2 by 1/f, keeping the
    // process variance fixed; this walks along the ridge the single-variable
    // moves cannot cross (the +u/-u log-space Jacobians cancel)
    {
      ++s_prop;
      const double step = std::exp(log_s_step);
      const double f = std::exp(step * rng.gaussian());
      const double mv_c = meas_var * f;
      const double r2_c = ratio2 / f;
      GroupFactor cand_factor;
      cand_factor.compute(structure.AAt, r2_c, st);
      const double cand_ll = cand_factor.loglik(mv_c, origins, st.N);
      const double log_alpha = cand_ll - ll + spec.meas_var_prior.logpdf(mv_c) -
                               spec.meas_var_prior.logpdf(meas_var) +
                               spec.ratio2_prior.logpdf(r2_c) -
                               spec.ratio2_prior.logpdf(ratio2);
      const double alpha = std::min(1.0, std::exp(log_alpha));
      if (rng.uniform() < alpha) {
        meas_var = mv_c;
        ratio2 = r2_c;
        factor = cand_factor;
        ll = cand_ll;
        ++s_acc;
      }
      if (it < opt.burn_in) {
        const double gamma = 1.0 / std::pow(it + 1.0, 0.7);
        log_s_step += gamma * (alpha - 0.44);
        log_s_step = std::clamp(log_s_step, std::log(1e-3), std::log(10.0));
      }
    }

    // range: log-scale random walk (structure rebuild)
    {
      ++p_prop;
      const double step = std::exp(log_p_step);
      const double cand_range = range * std::exp(step * rng.gaussian());
      GroupStructure cand = make_structure(st, z, cand_range, spec);
      GroupFactor cand_factor;
      cand_factor.compute(cand.AAt, ratio2, st);
      const double cand_ll = cand_factor.loglik(meas_var, origins, st.N);
      const double log_alpha = cand_ll - ll + spec.range_prior.logpdf(cand_range) -
                               spec.range_prior.logpdf(range) + std::log(cand_range) -
                               std::log(range);
      const double alpha = std::min(1.0, std::exp(log_alpha));
      if (rng.uniform() < alpha) {
        range = cand_range;
        structure = std::move(cand);
        factor = cand_factor;
        ll = cand_ll;
        ++p_acc;
      }
      if (it < opt.burn_in) {
        const double gamma = 1.0 / std::pow(it + 1.0, 0.7);
        log_p_step += gamma * (alpha - 0.44);
        log_p_step = std::clamp(log_p_step, std::log(1e-3), std::log(10.0));
      }
    }

    // meas_var: conjugate inverse gamma
    {
      const double shape = spec.meas_var_prior.shape + st.N;
      const double scale = spec.meas_var_prior.scale + 0.5 * factor.quad(origins);
      meas_var = rng.inv_gamma(shape, scale);
    }

    // mu_0: conjugate normal per coordinate
    {
      MatrixXd P = factor.XtCX / meas_var;
      P.diagonal().array() += 1.0 / origin_var;
      const Eigen::LLT<MatrixXd> lltP(P);
      if (lltP.info() != Eigen::Success)
        throw NumericalError("fit_group: origin precision factorization failed");
      for (int d = 0; d < 2; ++d) {
        const VectorXd mean = lltP.solve(factor.XtCs.col(d) / meas_var);
        VectorXd eps(J);
        for (int j = 0; j < J; ++j) eps[j] = rng.gaussian();
        origins.col(d) = mean + lltP.matrixU().solve(eps);
      }
    }

    // sigma_0^2: conjugate inverse gamma
    {
      const double shape = spec.origin_var_prior.shape + J;
      const double scale = spec.origin_var_prior.scale + 0.5 * origins.squaredNorm();
      origin_var = rng.inv_gamma(shape, scale);
    }

    ll = factor.loglik(meas_var, origins, st.N);

    if (it >= opt.burn_in && (it - opt.burn_in) % opt.thin == 0 && stored < kept) {
      out.meas_var[stored] = meas_var;
      out.ratio2[stored] = ratio2;
      out.range[stored] = range;
      out.origin_var[stored] = origin_var;
      out.loglik[stored] = ll;
      out.origins_x.row(stored) = origins.col(0).transpose();
      out.origins_y.row(stored) = origins.col(1).transpose();
      out.z.push_back(z);
      MatrixXd deg(J, m);
      for (int g = 0; g < m; ++g) {
        nu_sum[g] += structure.nu[g];
        for (int j = 0; j < J; ++j) deg(j, g) = degree(structure.nu[g], j);
      }
      out.degree_draws.push_back(std::move(deg));
      ++stored;
    }
  }

  out.accept_z = z_prop > 0 ? static_cast<double>(z_acc) / z_prop : 0.0;
  out.accept_ratio2 =
      r_prop + s_prop > 0 ? static_cast<double>(r_acc + s_acc) / (r_prop + s_prop) : 0.0;
  out.accept_range = p_prop > 0 ? static_cast<double>(p_acc) / p_prop : 0.0;
  if (out.accept_z < 0.05)
    out.diagnostics.push_back("latent-path acceptance below 5%; chain may be stuck");
  if (out.accept_ratio2 < 0.05 || out.accept_range < 0.05)
    out.diagnostics.push_back("parameter acceptance below 5%; check proposal scales");
  out.nu_mean.resize(m);
  for (int g = 0; g < m; ++g) out.nu_mean[g] = nu_sum[g] / std::max(1, stored);
  return out;
}

std::vector<TrajectoryDraws> group_predict(const std::vector<Track>& s_all,
                                           const GroupModelSpec& spec,
                                           const GroupChains& chains,
                                           const VectorXd& pred_times, int n_draws,
                                           std::uint64_t seed) {
  spec.validate();
  if (chains.n_draws() == 0) throw std::invalid_argument("group_predict: empty chains");
  if (n_draws < 1) throw std::invalid_argument("group_predict: n_draws < 1");
  const int J = spec.J;
  const StackedObs st = stack_tracks(s_all, J);
  const int np = static_cast<int>(pred_times.size());

  std::vector<TrajectoryDraws> out(J);
  for (int j = 0; j < J; ++j) {
    out[j].times = pred_times;
    out[j].draws.resize(n_draws, 2 * np);
    out[j].model_ids.assign(n_draws, 0);
  }

  Rng rng(seed);
  std::vector<VectorXd> pred_per_individual(J, pred_times);

  for (int d = 0; d < n_draws; ++d) {
    const int g = d % chains.n_draws();
    const double meas_var = chains.meas_var[g];
    const double proc_var = chains.ratio2[g] * meas_var;
    const double range = chains.range[g];
    MatrixX2d origins(J, 2);
    origins.col(0) = chains.origins_x.row(g).transpose();
    origins.col(1) = chains.origins_y.row(g).transpose();
    const LatentPaths& z = chains.z[g];

    const GroupBasis B_obs = build_group_basis(st.times, z, range, spec);
    const GroupBasis B_pred = build_group_basis(pred_per_individual, z, range, spec);

    const double pv = proc_var * B_obs.delta;
    MatrixXd sigma_s = pv * (B_obs.values * B_obs.values.transpose());
    sigma_s.diagonal().array() += meas_var;
    Eigen::LLT<MatrixXd> llt(sigma_s);
    if (llt.info() != Eigen::Success) {
      sigma_s.diagonal().array() += 1e-10 * sigma_s.diagonal().mean();
      llt.compute(sigma_s);
      if (llt.info() != Eigen::Success)
        throw NumericalError("group_predict: observation covariance factorization failed");
    }

    MatrixX2d resid = st.pos;
    for (int row = 0; row < st.N; ++row)
      resid.row(row) -= origins.row(st.row_individual[row]);

    const MatrixXd cross = pv * (B_pred.values * B_obs.values.transpose());
    const MatrixXd sol = llt.solve(resid);
    MatrixX2d mean(J * np, 2);
    for (int c = 0; c < 2; ++c) mean.col(c) = cross * sol.col(c);
    for (int row = 0; row < J * np; ++row)
      mean.row(row) += origins.row(B_pred.row_individual[row]);

    MatrixXd cov = pv * (B_pred.values * B_pred.values.transpose()) -
                   cross * llt.solve(cross.transpose());
    cov = 0.5 * (cov + cov.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
      throw NumericalError("group_predict: eigendecomposition failed");
    VectorXd lam = eig.eigenvalues();
    const double spectral = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    for (int i = 0; i < lam.size(); ++i) {
      if (lam[i] < -1e-10 * spectral)
        throw NumericalError("group_predict: conditional covariance not PSD beyond tolerance");
      lam[i] = std::max(lam[i], 0.0);
    }
    const MatrixXd root = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();

    VectorXd xi(J * np);
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < J * np; ++i) xi[i] = rng.gaussian();
      const VectorXd realization = mean.col(c) + root * xi;
      for (int j = 0; j < J; ++j)
        out[j].draws.row(d).segment(c * np, np) =
            realization.segment(j * np, np).transpose();
    }
  }
  return out;
}

UncertaintyCurves uncertainty_comparison(const std::vector<Track>& s_all,
                                         const GroupModelSpec& spec,
                                         const GroupFitOptions& opt,
                                         const VectorXd& pred_times, int n_draws,
                                         double level) {
  spec.validate();
  const int J = spec.J;
  const int T = static_cast<int>(pred_times.size());

  UncertaintyCurves out;
  out.times = pred_times;
  out.radius_joint.resize(J, T);
  out.radius_indep.resize(J, T);

  const GroupChains joint = fit_group(s_all, spec, opt);
  const auto joint_draws =
      group_predict(s_all, spec, joint, pred_times, n_draws, derive_seed(opt.seed, 101));
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t)
      out.radius_joint(j, t) = credible_circle_radius(joint_draws[j], t, level);

  for (int j = 0; j < J; ++j) {
    GroupModelSpec single = spec;
    single.J = 1;
    GroupFitOptions sopt = opt;
    sopt.seed = derive_seed(opt.seed, 200 + j);
    const std::vector<Track> one{s_all[j]};
    const GroupChains fit = fit_group(one, single, sopt);
    const auto draws =
        group_predict(one, single, fit, pred_times, n_draws, derive_seed(opt.seed, 300 + j));
    for (int t = 0; t < T; ++t)
      out.radius_indep(j, t) = credible_circle_radius(draws[0], t, level);
  }
  return out;
}

}  // namespace moveconv
