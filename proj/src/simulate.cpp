#include "moveconv/simulate.hpp"

#include <cmath>

#include "moveconv/rng.hpp"

namespace moveconv {

SimResult simulate_trajectory(const SimScenario& sc) {
  sc.kernel.validate();
  sc.grid.validate();
  if (sc.obs_times.size() == 0)
    throw std::invalid_argument("simulate_trajectory: empty observation schedule");
  if (!(sc.meas_var > 0.0) || !(sc.proc_var >= 0.0))
    throw std::invalid_argument("simulate_trajectory: invalid variances");

  const int m = sc.grid.size();
  const int n = static_cast<int>(sc.obs_times.size());
  const WarpSpec* warp = sc.warp ? &*sc.warp : nullptr;
  const BasisMatrix H_grid = build_basis(sc.kernel, sc.grid.nodes, sc.grid, warp);
  const BasisMatrix H_obs = build_basis(sc.kernel, sc.obs_times, sc.grid, warp);

  Rng rng(sc.seed);
  const double sd_node = std::sqrt(sc.grid.delta);
  const double sigma_mu = std::sqrt(sc.proc_var);
  MatrixX2d db(m, 2);
  for (int d = 0; d < 2; ++d)
    for (int j = 0; j < m; ++j) db(j, d) = sd_node * rng.gaussian();

  SimResult out;
  out.mu_grid = sigma_mu * (H_grid.values * db);
  out.mu_grid.rowwise() += sc.origin.transpose();
  out.mu_obs = sigma_mu * (H_obs.values * db);
  out.mu_obs.rowwise() += sc.origin.transpose();

  out.obs.times = sc.obs_times;
  out.obs.pos = out.mu_obs;
  const double sd_meas = std::sqrt(sc.meas_var);
  for (int i = 0; i < n; ++i) {
    out.obs.pos(i, 0) += sd_meas * rng.gaussian();
    out.obs.pos(i, 1) += sd_meas * rng.gaussian();
  }
  return out;
}

GroupSimResult simulate_group(const GroupSimScenario& sc) {
  sc.spec.validate();
  const int J = sc.spec.J;
  if (static_cast<int>(sc.z.size()) != J)
    throw std::invalid_argument("simulate_group: z size != J");
  if (static_cast<int>(sc.obs_times.size()) != J)
    throw std::invalid_argument("simulate_group: schedule size != J");
  if (sc.origins.rows() != J)
    throw std::invalid_argument("simulate_group: origins rows != J");
  if (!(sc.meas_var > 0.0) || !(sc.proc_var >= 0.0))
    throw std::invalid_argument("simulate_group: invalid variances");

  const int m = sc.spec.obs_grid.size();
  const GroupBasis basis = build_group_basis(sc.obs_times, sc.z, sc.spec.range, sc.spec);
  const int N = static_cast<int>(basis.values.rows());

  Rng rng(sc.seed);
  const double sd_node = std::sqrt(sc.spec.obs_grid.delta);
  const double sigma_mu = std::sqrt(sc.proc_var);
  MatrixX2d db(J * m, 2);
  for (int d = 0; d < 2; ++d)
    for (int k = 0; k < J; ++k)
      for (int j = 0; j < m; ++j) db(k * m + j, d) = sd_node * rng.gaussian();

  MatrixX2d mu = sigma_mu * (basis.values * db);
  for (int row = 0; row < N; ++row)
    mu.row(row) += sc.origins.row(basis.row_individual[row]);

  GroupSimResult out;
  out.tracks.resize(J);
  out.mu_obs.resize(J);
  const double sd_meas = std::sqrt(sc.meas_var);
  int row = 0;
  for (int j = 0; j < J; ++j) {
    const int nj = static_cast<int>(sc.obs_times[j].size());
    out.tracks[j].times = sc.obs_times[j];
    out.tracks[j].pos.resize(nj, 2);
    out.mu_obs[j].resize(nj, 2);
    for (int i = 0; i < nj; ++i, ++row) {
      out.mu_obs[j].row(i) = mu.row(row);
      out.tracks[j].pos(i, 0) = mu(row, 0) + sd_meas * rng.gaussian();
      out.tracks[j].pos(i, 1) = mu(row, 1) + sd_meas * rng.gaussian();
    }
  }
  return out;
}

}  // namespace moveconv
