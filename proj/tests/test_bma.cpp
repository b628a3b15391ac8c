#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "moveconv/bma.hpp"
#include "moveconv/simulate.hpp"
#include "oracles.hpp"

using namespace moveconv;

namespace {

Track simulate_warped(double meas_var, double ratio2, double phi, const WarpSpec* warp,
                      int n, std::uint64_t seed, int m = 150) {
  SimScenario sc;
  sc.kernel = {KernelFamily::GaussianIntegrated, phi};
  sc.grid = TimeGrid::regular(0.0, 1.0, m);
  sc.meas_var = meas_var;
  sc.proc_var = ratio2 * meas_var;
  if (warp) sc.warp = *warp;
  sc.obs_times = VectorXd::LinSpaced(n, 0.0, 1.0);
  sc.seed = seed;
  SimResult sim = simulate_trajectory(sc);
  sim.obs.pos.row(0) = sim.mu_obs.row(0);
  return sim.obs;
}

FitConfig quick_config(std::uint64_t seed) {
  FitConfig cfg;
  cfg.phi_grid = VectorXd::LinSpaced(25, 0.001, 0.02);
  cfg.iterations = 2500;
  cfg.burn_in = 1000;
  cfg.thin = 3;
  cfg.seed = seed;
  cfg.grid_m = 150;
  return cfg;
}

WarpSpec bump(double center, double scale = 0.02, double magnitude = 0.7) {
  WarpSpec w;
  w.center = center;
  w.scale = scale;
  w.magnitude = magnitude;
  return w;
}

// a chain with every draw pinned to the same parameter triple
PosteriorChains constant_chain(int len, double meas_var, double ratio, int phi_idx,
                               const VectorXd& phi_grid) {
  PosteriorChains ch;
  ch.meas_var = VectorXd::Constant(len, meas_var);
  ch.ratio = VectorXd::Constant(len, ratio);
  ch.phi = VectorXd::Constant(len, phi_grid[phi_idx]);
  ch.phi_index.assign(len, phi_idx);
  ch.loglik = VectorXd::Zero(len);
  ch.n_obs = 0;
  return ch;
}

}  // namespace

TEST_CASE("a single model gets probability one exactly") {
  const Track s = simulate_warped(1e-5, 100.0, 0.01, nullptr, 60, 1);
  FitConfig cfg = quick_config(2);
  std::vector<WarpModel> models;
  models.push_back({WarpSpec::identity(), fit_single(s, nullptr, cfg)});
  const VectorXd probs = posterior_model_probs(s, models, cfg, VectorXd(), 500, 7);
  REQUIRE(probs.size() == 1);
  CHECK(probs[0] == 1.0);
}

TEST_CASE("two identical models split the probability evenly") {
  const Track s = simulate_warped(1e-5, 100.0, 0.01, nullptr, 80, 3);
  FitConfig cfg = quick_config(4);
  const PosteriorChains ch = fit_single(s, nullptr, cfg);
  std::vector<WarpModel> models{{WarpSpec::identity(), ch}, {WarpSpec::identity(), ch}};
  const VectorXd probs = posterior_model_probs(s, models, cfg, VectorXd(), 6000, 11);
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(probs[0] == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("mismatched chain lengths are rejected") {
  const Track s = simulate_warped(1e-5, 100.0, 0.01, nullptr, 40, 5);
  FitConfig cfg = quick_config(6);
  const PosteriorChains a = fit_single(s, nullptr, cfg);
  FitConfig cfg2 = cfg;
  cfg2.iterations = 1900;
  const PosteriorChains b = fit_single(s, nullptr, cfg2);
  std::vector<WarpModel> models{{WarpSpec::identity(), a}, {WarpSpec::identity(), b}};
  CHECK_THROWS_AS(posterior_model_probs(s, models, cfg, VectorXd(), 200, 1),
                  std::invalid_argument);
}

TEST_CASE("the generating warp dominates a far-away alternative") {
  const WarpSpec truth = bump(0.5);
  const Track s = simulate_warped(1e-6, 400.0, 0.005, &truth, 150, 8);
  FitConfig cfg = quick_config(9);
  const WarpSpec far = bump(0.85);
  std::vector<WarpModel> models;
  models.push_back({truth, fit_single(s, &truth, cfg)});
  FitConfig cfg_b = cfg;
  cfg_b.seed = 10;
  models.push_back({far, fit_single(s, &far, cfg_b)});
  const VectorXd probs = posterior_model_probs(s, models, cfg, VectorXd(), 3000, 12);
  CHECK(probs[0] > 0.9);
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("an effectively impossible model leaves the others untouched") {
  const WarpSpec truth = bump(0.5);
  const Track s = simulate_warped(1e-6, 400.0, 0.005, &truth, 150, 13);
  FitConfig cfg = quick_config(14);
  std::vector<WarpModel> base;
  base.push_back({truth, fit_single(s, &truth, cfg)});
  FitConfig cfg_b = cfg;
  cfg_b.seed = 15;
  const WarpSpec near = bump(0.45);
  base.push_back({near, fit_single(s, &near, cfg_b)});

  const VectorXd p2 = posterior_model_probs(s, base, cfg, VectorXd::Constant(2, 0.5), 4000, 16);

  // a hopeless candidate: its weight underflows to zero at every sweep
  std::vector<WarpModel> with_dud = base;
  const WarpSpec dud = bump(0.9, 0.01, 0.8);
  with_dud.push_back({dud, base[0].chains});
  VectorXd prior3(3);
  prior3 << 0.5, 0.5, 1e-9;
  const VectorXd p3 = posterior_model_probs(s, with_dud, cfg, prior3, 4000, 16);

  CHECK(p3[2] == 0.0);
  CHECK(std::abs(p3[0] - p2[0]) <= 1e-6);
  CHECK(std::abs(p3[1] - p2[1]) <= 1e-6);
}

TEST_CASE("splitting prior mass over a duplicated model merges back") {
  const Track s = simulate_warped(1e-5, 100.0, 0.012, nullptr, 80, 17);
  FitConfig cfg = quick_config(18);
  const PosteriorChains cha = fit_single(s, nullptr, cfg);
  const WarpSpec wa = bump(0.4, 0.03, 0.65);
  FitConfig cfgb = cfg;
  cfgb.seed = 19;
  const PosteriorChains chb = fit_single(s, &wa, cfgb);

  std::vector<WarpModel> two{{WarpSpec::identity(), cha}, {wa, chb}};
  VectorXd prior2(2);
  prior2 << 0.5, 0.5;
  const VectorXd p2 = posterior_model_probs(s, two, cfg, prior2, 12000, 20);

  std::vector<WarpModel> three{{WarpSpec::identity(), cha}, {WarpSpec::identity(), cha}, {wa, chb}};
  VectorXd prior3(3);
  prior3 << 0.25, 0.25, 0.5;
  const VectorXd p3 = posterior_model_probs(s, three, cfg, prior3, 12000, 21);

  CHECK(p3.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p3[0] + p3[1] == doctest::Approx(p2[0]).epsilon(0.08));
}

TEST_CASE("degenerate probabilities reproduce the single-model prediction") {
  const Track s = simulate_warped(1e-5, 100.0, 0.01, nullptr, 50, 22);
  FitConfig cfg = quick_config(23);
  const PosteriorChains ch = fit_single(s, nullptr, cfg);

  WarpMixture one;
  one.models.push_back({WarpSpec::identity(), ch});
  one.probs = VectorXd::Ones(1);
  one.prior_probs = VectorXd::Ones(1);

  WarpMixture degenerate;
  degenerate.models.push_back({WarpSpec::identity(), ch});
  degenerate.models.push_back({bump(0.7), ch});
  degenerate.probs = VectorXd::Zero(2);
  degenerate.probs[0] = 1.0;
  degenerate.prior_probs = VectorXd::Constant(2, 0.5);

  const VectorXd pred_times = VectorXd::LinSpaced(7, 0.05, 0.95);
  const TrajectoryDraws a = model_averaged_predict(s, one, cfg, pred_times, 40, 99);
  const TrajectoryDraws b = model_averaged_predict(s, degenerate, cfg, pred_times, 40, 99);
  CHECK((a.draws.array() == b.draws.array()).all());
  for (int d = 0; d < b.n_draws(); ++d) CHECK(b.model_ids[d] == 0);
}

TEST_CASE("draw provenance follows the multinomial allocation") {
  const Track s = simulate_warped(1e-5, 100.0, 0.01, nullptr, 50, 24);
  FitConfig cfg = quick_config(25);
  const PosteriorChains ch = fit_single(s, nullptr, cfg);
  WarpMixture mix;
  mix.models.push_back({WarpSpec::identity(), ch});
  mix.models.push_back({bump(0.6), ch});
  mix.probs = VectorXd::Zero(2);
  mix.probs << 0.3, 0.7;
  mix.prior_probs = VectorXd::Constant(2, 0.5);

  const VectorXd pred_times = VectorXd::LinSpaced(4, 0.1, 0.9);
  const int D = 600;
  const TrajectoryDraws draws = model_averaged_predict(s, mix, cfg, pred_times, D, 101);
  int n0 = 0;
  for (int d = 0; d < D; ++d) n0 += draws.model_ids[d] == 0 ? 1 : 0;
  const double se = std::sqrt(0.3 * 0.7 * D);
  CHECK(std::abs(n0 - 0.3 * D) <= 3.0 * se);
}

TEST_CASE("mixture mean is the probability-weighted combination of model means") {
  const Track s = simulate_warped(1e-5, 100.0, 0.01, nullptr, 60, 26);
  FitConfig cfg = quick_config(27);

  // constant chains so each model's predictive mean is analytic
  const PosteriorChains cha = constant_chain(50, 2e-5, 9.0, 10, cfg.phi_grid);
  const PosteriorChains chb = constant_chain(50, 4e-5, 12.0, 20, cfg.phi_grid);
  WarpMixture mix;
  mix.models.push_back({WarpSpec::identity(), cha});
  mix.models.push_back({bump(0.5, 0.03, 0.75), chb});
  mix.probs = VectorXd::Zero(2);
  mix.probs << 0.4, 0.6;
  mix.prior_probs = VectorXd::Constant(2, 0.5);

  const VectorXd pred_times = VectorXd::LinSpaced(5, 0.1, 0.9);
  const TimeGrid grid = TimeGrid::regular(0.0, 1.0, cfg.grid_m);
  MatrixX2d means[2];
  MatrixXd covs[2];
  for (int l = 0; l < 2; ++l) {
    const auto& ch = mix.models[l].chains;
    MovementParams p;
    p.meas_var = ch.meas_var[0];
    p.proc_var = ch.ratio[0] * ch.ratio[0] * p.meas_var;
    p.range = ch.phi[0];
    p.origin = s.pos.row(0).transpose();
    const KernelSpec spec{KernelFamily::GaussianIntegrated, p.range};
    const BasisMatrix Ho = build_basis(spec, s.times, grid, &mix.models[l].warp);
    const BasisMatrix Hp = build_basis(spec, pred_times, grid, &mix.models[l].warp);
    const GpConditional cond = gp_conditional(s, Ho, Hp, p);
    means[l] = cond.mean;
    covs[l] = cond.cov;
  }

  const int D = 4000;
  const TrajectoryDraws draws = model_averaged_predict(s, mix, cfg, pred_times, D, 202);
  for (int i = 0; i < 5; ++i) {
    double mx = 0.0;
    for (int d = 0; d < D; ++d) mx += draws.x(d, i);
    mx /= D;
    const double want = 0.4 * means[0](i, 0) + 0.6 * means[1](i, 0);
    // conservative spread bound: mixture variance plus mean separation
    const double spread = std::sqrt(std::max(covs[0](i, i), covs[1](i, i))) +
                          std::abs(means[0](i, 0) - means[1](i, 0));
    CHECK(std::abs(mx - want) <= 3.5 * spread / std::sqrt(static_cast<double>(D)) + 1e-9);
    const double lo = std::min(means[0](i, 0), means[1](i, 0)) - 3.5 * spread / std::sqrt(static_cast<double>(D)) - 1e-9;
    const double hi = std::max(means[0](i, 0), means[1](i, 0)) + 3.5 * spread / std::sqrt(static_cast<double>(D)) + 1e-9;
    CHECK(mx >= lo);
    CHECK(mx <= hi);
  }
}

TEST_CASE("averaged warp derivative") {
  // all models unwarped: constant one
  WarpMixture flat;
  flat.models.push_back({WarpSpec::identity(), PosteriorChains{}});
  flat.models.push_back({WarpSpec::identity(), PosteriorChains{}});
  flat.probs = VectorXd::Constant(2, 0.5);
  flat.prior_probs = flat.probs;
  const VectorXd t = VectorXd::LinSpaced(21, 0.0, 1.0);
  const WarpDerivativeCurve c1 = averaged_warp_derivative(flat, t);
  for (int i = 0; i < t.size(); ++i)
    CHECK(c1.averaged[i] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c1.reference == 1.0);

  // a single warped model reproduces its own derivative
  WarpMixture single;
  const WarpSpec w = bump(0.5, 0.02, 0.7);
  single.models.push_back({w, PosteriorChains{}});
  single.probs = VectorXd::Ones(1);
  single.prior_probs = single.probs;
  const WarpDerivativeCurve c2 = averaged_warp_derivative(single, t);
  for (int i = 0; i < t.size(); ++i)
    CHECK(c2.averaged[i] == doctest::Approx(w.warp_derivative(t[i])).epsilon(1e-12));

  // two warps: pointwise convex combination
  WarpMixture mix;
  const WarpSpec w2 = bump(0.3, 0.04, 0.6);
  mix.models.push_back({w, PosteriorChains{}});
  mix.models.push_back({w2, PosteriorChains{}});
  mix.probs = VectorXd::Zero(2);
  mix.probs << 0.25, 0.75;
  mix.prior_probs = VectorXd::Constant(2, 0.5);
  const WarpDerivativeCurve c3 = averaged_warp_derivative(mix, t);
  for (int i = 0; i < t.size(); ++i) {
    const double want = 0.25 * w.warp_derivative(t[i]) + 0.75 * w2.warp_derivative(t[i]);
    CHECK(c3.averaged[i] == doctest::Approx(want).epsilon(1e-12));
    CHECK(c3.lo[i] <= c3.averaged[i] + 1e-12);
    CHECK(c3.hi[i] >= c3.averaged[i] - 1e-12);
  }
}
