// moveconv: process-convolution movement models for telemetry.
//
// Subcommands: simulate | fit | fit-network | bma | predict | degree | report.
// Each reads a sectioned key=value config, writes its outputs into a run
// directory, and finishes with a manifest.json listing every produced file
// with a content hash. Identical config + seed reproduce outputs byte for
// byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

#include "moveconv/bma.hpp"
#include "moveconv/config.hpp"
#include "moveconv/gp.hpp"
#include "moveconv/mcmc.hpp"
#include "moveconv/network.hpp"
#include "moveconv/rng.hpp"
#include "moveconv/runio.hpp"
#include "moveconv/simulate.hpp"
#include "moveconv/telemetry.hpp"
#include "moveconv/warp.hpp"

using namespace moveconv;
using nlohmann::ordered_json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
};

Config load_config(const CommonArgs& args) {
  Config cfg = args.config_path.empty() ? Config::parse_string("", "<empty>")
                                        : Config::parse_file(args.config_path);
  if (!args.out_dir.empty()) cfg.set("run.out_dir", args.out_dir);
  if (args.seed >= 0) cfg.set("run.seed", std::to_string(args.seed));
  return cfg;
}

std::string resolve_out_dir(const Config& cfg) {
  std::string dir = cfg.get_string("run.out_dir", "");
  if (dir.empty()) {
    const char* env = std::getenv("MOVECONV_RUN_DIR");
    dir = env ? env : ".";
  }
  ensure_dir(dir);
  return dir;
}

std::uint64_t run_seed(const Config& cfg) {
  return static_cast<std::uint64_t>(cfg.get_int("run.seed", 1));
}

FitConfig fit_config_from(const Config& cfg, std::uint64_t seed) {
  FitConfig fc;
  const long count = cfg.get_int("mcmc.phi_count", 100);
  const double lo = cfg.get_double("mcmc.phi_min", 0.001);
  const double hi = cfg.get_double("mcmc.phi_max", 0.02);
  fc.phi_grid = VectorXd::LinSpaced(count, lo, hi);
  fc.meas_var_prior.shape = cfg.get_double("mcmc.meas_var_prior_shape", 2.0);
  fc.meas_var_prior.scale = cfg.get_double("mcmc.meas_var_prior_scale", 1.0558e-10);
  fc.ratio_upper = cfg.get_double("mcmc.ratio_upper", 20.0);
  fc.iterations = static_cast<int>(cfg.get_int("mcmc.iterations", 20000));
  fc.burn_in = static_cast<int>(cfg.get_int("mcmc.burn_in", 5000));
  fc.thin = static_cast<int>(cfg.get_int("mcmc.thin", 5));
  fc.grid_m = static_cast<int>(cfg.get_int("kernels.m", 800));
  fc.cache_cap_bytes = cfg.get_double("mcmc.cache_cap_mb", 4096.0) * 1048576.0;
  fc.seed = seed;
  fc.validate();
  return fc;
}

TelemetrySet load_scaled_data(const Config& cfg) {
  const std::string input = cfg.require_string("data.input");
  const std::string units = cfg.get_string("data.units", "lonlat");
  if (units == "scaled") {
    TelemetrySet set = ingest_csv(input, true);
    ProjectionMeta meta;
    meta.geographic = false;
    meta.scale_km = cfg.get_double("data.scale_km", 1.0);
    meta.time_span_hours = cfg.get_double("data.time_span_hours", 1.0);
    set.scaled = true;
    set.geographic = false;
    set.meta = meta;
    return set;
  }
  const bool km = units == "km";
  if (!km && units != "lonlat")
    throw std::runtime_error("data.units must be lonlat, km, or scaled");
  const TelemetrySet raw = ingest_csv(input, km);
  std::optional<std::pair<double, double>> center;
  if (cfg.has("data.center_lon") || cfg.has("data.center_lat"))
    center = std::make_pair(cfg.get_double("data.center_lon", 0.0),
                            cfg.get_double("data.center_lat", 0.0));
  return project_and_scale(raw, center);
}

std::map<std::string, std::string> config_echo(const Config& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : cfg.entries()) out[k] = v;
  return out;
}

// One config file can drive the whole pipeline, so every subcommand accepts
// the full documented schema; anything else is reported as unknown.
void touch_shared_schema(const Config& cfg) {
  for (const char* key :
       {"run.seed", "run.out_dir", "data.input", "data.units", "data.center_lon",
        "data.center_lat", "data.scale_km", "data.time_span_hours", "kernels.m",
        "mcmc.iterations", "mcmc.burn_in", "mcmc.thin", "mcmc.phi_min", "mcmc.phi_max",
        "mcmc.phi_count", "mcmc.meas_var_prior_shape", "mcmc.meas_var_prior_scale",
        "mcmc.ratio_upper", "mcmc.cache_cap_mb", "warp.centers", "warp.scales",
        "warp.magnitudes", "warp.top_k", "bma.stage2_iterations", "bma.curve_points",
        "predict.times", "predict.draws", "predict.level", "simulate.kind",
        "simulate.kernel", "simulate.n_obs", "simulate.meas_var", "simulate.proc_var",
        "simulate.phi", "simulate.warp_center", "simulate.warp_scale",
        "simulate.warp_magnitude", "simulate.scale_km", "simulate.J",
        "simulate.group_separation", "simulate.gap_individual", "simulate.gap_start",
        "simulate.gap_end", "network.m", "network.m_w", "network.phi_z",
        "network.sigma_z", "network.phi_init", "network.iterations", "network.burn_in",
        "network.thin", "network.uncertainty", "network.uncertainty_times",
        "network.uncertainty_draws", "report.timestamp"})
    cfg.has(key);
}

ordered_json warp_to_json(const WarpSpec& w) {
  ordered_json j;
  j["density"] = w.density == WarpDensity::Uniform ? "uniform" : "truncated-gaussian";
  j["center"] = w.center;
  j["scale"] = w.scale;
  j["magnitude"] = w.magnitude;
  j["t_start"] = w.t_start;
  j["t_end"] = w.t_end;
  return j;
}

WarpSpec warp_from_json(const ordered_json& j) {
  WarpSpec w;
  w.density = j.at("density") == "uniform" ? WarpDensity::Uniform
                                           : WarpDensity::TruncatedGaussian;
  w.center = j.at("center");
  w.scale = j.at("scale");
  w.magnitude = j.at("magnitude");
  w.t_start = j.at("t_start");
  w.t_end = j.at("t_end");
  return w;
}

void write_chain_csv(const std::string& path, const PosteriorChains& ch) {
  CsvWriter csv(path, {"iteration", "meas_var", "ratio", "phi", "loglik", "phi_index"});
  for (int i = 0; i < ch.n_draws(); ++i)
    csv.row({static_cast<double>(i), ch.meas_var[i], ch.ratio[i], ch.phi[i], ch.loglik[i],
             static_cast<double>(ch.phi_index[i])});
  csv.close();
}

PosteriorChains read_chain_csv(const std::string& path, const VectorXd& phi_grid) {
  const CsvTable t = read_csv(path);
  const int c_mv = t.col("meas_var"), c_r = t.col("ratio"), c_p = t.col("phi"),
            c_ll = t.col("loglik"), c_pi = t.col("phi_index");
  PosteriorChains ch;
  const std::size_t n = t.rows.size();
  ch.meas_var.resize(n);
  ch.ratio.resize(n);
  ch.phi.resize(n);
  ch.loglik.resize(n);
  ch.phi_index.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ch.meas_var[i] = t.num(i, c_mv);
    ch.ratio[i] = t.num(i, c_r);
    ch.phi[i] = t.num(i, c_p);
    ch.loglik[i] = t.num(i, c_ll);
    const int idx = static_cast<int>(t.num(i, c_pi));
    if (idx < 0 || idx >= phi_grid.size())
      throw std::runtime_error("chain csv: phi_index outside the configured grid");
    ch.phi_index[i] = idx;
  }
  return ch;
}

// ---------------------------------------------------------------------------
// simulate

VectorXd schedule_with_gap(int n, double gap_start, double gap_end) {
  std::vector<double> keep;
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    if (t > gap_start && t < gap_end) continue;
    keep.push_back(t);
  }
  VectorXd out(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) out[i] = keep[i];
  return out;
}

int cmd_simulate(const Config& cfg) {
  const std::string dir = resolve_out_dir(cfg);
  const std::uint64_t seed = run_seed(cfg);
  RunManifest manifest(dir, config_echo(cfg), seed);

  const std::string kind = cfg.get_string("simulate.kind", "single");
  const double scale_km = cfg.get_double("simulate.scale_km", 1.0);
  const double meas_var = cfg.get_double("simulate.meas_var", 1e-5);
  const double proc_var = cfg.get_double("simulate.proc_var", 1e-3);
  const double phi = cfg.get_double("simulate.phi", 0.01);
  const int n_obs = static_cast<int>(cfg.get_int("simulate.n_obs", 200));
  const int m = static_cast<int>(cfg.get_int("kernels.m", 800));

  CsvWriter telemetry(join_path(dir, "telemetry.csv"), {"id", "time", "x_km", "y_km"});
  CsvWriter truth(join_path(dir, "truth.csv"), {"time", "individual", "true_x", "true_y"});

  if (kind == "single") {
    SimScenario sc;
    sc.kernel = {KernelFamily::GaussianIntegrated, phi};
    const std::string family = cfg.get_string("simulate.kernel", "gaussian-integrated");
    if (family == "brownian-indicator")
      sc.kernel.family = KernelFamily::BrownianIndicator;
    else if (family != "gaussian-integrated")
      throw std::runtime_error("simulate.kernel must be gaussian-integrated or brownian-indicator");
    sc.grid = TimeGrid::regular(0.0, 1.0, m);
    sc.meas_var = meas_var;
    sc.proc_var = proc_var;
    sc.obs_times = schedule_with_gap(n_obs, cfg.get_double("simulate.gap_start", 1.0),
                                     cfg.get_double("simulate.gap_end", 1.0));
    if (cfg.has("simulate.warp_center")) {
      WarpSpec w;
      w.center = cfg.get_double("simulate.warp_center", 0.5);
      w.scale = cfg.get_double("simulate.warp_scale", 0.02);
      w.magnitude = cfg.get_double("simulate.warp_magnitude", 0.7);
      w.validate();
      sc.warp = w;
    }
    sc.seed = seed;
    const SimResult sim = simulate_trajectory(sc);
    for (int i = 0; i < sim.obs.n(); ++i) {
      telemetry.row_mixed({"sim0", telemetry.cell(sim.obs.times[i]),
                           telemetry.cell(sim.obs.pos(i, 0) * scale_km),
                           telemetry.cell(sim.obs.pos(i, 1) * scale_km)});
      truth.row_mixed({truth.cell(sim.obs.times[i]), "sim0",
                       truth.cell(sim.mu_obs(i, 0) * scale_km),
                       truth.cell(sim.mu_obs(i, 1) * scale_km)});
    }
  } else if (kind == "group") {
    GroupSimScenario sc;
    const int J = static_cast<int>(cfg.get_int("simulate.J", 3));
    sc.spec.J = J;
    sc.spec.obs_grid = TimeGrid::regular(0.0, 1.0, m);
    sc.spec.latent_grid =
        TimeGrid::regular(0.0, 1.0, static_cast<int>(cfg.get_int("network.m_w", 15)));
    sc.spec.range = phi;
    sc.spec.phi_z = cfg.get_double("network.phi_z", 0.08);
    sc.spec.sigma_z = cfg.get_double("network.sigma_z", 10.0);
    sc.meas_var = meas_var;
    sc.proc_var = proc_var;
    // individuals 0 and 1 coincide in latent space; the rest are spread out
    const double sep = cfg.get_double("simulate.group_separation", 4.0);
    sc.z.assign(J, MatrixX2d::Zero(sc.spec.latent_grid.size(), 2));
    for (int j = 2; j < J; ++j) sc.z[j].col(0).setConstant(sep * (j - 1));
    sc.origins = MatrixX2d::Zero(J, 2);
    const int gap_j = static_cast<int>(cfg.get_int("simulate.gap_individual", -1));
    for (int j = 0; j < J; ++j) {
      const bool gapped = j == gap_j;
      sc.obs_times.push_back(schedule_with_gap(
          n_obs, gapped ? cfg.get_double("simulate.gap_start", 1.0) : 1.0,
          gapped ? cfg.get_double("simulate.gap_end", 1.0) : 1.0));
    }
    sc.seed = seed;
    const GroupSimResult sim = simulate_group(sc);
    for (int j = 0; j < J; ++j) {
      const std::string id = "sim" + std::to_string(j);
      for (int i = 0; i < sim.tracks[j].n(); ++i) {
        telemetry.row_mixed({id, telemetry.cell(sim.tracks[j].times[i]),
                             telemetry.cell(sim.tracks[j].pos(i, 0) * scale_km),
                             telemetry.cell(sim.tracks[j].pos(i, 1) * scale_km)});
        truth.row_mixed({truth.cell(sim.tracks[j].times[i]), id,
                         truth.cell(sim.mu_obs[j](i, 0) * scale_km),
                         truth.cell(sim.mu_obs[j](i, 1) * scale_km)});
      }
    }
  } else {
    throw std::runtime_error("simulate.kind must be single or group");
  }

  telemetry.close();
  truth.close();
  manifest.add_file("telemetry.csv");
  manifest.add_file("truth.csv");
  touch_shared_schema(cfg);
  cfg.require_all_consumed();
  manifest.write();
  std::cout << "simulate: wrote " << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const Config& cfg) {
  const std::string dir = resolve_out_dir(cfg);
  const std::uint64_t seed = run_seed(cfg);
  RunManifest manifest(dir, config_echo(cfg), seed);

  const TelemetrySet data = load_scaled_data(cfg);
  const FitConfig base_cfg = fit_config_from(cfg, seed);

  const int n_centers = static_cast<int>(cfg.get_int("warp.centers", 100));
  const auto scales = cfg.get_list("warp.scales", default_warp_scales());
  const auto magnitudes = cfg.get_list("warp.magnitudes", default_warp_magnitudes());
  const int top_k = static_cast<int>(cfg.get_int("warp.top_k", 20));

  int individual_index = 0;
  for (const auto& id : data.ids()) {
    const Track track = data.track(id);
    const std::string sub = "fit_" + id;
    ensure_dir(join_path(dir, sub));

    FitConfig fc = base_cfg;
    fc.seed = derive_seed(seed, 10000 + individual_index);
    const PosteriorChains baseline = fit_single(track, nullptr, fc);
    write_chain_csv(join_path(dir, join_path(sub, "chain_baseline.csv")), baseline);
    manifest.add_file(join_path(sub, "chain_baseline.csv"));

    ordered_json models_json;
    models_json["individual"] = id;
    models_json["phi_grid_min"] = base_cfg.phi_grid.minCoeff();
    models_json["phi_grid_max"] = base_cfg.phi_grid.maxCoeff();
    models_json["phi_grid_count"] = base_cfg.phi_grid.size();
    models_json["baseline"] = {{"chain_csv", sub + "/chain_baseline.csv"},
                               {"seed", fc.seed},
                               {"accept_rate_ratio", baseline.accept_rate_ratio}};
    ordered_json model_list = ordered_json::array();

    if (n_centers > 0) {
      const auto candidates = enumerate_warp_candidates(n_centers, scales, magnitudes);
      const auto scored = deviance_screen(track, candidates, baseline, top_k, base_cfg);

      CsvWriter screen(join_path(dir, join_path(sub, "screen.csv")),
                       {"rank", "center", "scale", "magnitude", "deviance"});
      for (std::size_t k = 0; k < scored.size(); ++k)
        screen.row({static_cast<double>(k), scored[k].warp.center, scored[k].warp.scale,
                    scored[k].warp.magnitude, scored[k].deviance});
      screen.close();
      manifest.add_file(join_path(sub, "screen.csv"));

      for (std::size_t k = 0; k < scored.size(); ++k) {
        FitConfig mc = base_cfg;
        mc.seed = derive_seed(seed, 20000 + 1000 * individual_index + k);
        const PosteriorChains ch = fit_single(track, &scored[k].warp, mc);
        const std::string rel = sub + "/model_" + std::to_string(k) + "_chain.csv";
        write_chain_csv(join_path(dir, rel), ch);
        manifest.add_file(rel);
        ordered_json mj;
        mj["index"] = k;
        mj["warp"] = warp_to_json(scored[k].warp);
        mj["chain_csv"] = rel;
        mj["seed"] = mc.seed;
        mj["accept_rate_ratio"] = ch.accept_rate_ratio;
        mj["deviance_screen"] = scored[k].deviance;
        for (const auto& d : ch.diagnostics) mj["diagnostics"].push_back(d);
        model_list.push_back(mj);
      }
    } else {
      // no warp search: the mixture is the single unwarped model
      ordered_json mj;
      mj["index"] = 0;
      mj["warp"] = warp_to_json(WarpSpec::identity());
      mj["chain_csv"] = sub + "/chain_baseline.csv";
      mj["seed"] = fc.seed;
      mj["accept_rate_ratio"] = baseline.accept_rate_ratio;
      model_list.push_back(mj);
    }
    models_json["models"] = model_list;
    write_text_file(join_path(dir, join_path(sub, "models.json")),
                    models_json.dump(2) + "\n");
    manifest.add_file(join_path(sub, "models.json"));
    ++individual_index;
  }

  touch_shared_schema(cfg);
  cfg.require_all_consumed();
  manifest.write();
  std::cout << "fit: wrote " << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bma

std::vector<WarpModel> load_models(const std::string& dir, const std::string& id,
                                   const FitConfig& fc) {
  const std::string path = join_path(dir, "fit_" + id + "/models.json");
  const ordered_json mj = ordered_json::parse(read_text_file(path));
  std::vector<WarpModel> models;
  for (const auto& m : mj.at("models")) {
    WarpModel wm;
    wm.warp = warp_from_json(m.at("warp"));
    wm.chains = read_chain_csv(join_path(dir, m.at("chain_csv").get<std::string>()),
                               fc.phi_grid);
    models.push_back(std::move(wm));
  }
  if (models.empty()) throw std::runtime_error("bma: no models recorded in " + path);
  return models;
}

int cmd_bma(const Config& cfg) {
  const std::string dir = resolve_out_dir(cfg);
  const std::uint64_t seed = run_seed(cfg);
  RunManifest manifest(dir, config_echo(cfg), seed);

  const TelemetrySet data = load_scaled_data(cfg);
  const FitConfig fc = fit_config_from(cfg, seed);
  const int stage2 = static_cast<int>(cfg.get_int("bma.stage2_iterations", 4000));
  const int curve_points = static_cast<int>(cfg.get_int("bma.curve_points", 201));

  int individual_index = 0;
  for (const auto& id : data.ids()) {
    const Track track = data.track(id);
    std::vector<WarpModel> models = load_models(dir, id, fc);
    const WarpMixture mix = fit_mixture(track, std::move(models), fc, stage2,
                                        derive_seed(seed, 30000 + individual_index));

    const std::string sub = "bma_" + id;
    ensure_dir(join_path(dir, sub));

    ordered_json report;
    report["individual"] = id;
    report["prior_probs"] = std::vector<double>(
        mix.prior_probs.data(), mix.prior_probs.data() + mix.prior_probs.size());
    ordered_json entries = ordered_json::array();
    for (std::size_t l = 0; l < mix.models.size(); ++l) {
      ordered_json e;
      e["index"] = l;
      e["prob"] = mix.probs[l];
      e["warp"] = warp_to_json(mix.models[l].warp);
      const auto& ch = mix.models[l].chains;
      e["chain_summary"] = {{"meas_var_mean", chain_mean(ch.meas_var)},
                            {"ratio_mean", chain_mean(ch.ratio)},
                            {"phi_mean", chain_mean(ch.phi)},
                            {"draws", ch.n_draws()}};
      entries.push_back(e);
    }
    report["models"] = entries;
    write_text_file(join_path(dir, join_path(sub, "mixture.json")),
                    report.dump(2) + "\n");
    manifest.add_file(join_path(sub, "mixture.json"));

    const VectorXd t = VectorXd::LinSpaced(curve_points, 0.0, 1.0);
    const WarpDerivativeCurve curve = averaged_warp_derivative(mix, t);
    std::vector<std::string> header{"t"};
    for (std::size_t l = 0; l < mix.models.size(); ++l)
      header.push_back("model_" + std::to_string(l));
    header.push_back("averaged");
    header.push_back("lo");
    header.push_back("hi");
    CsvWriter csv(join_path(dir, join_path(sub, "warp_derivative.csv")), header);
    for (int i = 0; i < t.size(); ++i) {
      std::vector<double> row{t[i]};
      for (std::size_t l = 0; l < mix.models.size(); ++l)
        row.push_back(curve.per_model(i, l));
      row.push_back(curve.averaged[i]);
      row.push_back(curve.lo[i]);
      row.push_back(curve.hi[i]);
      csv.row(row);
    }
    csv.close();
    manifest.add_file(join_path(sub, "warp_derivative.csv"));
    ++individual_index;
  }

  touch_shared_schema(cfg);
  cfg.require_all_consumed();
  manifest.write();
  std::cout << "bma: wrote " << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const Config& cfg) {
  const std::string dir = resolve_out_dir(cfg);
  const std::uint64_t seed = run_seed(cfg);
  RunManifest manifest(dir, config_echo(cfg), seed);

  const TelemetrySet data = load_scaled_data(cfg);
  const FitConfig fc = fit_config_from(cfg, seed);
  const int n_times = static_cast<int>(cfg.get_int("predict.times", 200));
  const int n_draws = static_cast<int>(cfg.get_int("predict.draws", 1000));
  const double level = cfg.get_double("predict.level", 0.95);

  int individual_index = 0;
  for (const auto& id : data.ids()) {
    const Track track = data.track(id);
    std::vector<WarpModel> models = load_models(dir, id, fc);

    // mixture probabilities from the bma stage when present, else uniform
    VectorXd probs;
    const std::string mix_path = join_path(dir, "bma_" + id + "/mixture.json");
    WarpMixture mix;
    try {
      const ordered_json mj = ordered_json::parse(read_text_file(mix_path));
      probs.resize(mj.at("models").size());
      int i = 0;
      for (const auto& e : mj.at("models")) probs[i++] = e.at("prob").get<double>();
    } catch (const std::exception&) {
      probs = VectorXd::Constant(models.size(), 1.0 / models.size());
    }
    if (probs.size() != static_cast<Eigen::Index>(models.size()))
      throw std::runtime_error("predict: mixture.json does not match models.json");
    mix.models = std::move(models);
    mix.probs = probs;
    mix.prior_probs = VectorXd::Constant(mix.models.size(), 1.0 / mix.models.size());

    const VectorXd pred_times = VectorXd::LinSpaced(n_times, 0.0, 1.0);
    const TrajectoryDraws draws = model_averaged_predict(
        track, mix, fc, pred_times, n_draws, derive_seed(seed, 40000 + individual_index));

    const std::string sub = "predict_" + id;
    ensure_dir(join_path(dir, sub));
    CsvWriter csv(join_path(dir, join_path(sub, "trajectory_draws.csv")),
                  {"draw", "time", "x", "y", "model_id"});
    for (int d = 0; d < draws.n_draws(); ++d)
      for (int i = 0; i < draws.n_times(); ++i)
        csv.row({static_cast<double>(d), draws.times[i], draws.x(d, i), draws.y(d, i),
                 static_cast<double>(draws.model_ids[d])});
    csv.close();
    manifest.add_file(join_path(sub, "trajectory_draws.csv"));

    ordered_json summary;
    summary["individual"] = id;
    summary["draws"] = draws.n_draws();
    ordered_json per_time = ordered_json::array();
    for (int i = 0; i < draws.n_times(); ++i) {
      double mx = 0.0, my = 0.0;
      for (int d = 0; d < draws.n_draws(); ++d) {
        mx += draws.x(d, i);
        my += draws.y(d, i);
      }
      mx /= draws.n_draws();
      my /= draws.n_draws();
      ordered_json e;
      e["time"] = draws.times[i];
      e["mean_x"] = mx;
      e["mean_y"] = my;
      e["credible_radius"] = credible_circle_radius(draws, i, level);
      per_time.push_back(e);
    }
    summary["per_time"] = per_time;
    if (data.meta) {
      const PathSummary ps = path_summaries(draws, *data.meta);
      summary["path_length_km"] = {{"mean", ps.length_mean}, {"sd", ps.length_sd}};
      summary["speed_kmh"] = {{"mean", ps.speed_mean}, {"sd", ps.speed_sd}};
    }
    write_text_file(join_path(dir, join_path(sub, "trajectory_summary.json")),
                    summary.dump(2) + "\n");
    manifest.add_file(join_path(sub, "trajectory_summary.json"));
    ++individual_index;
  }

  touch_shared_schema(cfg);
  cfg.require_all_consumed();
  manifest.write();
  std::cout << "predict: wrote " << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit-network / degree

GroupModelSpec network_spec_from(const Config& cfg, int J) {
  GroupModelSpec spec;
  spec.J = J;
  spec.obs_grid = TimeGrid::regular(0.0, 1.0, static_cast<int>(cfg.get_int("network.m", 260)));
  spec.latent_grid =
      TimeGrid::regular(0.0, 1.0, static_cast<int>(cfg.get_int("network.m_w", 15)));
  spec.range = cfg.get_double("network.phi_init", 0.01);
  spec.phi_z = cfg.get_double("network.phi_z", 0.08);
  spec.sigma_z = cfg.get_double("network.sigma_z", 10.0);
  spec.validate();
  return spec;
}

GroupFitOptions network_options_from(const Config& cfg, std::uint64_t seed) {
  GroupFitOptions opt;
  opt.iterations = static_cast<int>(cfg.get_int("network.iterations", 4000));
  opt.burn_in = static_cast<int>(cfg.get_int("network.burn_in", 1500));
  opt.thin = static_cast<int>(cfg.get_int("network.thin", 2));
  opt.seed = seed;
  opt.validate();
  return opt;
}

int cmd_fit_network(const Config& cfg) {
  const std::string dir = resolve_out_dir(cfg);
  const std::uint64_t seed = run_seed(cfg);
  RunManifest manifest(dir, config_echo(cfg), seed);

  const TelemetrySet data = load_scaled_data(cfg);
  const auto ids = data.ids();
  const auto tracks = data.all_tracks();
  const GroupModelSpec spec = network_spec_from(cfg, static_cast<int>(ids.size()));
  const GroupFitOptions opt = network_options_from(cfg, derive_seed(seed, 50000));

  const GroupChains chains = fit_group(tracks, spec, opt);

  const std::string sub = "network";
  ensure_dir(join_path(dir, sub));

  {
    CsvWriter csv(join_path(dir, sub + "/chains.csv"),
                  {"iteration", "meas_var", "ratio2", "phi", "origin_var", "loglik"});
    for (int i = 0; i < chains.n_draws(); ++i)
      csv.row({static_cast<double>(i), chains.meas_var[i], chains.ratio2[i],
               chains.range[i], chains.origin_var[i], chains.loglik[i]});
    csv.close();
    manifest.add_file(sub + "/chains.csv");
  }
  {
    CsvWriter csv(join_path(dir, sub + "/origins.csv"),
                  {"iteration", "individual", "x", "y"});
    for (int i = 0; i < chains.n_draws(); ++i)
      for (int j = 0; j < spec.J; ++j)
        csv.row_mixed({csv.cell(i), ids[j], csv.cell(chains.origins_x(i, j)),
                       csv.cell(chains.origins_y(i, j))});
    csv.close();
    manifest.add_file(sub + "/origins.csv");
  }
  {
    CsvWriter csv(join_path(dir, sub + "/z_draws.csv"),
                  {"iteration", "individual", "node", "z1", "z2"});
    for (int i = 0; i < chains.n_draws(); ++i)
      for (int j = 0; j < spec.J; ++j)
        for (int w = 0; w < spec.latent_grid.size(); ++w)
          csv.row_mixed({csv.cell(i), ids[j], csv.cell(w), csv.cell(chains.z[i][j](w, 0)),
                         csv.cell(chains.z[i][j](w, 1))});
    csv.close();
    manifest.add_file(sub + "/z_draws.csv");
  }
  {
    CsvWriter csv(join_path(dir, sub + "/nu_mean.csv"),
                  {"time", "individual_a", "individual_b", "nu"});
    for (int g = 0; g < spec.obs_grid.size(); ++g)
      for (int j = 0; j < spec.J; ++j)
        for (int k = 0; k < spec.J; ++k)
          csv.row_mixed({csv.cell(spec.obs_grid.nodes[g]), ids[j], ids[k],
                         csv.cell(chains.nu_mean[g](j, k))});
    csv.close();
    manifest.add_file(sub + "/nu_mean.csv");
  }

  ordered_json diag;
  diag["accept_z"] = chains.accept_z;
  diag["accept_ratio2"] = chains.accept_ratio2;
  diag["accept_range"] = chains.accept_range;
  diag["seed"] = chains.seed;
  for (const auto& d : chains.diagnostics) diag["notes"].push_back(d);
  write_text_file(join_path(dir, sub + "/fit.json"), diag.dump(2) + "\n");
  manifest.add_file(sub + "/fit.json");

  if (cfg.get_bool("network.uncertainty", false)) {
    const int n_pred = static_cast<int>(cfg.get_int("network.uncertainty_times", 60));
    const int n_draws = static_cast<int>(cfg.get_int("network.uncertainty_draws", 400));
    const VectorXd pred_times = VectorXd::LinSpaced(n_pred, 0.0, 1.0);
    const UncertaintyCurves curves = uncertainty_comparison(
        tracks, spec, opt, pred_times, n_draws, cfg.get_double("predict.level", 0.95));
    CsvWriter csv(join_path(dir, sub + "/uncertainty.csv"),
                  {"individual", "time", "radius_joint", "radius_independent"});
    for (int j = 0; j < spec.J; ++j)
      for (int t = 0; t < pred_times.size(); ++t)
        csv.row_mixed({ids[j], csv.cell(pred_times[t]), csv.cell(curves.radius_joint(j, t)),
                       csv.cell(curves.radius_indep(j, t))});
    csv.close();
    manifest.add_file(sub + "/uncertainty.csv");
  }

  touch_shared_schema(cfg);
  cfg.require_all_consumed();
  manifest.write();
  std::cout << "fit-network: wrote " << dir << "\n";
  return 0;
}

int cmd_degree(const Config& cfg) {
  const std::string dir = resolve_out_dir(cfg);
  const std::uint64_t seed = run_seed(cfg);
  RunManifest manifest(dir, config_echo(cfg), seed);

  // degrees are a deterministic map over the stored latent draws
  const CsvTable z_table = read_csv(join_path(dir, "network/z_draws.csv"));
  const int c_it = z_table.col("iteration"), c_id = z_table.col("individual"),
            c_node = z_table.col("node"), c_z1 = z_table.col("z1"),
            c_z2 = z_table.col("z2");

  std::vector<std::string> ids;
  std::set<std::string> seen;
  long n_draws = 0;
  int m_w = 0;
  for (std::size_t r = 0; r < z_table.rows.size(); ++r) {
    const std::string& id = z_table.rows[r][c_id];
    if (seen.insert(id).second) ids.push_back(id);
    n_draws = std::max(n_draws, static_cast<long>(z_table.num(r, c_it)) + 1);
    m_w = std::max(m_w, static_cast<int>(z_table.num(r, c_node)) + 1);
  }
  const int J = static_cast<int>(ids.size());
  GroupModelSpec spec = network_spec_from(cfg, J);
  if (spec.latent_grid.size() != m_w)
    throw std::runtime_error("degree: network.m_w does not match the stored draws");

  std::vector<LatentPaths> draws(n_draws, LatentPaths(J, MatrixX2d::Zero(m_w, 2)));
  for (std::size_t r = 0; r < z_table.rows.size(); ++r) {
    const int it = static_cast<int>(z_table.num(r, c_it));
    const int node = static_cast<int>(z_table.num(r, c_node));
    int j = 0;
    while (ids[j] != z_table.rows[r][c_id]) ++j;
    draws[it][j](node, 0) = z_table.num(r, c_z1);
    draws[it][j](node, 1) = z_table.num(r, c_z2);
  }

  const int m = spec.obs_grid.size();
  std::vector<MatrixXd> deg;
  deg.reserve(n_draws);
  for (const auto& z : draws) deg.push_back(make_network_state(z, spec).degrees);

  CsvWriter csv(join_path(dir, "degree_curves.csv"),
                {"individual", "time", "mean", "q025", "q975"});
  std::vector<double> vals(n_draws);
  for (int j = 0; j < J; ++j)
    for (int g = 0; g < m; ++g) {
      for (long d = 0; d < n_draws; ++d) vals[d] = deg[d](j, g);
      std::sort(vals.begin(), vals.end());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= n_draws;
      const auto q = [&](double p) {
        const double idx = p * (n_draws - 1);
        const long lo = static_cast<long>(idx);
        const long hi = std::min(lo + 1, n_draws - 1);
        return vals[lo] + (idx - lo) * (vals[hi] - vals[lo]);
      };
      csv.row_mixed({ids[j], csv.cell(spec.obs_grid.nodes[g]), csv.cell(mean),
                     csv.cell(q(0.025)), csv.cell(q(0.975))});
    }
  csv.close();
  manifest.add_file("degree_curves.csv");

  touch_shared_schema(cfg);
  cfg.require_all_consumed();
  manifest.write();
  std::cout << "degree: wrote " << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const Config& cfg) {
  const std::string dir = resolve_out_dir(cfg);
  const std::uint64_t seed = run_seed(cfg);
  RunManifest manifest(dir, config_echo(cfg), seed);
  const bool timestamp = cfg.get_bool("report.timestamp", false);
  const std::string sub = "report";
  ensure_dir(join_path(dir, sub));

  const std::vector<std::string> palette{"#d62728", "#1f77b4", "#2ca02c",
                                         "#9467bd", "#ff7f0e", "#8c564b"};
  int rendered = 0;

  // warp derivative curves from every bma_<id> directory
  namespace fs = std::filesystem;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("bma_", 0) == 0) {
      const std::string csv_path = (entry.path() / "warp_derivative.csv").string();
      if (!fs::exists(csv_path)) continue;
      const CsvTable t = read_csv(csv_path);
      const int ct = t.col("t"), ca = t.col("averaged"), clo = t.col("lo"), chi = t.col("hi");
      SvgSeries avg, lo, hi;
      avg.color = palette[0];
      lo.color = hi.color = "#bbbbbb";
      lo.dashed = hi.dashed = true;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        avg.x.push_back(t.num(r, ct));
        avg.y.push_back(t.num(r, ca));
        lo.x.push_back(t.num(r, ct));
        lo.y.push_back(t.num(r, clo));
        hi.x.push_back(t.num(r, ct));
        hi.y.push_back(t.num(r, chi));
      }
      const std::string out_csv = sub + "/warp_derivative_" + name.substr(4) + ".csv";
      write_text_file(join_path(dir, out_csv), read_text_file(csv_path));
      manifest.add_file(out_csv);
      const std::string out_svg = sub + "/warp_derivative_" + name.substr(4) + ".svg";
      write_svg_chart(join_path(dir, out_svg), "warp derivative " + name.substr(4),
                      {lo, hi, avg}, timestamp, 1.0);
      manifest.add_file(out_svg);
      ++rendered;
    }
    if (name.rfind("predict_", 0) == 0) {
      const std::string csv_path = (entry.path() / "trajectory_draws.csv").string();
      if (!fs::exists(csv_path)) continue;
      const CsvTable t = read_csv(csv_path);
      const int cd = t.col("draw"), cx = t.col("x"), cy = t.col("y");
      std::vector<SvgSeries> series;
      int last_draw = -1;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int d = static_cast<int>(t.num(r, cd));
        if (d >= 20) break;  // a readable subsample of realizations
        if (d != last_draw) {
          series.emplace_back();
          series.back().color = palette[d % palette.size()];
          last_draw = d;
        }
        series.back().x.push_back(t.num(r, cx));
        series.back().y.push_back(t.num(r, cy));
      }
      const std::string out_svg = sub + "/trajectory_" + name.substr(8) + ".svg";
      write_svg_chart(join_path(dir, out_svg), "trajectory realizations " + name.substr(8),
                      series, timestamp);
      manifest.add_file(out_svg);
      ++rendered;
    }
  }

  // degree curves
  if (fs::exists(join_path(dir, "degree_curves.csv"))) {
    const CsvTable t = read_csv(join_path(dir, "degree_curves.csv"));
    const int cid = t.col("individual"), ct = t.col("time"), cm = t.col("mean");
    std::map<std::string, SvgSeries> series;
    int color = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto& s = series[t.rows[r][cid]];
      if (s.x.empty()) s.color = palette[color++ % palette.size()];
      s.x.push_back(t.num(r, ct));
      s.y.push_back(t.num(r, cm));
    }
    std::vector<SvgSeries> flat;
    for (auto& [k, v] : series) flat.push_back(v);
    write_text_file(join_path(dir, sub + "/degree_curves.csv"),
                    read_text_file(join_path(dir, "degree_curves.csv")));
    manifest.add_file(sub + "/degree_curves.csv");
    write_svg_chart(join_path(dir, sub + "/degree.svg"), "individual degree", flat,
                    timestamp);
    manifest.add_file(sub + "/degree.svg");
    ++rendered;
  }

  // joint-vs-independent uncertainty curves
  if (fs::exists(join_path(dir, "network/uncertainty.csv"))) {
    const CsvTable t = read_csv(join_path(dir, "network/uncertainty.csv"));
    const int cid = t.col("individual"), ct = t.col("time"), cj = t.col("radius_joint"),
              ci = t.col("radius_independent");
    std::map<std::string, std::pair<SvgSeries, SvgSeries>> series;
    int color = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto& pair = series[t.rows[r][cid]];
      if (pair.first.x.empty()) {
        pair.first.color = pair.second.color = palette[color++ % palette.size()];
        pair.second.dashed = true;
      }
      pair.first.x.push_back(t.num(r, ct));
      pair.first.y.push_back(t.num(r, cj));
      pair.second.x.push_back(t.num(r, ct));
      pair.second.y.push_back(t.num(r, ci));
    }
    std::vector<SvgSeries> flat;
    for (auto& [k, v] : series) {
      flat.push_back(v.first);
      flat.push_back(v.second);
    }
    write_text_file(join_path(dir, sub + "/uncertainty.csv"),
                    read_text_file(join_path(dir, "network/uncertainty.csv")));
    manifest.add_file(sub + "/uncertainty.csv");
    write_svg_chart(join_path(dir, sub + "/uncertainty.svg"),
                    "credible radius: joint (solid) vs independent (dashed)", flat,
                    timestamp);
    manifest.add_file(sub + "/uncertainty.svg");
    ++rendered;
  }

  if (rendered == 0)
    throw std::runtime_error("report: nothing to render in " + dir +
                             " (run fit/bma/predict/fit-network/degree first)");

  touch_shared_schema(cfg);
  cfg.require_all_consumed();
  manifest.write();
  std::cout << "report: rendered " << rendered << " charts in "
            << join_path(dir, sub) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"process-convolution movement models for telemetry"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const Config&) = nullptr;
  for (const auto& [name, desc, fn] :
       std::vector<std::tuple<std::string, std::string, int (*)(const Config&)>>{
           {"simulate", "generate synthetic telemetry with known truth", cmd_simulate},
           {"fit", "fit the single-individual model with warp screening", cmd_fit},
           {"fit-network", "fit the joint migratory-network model", cmd_fit_network},
           {"bma", "combine per-warp fits into posterior model probabilities", cmd_bma},
           {"predict", "draw model-averaged posterior predictive trajectories", cmd_predict},
           {"degree", "summarize individual network degree from stored draws", cmd_degree},
           {"report", "render plot-ready CSVs and SVG line charts", cmd_report}}) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("-c,--config", args.config_path, "config file (key = value with [sections])");
    sub->add_option("-o,--out", args.out_dir, "run directory (default: run.out_dir, then $MOVECONV_RUN_DIR)");
    sub->add_option("-s,--seed", args.seed, "override run.seed");
    sub->callback([&handler, fn]() { handler = fn; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return handler(load_config(args));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
