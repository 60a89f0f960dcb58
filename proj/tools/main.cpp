// SPDX-License-Identifier: Apache-2.0
//
// pinnflow: physics-informed surrogate trainer for steady 2D RANS k-eps flow.
// Subcommands: synth (manufactured datasets), train, eval, sweep.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pinnflow/data.hpp"
#include "pinnflow/manifest.hpp"
#include "pinnflow/network.hpp"
#include "pinnflow/report.hpp"
#include "pinnflow/trainer.hpp"

namespace fs = std::filesystem;
using namespace pinnflow;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNan = 4;
constexpr int kExitCheckpoint = 5;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path resolve_out(std::string out, const std::string& command) {
  if (!out.empty()) return out;
  if (const char* root = std::getenv("PINNFLOW_OUT"))
    return fs::path(root) / command;
  throw UsageError("--out is required (or set PINNFLOW_OUT)");
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir))
    throw UsageError("output path is not a directory: " + dir.string());
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw UsageError("output directory is not empty (use --force): " +
                     dir.string());
  fs::create_directories(dir);
}

std::string format_s(double s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", s);
  return buf;
}

// ---- shared config loading ----------------------------------------------------

struct TrainSetup {
  std::vector<fs::path> case_dirs;
  NetworkConfig net;
  DatasetSpec data;
  TrainConfig train;
  std::string config_dump;  // resolved configuration, hashed into manifests
};

TrainSetup parse_train_json(const json& j, const fs::path& base) {
  TrainSetup s;
  if (!j.contains("cases") || j.at("cases").empty())
    throw UsageError("config needs a non-empty 'cases' list");
  for (const auto& c : j.at("cases")) {
    fs::path p = c.get<std::string>();
    s.case_dirs.push_back(p.is_absolute() ? p : base / p);
  }

  const json net = j.value("network", json::object());
  s.net.widths = net.value("widths", std::vector<int>{64, 64, 64, 64});
  s.net.n_freq = net.value("n_freq", 10);
  std::string mode = j.value("mode", s.case_dirs.size() > 1 ? "parametric-re"
                                                            : "fixed-re");
  if (mode != "fixed-re" && mode != "parametric-re")
    throw UsageError("mode must be fixed-re or parametric-re");
  s.net.mode =
      mode == "parametric-re" ? InputMode::kParametricRe : InputMode::kFixedRe;

  const json d = j.value("data", json::object());
  s.data.n_data = d.value("n_data", 3000);
  s.data.n_collocation = d.value("n_collocation", 3000);
  s.data.validation_fraction = d.value("validation_fraction", 0.2);

  const json t = j.value("train", json::object());
  s.train.pretrain_steps = t.value("pretrain_steps", 2000);
  s.train.main_steps = t.value("main_steps", 20000);
  s.train.batch_data = t.value("batch_data", 256);
  s.train.batch_collocation = t.value("batch_collocation", 256);
  s.train.batch_boundary = t.value("batch_boundary", 64);
  s.train.lr0 = t.value("lr0", 1e-3);
  s.train.decay = t.value("decay", 0.95);
  s.train.decay_interval = t.value("decay_interval", 1000);
  s.train.conv_window = t.value("conv_window", 500);
  s.train.conv_tol = t.value("conv_tol", 1e-4);
  s.train.lambda_renorm_every = t.value("lambda_renorm_every", 0);
  s.train.checkpoint_every = t.value("checkpoint_every", 500);

  const json turb = j.value("turb", json::object());
  const std::string sign = turb.value("eps_destruction_sign", "standard");
  if (sign != "standard" && sign != "paper")
    throw UsageError("eps_destruction_sign must be standard or paper");
  s.train.turb.eps_destruction_sign =
      sign == "paper" ? TurbConstants::EpsSign::kPaper
                      : TurbConstants::EpsSign::kStandard;

  const auto seed = j.value("seed", 0ULL);
  s.net.seed = seed;
  s.train.seed = seed;
  s.data.seed = seed;
  return s;
}

TrainSetup load_train_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  json j;
  in >> j;
  auto s = parse_train_json(j, path.parent_path());
  s.config_dump = j.dump();
  return s;
}

void apply_overrides(TrainSetup& s, std::optional<std::uint64_t> seed,
                     int workers, const std::string& ablation) {
  if (seed) {
    s.net.seed = *seed;
    s.train.seed = *seed;
    s.data.seed = *seed;
  }
  s.train.workers = workers;
  if (ablation == "data-only")
    s.train.ablation = Ablation::kDataOnly;
  else if (ablation == "no-log-eps")
    s.train.ablation = Ablation::kNoLogEps;
  else if (ablation == "none")
    s.train.ablation = Ablation::kNone;
  else
    throw UsageError("unknown ablation: " + ablation);
}

Domain domain_of(const CaseDataset& ds) {
  if (ds.mms) return ds.mms->domain;
  Domain d{1e300, -1e300, 1e300, -1e300};
  for (const auto& s : ds.cloud) {
    d.x0 = std::min(d.x0, s.x);
    d.x1 = std::max(d.x1, s.x);
    d.y0 = std::min(d.y0, s.y);
    d.y1 = std::max(d.y1, s.y);
  }
  return d;
}

// ---- synth ----------------------------------------------------------------------

int cmd_synth(const std::string& family_name_arg, std::vector<double> s_list,
              double s_min, double s_max, int n_cases, int cloud_n,
              int boundary_n, std::uint64_t seed, std::string out_arg,
              bool force, double scale_length, double scale_u,
              double scale_rho) {
  const auto family = family_from(family_name_arg);
  if (!family) throw UsageError("unknown family: " + family_name_arg);
  if (s_list.empty()) {
    if (n_cases < 1) throw UsageError("need --s or --s-min/--s-max/--n-cases");
    for (int i = 0; i < n_cases; ++i)
      s_list.push_back(n_cases == 1 ? s_min
                                    : s_min + (s_max - s_min) * i / (n_cases - 1));
  }
  const fs::path out = resolve_out(out_arg, "synth");
  prepare_out_dir(out, force);

  RunManifest man;
  man.command = "synth";
  man.started = iso_timestamp_now();
  man.seed = seed;
  man.provenance = "mms";
  const RefScales scales{scale_length, scale_u, scale_rho};

  for (double s : s_list) {
    auto ds = synth_mms_dataset(*family, s, cloud_n, boundary_n, seed, scales);
    ds.name = std::string(family_name(*family)) + "-s" + format_s(s);
    const fs::path dir = out / ds.name;
    fs::create_directories(dir);
    write_case_dir(dir, ds, seed);
    man.artifacts.push_back((dir / "case.json").string());
    man.artifacts.push_back((dir / "cloud.csv").string());
    man.artifacts.push_back((dir / "boundary.csv").string());
  }
  json cfg{{"family", family_name_arg}, {"s", s_list},   {"cloud_n", cloud_n},
           {"boundary_n", boundary_n},  {"seed", seed},  {"length", scale_length},
           {"u_inlet", scale_u},        {"rho", scale_rho}};
  man.config_hash = fnv1a64(cfg.dump());
  man.finished = iso_timestamp_now();
  man.write(out / "manifest.json");
  std::printf("synth: wrote %zu case(s) under %s\n", s_list.size(),
              out.string().c_str());
  return 0;
}

// ---- train ----------------------------------------------------------------------

int run_training(TrainSetup setup, const fs::path& out, bool force,
                 const std::string& command) {
  prepare_out_dir(out, force);

  std::vector<CaseDataset> cases;
  for (const auto& dir : setup.case_dirs) {
    auto ds = load_case_dir(dir);
    finalize_splits(ds, setup.data, setup.train.turb);
    cases.push_back(std::move(ds));
  }

  FieldNetworkSet nets(setup.net);
  Trainer trainer(nets, std::move(cases), setup.train);

  RunManifest man;
  man.command = command;
  man.started = iso_timestamp_now();
  man.seed = setup.train.seed;
  man.provenance = setup.config_dump.empty() ? "inline" : "config";
  man.config_hash = fnv1a64(setup.config_dump);

  auto pre = trainer.pretrain();
  auto mainrep = trainer.train_full();

  std::vector<LogRow> rows = pre.log;
  rows.insert(rows.end(), mainrep.log.begin(), mainrep.log.end());
  write_curve_csv(out / "curves.csv", rows);
  man.artifacts.push_back((out / "curves.csv").string());

  nets.save(out / "checkpoint.bin");
  man.artifacts.push_back((out / "checkpoint.bin").string());
  trainer.save_state(out / "trainer_state.bin");
  man.artifacts.push_back((out / "trainer_state.bin").string());

  for (const auto& cs : trainer.cases()) {
    const double re_norm = nets.config().normalize_re(cs.re);
    const auto metrics = validation_errors(nets, cs.validation_points, re_norm);
    const fs::path mpath = out / ("metrics-" + cs.name + ".json");
    write_metrics_json(mpath, metrics, cs.name, cs.re);
    man.artifacts.push_back(mpath.string());
  }

  man.finished = iso_timestamp_now();
  man.write(out / "manifest.json");

  const double final_total =
      mainrep.log.empty() ? (pre.log.empty() ? 0.0 : pre.log.back().loss.total)
                          : mainrep.log.back().loss.total;
  std::printf(
      "%s: steps=%d converged=%d nan_abort=%d final_total=%.6g out=%s\n",
      command.c_str(), mainrep.steps_run, mainrep.converged ? 1 : 0,
      mainrep.nan_abort ? 1 : 0, final_total, out.string().c_str());
  return mainrep.nan_abort ? kExitNan : 0;
}

// ---- eval -----------------------------------------------------------------------

int cmd_eval(const fs::path& ckpt, const fs::path& case_dir,
             std::string out_arg, bool force, std::string grids_arg,
             std::string maps_arg, int nx, int ny, bool emit_plot_script,
             bool full_cloud) {
  const fs::path out = resolve_out(out_arg, "eval");
  prepare_out_dir(out, force);

  FieldNetworkSet nets = FieldNetworkSet::load(ckpt);
  auto ds = load_case_dir(case_dir);
  DatasetSpec spec;
  spec.n_data = 0;
  spec.n_collocation = 0;
  spec.seed = nets.config().seed;
  finalize_splits(ds, spec);

  const double re_norm = nets.config().normalize_re(ds.re);
  std::span<const FieldSample> val_points =
      full_cloud ? std::span<const FieldSample>(ds.cloud)
                 : std::span<const FieldSample>(ds.validation_points);

  RunManifest man;
  man.command = "eval";
  man.started = iso_timestamp_now();
  man.seed = nets.config().seed;
  man.provenance = ds.provenance == Provenance::kMms ? "mms" : "csv";
  man.config_hash =
      fnv1a64(ckpt.string() + "|" + case_dir.string() + (full_cloud ? "|full" : ""));

  const auto metrics = validation_errors(nets, val_points, re_norm);
  write_metrics_json(out / "metrics.json", metrics, ds.name, ds.re);
  man.artifacts.push_back((out / "metrics.json").string());

  const Domain dom = domain_of(ds);
  GridSpec gspec{nx, ny, dom.x0, dom.x1, dom.y0, dom.y1};

  auto split_csv = [](const std::string& s) {
    std::vector<std::string> out_items;
    std::size_t start = 0;
    while (start <= s.size() && !s.empty()) {
      const auto pos = s.find(',', start);
      out_items.push_back(s.substr(
          start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out_items;
  };

  for (const auto& var : split_csv(grids_arg)) {
    const auto grid = predict_grid(nets, gspec, var, re_norm);
    const fs::path gpath = out / ("grid-" + var + ".csv");
    export_grid(grid, gpath);
    man.artifacts.push_back(gpath.string());
  }
  for (const auto& var : split_csv(maps_arg)) {
    int v = -1;
    for (int i = 0; i < kNumVars; ++i)
      if (var == kVarNames[i]) v = i;
    if (v < 0) throw UsageError("unknown error-map variable: " + var);
    const auto grid = error_map(nets, ds.cloud, v, gspec, re_norm);
    const fs::path gpath = out / ("error-" + var + ".csv");
    export_grid(grid, gpath);
    man.artifacts.push_back(gpath.string());
  }
  if (emit_plot_script) {
    write_plot_script(out / "plot_grid.py");
    man.artifacts.push_back((out / "plot_grid.py").string());
  }

  man.finished = iso_timestamp_now();
  man.write(out / "manifest.json");
  std::printf("eval: case=%s re=%g rel_err_u=%.6g rel_err_v=%.6g out=%s\n",
              ds.name.c_str(), ds.re, metrics.rel_err[kU], metrics.rel_err[kV],
              out.string().c_str());
  return 0;
}

// ---- sweep ----------------------------------------------------------------------

int cmd_sweep(const fs::path& config_path, std::optional<std::uint64_t> seed,
              int workers, std::string out_arg, bool force) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config: " + config_path.string());
  json j;
  in >> j;

  json train_json = j;
  train_json["cases"] = j.at("train_cases");
  train_json["mode"] = "parametric-re";
  auto setup = parse_train_json(train_json, config_path.parent_path());
  setup.config_dump = j.dump();
  apply_overrides(setup, seed, workers, "none");

  const fs::path out = resolve_out(out_arg, "sweep");
  const int rc = run_training(setup, out, force, "sweep");
  if (rc != 0) return rc;

  FieldNetworkSet nets = FieldNetworkSet::load(out / "checkpoint.bin");

  json summary;
  double train_err_sum = 0.0;
  int train_count = 0;
  for (const auto& dir : setup.case_dirs) {
    auto ds = load_case_dir(dir);
    DatasetSpec spec;
    spec.n_data = 0;
    spec.n_collocation = 0;
    spec.seed = setup.train.seed;
    finalize_splits(ds, spec);
    const auto m = validation_errors(nets, ds.validation_points,
                                     nets.config().normalize_re(ds.re));
    summary["train"][ds.name] = {{"re", ds.re}, {"rel_err_u", m.rel_err[kU]},
                                 {"rel_err_v", m.rel_err[kV]},
                                 {"rel_err_p", m.rel_err[kP]}};
    train_err_sum += m.rel_err[kU];
    ++train_count;
  }
  summary["train_mean_rel_err_u"] = train_err_sum / std::max(train_count, 1);

  if (j.contains("eval_cases")) {
    for (const auto& c : j.at("eval_cases")) {
      fs::path p = c.get<std::string>();
      if (!p.is_absolute()) p = config_path.parent_path() / p;
      auto ds = load_case_dir(p);
      const auto m = validation_errors(nets, ds.cloud,
                                       nets.config().normalize_re(ds.re));
      summary["unseen"][ds.name] = {{"re", ds.re}, {"rel_err_u", m.rel_err[kU]},
                                    {"rel_err_v", m.rel_err[kV]},
                                    {"rel_err_p", m.rel_err[kP]}};
    }
  }
  std::ofstream sout(out / "sweep_summary.json");
  sout << summary.dump(2) << "\n";
  std::printf("sweep: summary written to %s\n",
              (out / "sweep_summary.json").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pinnflow: RANS k-epsilon physics-informed surrogate trainer.\n"
      "Output directories default to $PINNFLOW_OUT/<command> when --out is "
      "omitted."};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate manufactured datasets");
  std::string family = "trig-vortex";
  std::vector<double> s_list;
  double s_min = 2800, s_max = 5600;
  int n_cases = 0, cloud_n = 15000, boundary_n = 200;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  bool synth_force = false;
  double scale_length = 0.1, scale_u = 2.0, scale_rho = 1.2;
  synth->add_option("--family", family, "trig-vortex or poly-channel");
  synth->add_option("--s", s_list, "case parameter(s), repeatable");
  synth->add_option("--s-min", s_min, "range start for --n-cases");
  synth->add_option("--s-max", s_max, "range end for --n-cases");
  synth->add_option("--n-cases", n_cases, "number of uniformly spaced cases");
  synth->add_option("--cloud-n", cloud_n, "points in the full cloud");
  synth->add_option("--boundary-n", boundary_n, "points per boundary edge");
  synth->add_option("--seed", synth_seed, "master seed");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_flag("--force", synth_force, "allow writing into a non-empty dir");
  synth->add_option("--scale-length", scale_length, "reference length [m]");
  synth->add_option("--scale-u", scale_u, "inlet velocity scale [m/s]");
  synth->add_option("--scale-rho", scale_rho, "density scale [kg/m^3]");

  // train
  auto* train = app.add_subcommand("train", "pretrain + full PINN training");
  std::string train_config;
  std::string train_out;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  int workers = 1;
  std::string ablation = "none";
  bool train_force = false;
  train->add_option("--config", train_config, "training config json")->required();
  train->add_option("--out", train_out, "output directory");
  train->add_option("--seed", seed_flag, "override config seed")
      ->each([&](const std::string&) { seed_given = true; });
  train->add_option("--workers", workers, "worker threads (1 = reference)");
  train->add_option("--ablation", ablation, "none | data-only | no-log-eps");
  train->add_flag("--force", train_force, "allow writing into a non-empty dir");

  // eval
  auto* eval = app.add_subcommand("eval", "metrics and field grids");
  std::string ckpt, case_dir, eval_out;
  std::string grids = "vmag,p";
  std::string maps = "u,p";
  int nx = 256, ny = 128;
  bool plot_script = false, eval_force = false, full_cloud = false;
  eval->add_option("--checkpoint", ckpt, "network checkpoint")->required();
  eval->add_option("--case", case_dir, "case directory")->required();
  eval->add_option("--out", eval_out, "output directory");
  eval->add_option("--grids", grids, "comma list of u,v,p,k,eps,vmag");
  eval->add_option("--error-maps", maps, "comma list of u,v,p,k,eps");
  eval->add_option("--nx", nx, "grid columns");
  eval->add_option("--ny", ny, "grid rows");
  eval->add_flag("--plot-script", plot_script, "emit companion plot script");
  eval->add_flag("--full-cloud", full_cloud,
                 "evaluate over the full cloud instead of the holdout");
  eval->add_flag("--force", eval_force, "allow writing into a non-empty dir");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "parametric training + evaluation");
  std::string sweep_config, sweep_out;
  std::uint64_t sweep_seed = 0;
  bool sweep_seed_given = false, sweep_force = false;
  int sweep_workers = 1;
  sweep->add_option("--config", sweep_config, "sweep config json")->required();
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--seed", sweep_seed, "override config seed")
      ->each([&](const std::string&) { sweep_seed_given = true; });
  sweep->add_option("--workers", sweep_workers, "worker threads");
  sweep->add_flag("--force", sweep_force, "allow writing into a non-empty dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth)
      return cmd_synth(family, s_list, s_min, s_max, n_cases, cloud_n,
                       boundary_n, synth_seed, synth_out, synth_force,
                       scale_length, scale_u, scale_rho);
    if (*train) {
      auto setup = load_train_config(train_config);
      apply_overrides(setup,
                      seed_given ? std::optional<std::uint64_t>(seed_flag)
                                 : std::nullopt,
                      workers, ablation);
      return run_training(setup, resolve_out(train_out, "train"), train_force,
                          "train");
    }
    if (*eval)
      return cmd_eval(ckpt, case_dir, eval_out, eval_force, grids, maps, nx,
                      ny, plot_script, full_cloud);
    if (*sweep)
      return cmd_sweep(sweep_config,
                       sweep_seed_given
                           ? std::optional<std::uint64_t>(sweep_seed)
                           : std::nullopt,
                       sweep_workers, sweep_out, sweep_force);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCheckpoint;
  } catch (const CsvError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitUsage;
}
