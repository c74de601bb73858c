#pragma once

#include "pcvmtl/pcvmtl.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace pcvmtl::cli {

struct RunConfig {
  std::string source;
  std::string target;
  std::string format = "csv";
  std::string method = "ntvm";
  std::string pair;
  std::vector<double> thetas{1.0};
  std::vector<double> zetas{1.0};
  std::vector<Index> landmarks{0};
  int reps = 5;
  std::uint64_t seed = 0;
  std::string out = ".";
};

struct ToyConfig {
  std::string kind = "rotated-gaussians";
  Index n = 200;
  Index m = 200;
  Index d = 20;
  double angle = 40.0;
  double shift = 2.0;
  std::uint64_t seed = 0;
  std::string out = ".";
};

namespace detail {

inline void add_run_options(CLI::App& app, RunConfig& cfg, std::string& config_path) {
  app.add_option("--config", config_path, "flat key = value file; command-line flags override it");
  app.add_option("--source", cfg.source, "labeled source dataset");
  app.add_option("--target", cfg.target, "target dataset (labels used for scoring only)");
  app.add_option("--format", cfg.format, "csv (label in first column) or sparse")
      ->check(CLI::IsMember({"csv", "sparse"}));
  app.add_option("--method", cfg.method, "pcvm, pctkvm or ntvm");
  app.add_option("--pair", cfg.pair, "dataset pair name used in reports");
  app.add_option("--theta", cfg.thetas, "RBF width; several values form a grid")->expected(1, -1);
  app.add_option("--zeta", cfg.zetas, "eigenspectrum damping (pctkvm)")->expected(1, -1);
  app.add_option("--landmarks", cfg.landmarks, "landmark counts (0 = method default)")->expected(1, -1);
  app.add_option("--reps", cfg.reps, "repetitions")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "64-bit seed");
  app.add_option("--out", cfg.out, "output directory");
}

/// Fills options still unset on the command line from a flat TOML-style file.
inline void apply_config_file(CLI::App& app, const std::string& path) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path)) throw InputError("no such config file: " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw InputError("config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (!item.parents.empty() || item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = app.get_option("--" + item.name);
    } catch (const CLI::OptionNotFound&) {
      throw InputError("config file " + path + ": unknown key '" + item.name + "'");
    }
    if (opt->count() > 0 || item.name == "config") continue;
    auto inputs = item.inputs;
    // Paths inside a config file are relative to the file itself.
    if (item.name == "source" || item.name == "target" || item.name == "out") {
      for (auto& v : inputs) {
        if (!v.empty() && std::filesystem::path(v).is_relative()) {
          v = (std::filesystem::path(path).parent_path() / v).lexically_normal().string();
        }
      }
    }
    try {
      opt->add_result(inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw InputError("config file " + path + ": key '" + item.name + "': " + e.what());
    }
  }
}

inline void check_required(const RunConfig& cfg) {
  if (cfg.source.empty()) throw InputError("--source is required (flag or config key)");
  if (cfg.target.empty()) throw InputError("--target is required (flag or config key)");
}

inline std::pair<Dataset, Dataset> load_pair(const RunConfig& cfg) {
  for (const auto& p : {cfg.source, cfg.target}) {
    if (!std::filesystem::exists(p)) throw InputError("no such file: " + p);
  }
  if (cfg.format == "csv") return {load_dense_csv(cfg.source), load_dense_csv(cfg.target)};
  Dataset z = load_sparse(cfg.source);
  Dataset x = load_sparse(cfg.target);
  // Sparse files only imply a dimension; pad both to the larger one.
  const Index d = std::max(z.d(), x.d());
  for (Dataset* ds : {&z, &x}) {
    const Index old = ds->d();
    ds->features.conservativeResize(Eigen::NoChange, d);
    ds->features.rightCols(d - old).setZero();
  }
  return {std::move(z), std::move(x)};
}

inline std::string pair_name(const RunConfig& cfg) {
  if (!cfg.pair.empty()) return cfg.pair;
  return pcvmtl::detail::file_stem(cfg.source) + "->" + pcvmtl::detail::file_stem(cfg.target);
}

inline json config_echo(const RunConfig& cfg) {
  return json{{"source", cfg.source},     {"target", cfg.target},   {"format", cfg.format},
              {"method", cfg.method},     {"pair", pair_name(cfg)}, {"theta", cfg.thetas},
              {"zeta", cfg.zetas},        {"landmarks", cfg.landmarks}, {"reps", cfg.reps},
              {"seed", cfg.seed},         {"out", cfg.out}};
}

inline void write_manifest(const std::string& dir, const std::string& command, const json& config,
                           std::uint64_t seed, const json& extra = json::object()) {
  json manifest{{"command", command},
                {"version", PCVMTL_VERSION},
                {"seed", seed},
                {"config", config}};
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  auto out = open_output((std::filesystem::path(dir) / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
}

inline int cmd_run(const RunConfig& cfg, std::ostream& out) {
  check_required(cfg);
  const auto factory = make_method(cfg.method);
  auto [source, target] = load_pair(cfg);
  ensure_dir(cfg.out);

  MethodParams params{cfg.thetas.front(), cfg.zetas.front(), cfg.landmarks.front()};
  json extra = json::object();
  if (cfg.thetas.size() * cfg.zetas.size() * cfg.landmarks.size() > 1) {
    const auto grid = grid_search(source, {cfg.thetas, cfg.zetas, cfg.landmarks}, factory, cfg.seed);
    params = grid.best;
    extra["grid_best"] = to_json(grid.best);
    extra["grid_best_source_accuracy"] = grid.best_accuracy;
  }

  const auto report = five_by_two_cv(source, target, factory, params, cfg.seed,
                                     {cfg.method, pair_name(cfg), cfg.reps});
  const auto rows = sparsity_and_time_report(report);
  const std::filesystem::path dir(cfg.out);
  open_output((dir / "report.json").string()) << to_json(report).dump(2) << '\n';
  auto summary = open_output((dir / "summary.csv").string());
  write_summary_csv(summary, rows);
  auto timings = open_output((dir / "timings.csv").string());
  write_timings_csv(timings, report);
  extra["params"] = to_json(params);
  write_manifest(cfg.out, "run", config_echo(cfg), cfg.seed, extra);

  const auto& row = rows.front();
  out << row.method << ": mean error " << pcvmtl::detail::fixed(100.0 * row.mean_error, 2)
      << "%, mean model vectors " << pcvmtl::detail::fixed(row.mean_model_vectors, 1)
      << ", mean fit seconds " << pcvmtl::detail::fixed(row.mean_fit_seconds, 4) << '\n';
  return 0;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  check_required(cfg);
  if (cfg.method != "ntvm") {
    make_method(cfg.method);  // unknown names report the valid list
    throw InputError("sweep requires method ntvm, got '" + cfg.method + "'");
  }
  auto [source, target] = load_pair(cfg);
  ensure_dir(cfg.out);

  const Index limit = std::min(target.n(), target.d());
  std::vector<Index> s_values;
  for (Index s : cfg.landmarks) {
    if (s < 1) throw InputError("sweep: landmark counts must be >= 1");
    if (s > limit) {
      err << "warning: s = " << s << " exceeds min(n, d) = " << limit << "; clamped\n";
      s = limit;
    }
    s_values.push_back(s);
  }

  double theta = cfg.thetas.front();
  json extra = json::object();
  if (cfg.thetas.size() > 1) {
    GridSpec grid;
    grid.thetas = cfg.thetas;
    theta = grid_search(source, grid, make_method("ntvm"), cfg.seed).best.theta;
    extra["grid_best_theta"] = theta;
  }
  const auto rows = landmark_sweep(source, target, s_values, cfg.reps, cfg.seed, theta);
  auto file = open_output((std::filesystem::path(cfg.out) / "sweep.csv").string());
  write_sweep_csv(file, rows);
  write_manifest(cfg.out, "sweep", config_echo(cfg), cfg.seed, extra);

  out << "sweep: " << rows.size() << " landmark settings written to "
      << (std::filesystem::path(cfg.out) / "sweep.csv").string() << '\n';
  return 0;
}

inline int cmd_gen_toy(const ToyConfig& cfg, std::ostream& out) {
  ToyPair pair;
  if (cfg.kind == "rotated-gaussians") {
    pair = rotated_gaussians(cfg.n, cfg.m, cfg.d, cfg.angle, cfg.seed);
  } else if (cfg.kind == "shifted-means") {
    pair = shifted_means(cfg.n, cfg.m, cfg.d, cfg.shift, cfg.seed);
  } else {
    throw InputError("unknown toy kind '" + cfg.kind + "' (valid: rotated-gaussians, shifted-means)");
  }
  ensure_dir(cfg.out);
  const std::filesystem::path dir(cfg.out);
  auto src = open_output((dir / "source.csv").string());
  write_dense_csv(src, pair.source);
  auto tgt = open_output((dir / "target.csv").string());
  write_dense_csv(tgt, pair.target);
  const json echo{{"kind", cfg.kind}, {"n", cfg.n},         {"m", cfg.m},   {"d", cfg.d},
                  {"angle", cfg.angle}, {"shift", cfg.shift}, {"seed", cfg.seed}, {"out", cfg.out}};
  write_manifest(cfg.out, "gen-toy", echo, cfg.seed);
  out << "wrote " << (dir / "source.csv").string() << " and " << (dir / "target.csv").string() << '\n';
  return 0;
}

}  // namespace detail

/// Parses `args` (without the program name) and runs one subcommand.
/// Exit status: 0 success, 1 configuration or data error, 2 numerical failure.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse probabilistic transfer classifiers: benchmarks and sweeps", "pcvmtl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PCVMTL_VERSION);

  RunConfig run_cfg;
  std::string run_config;
  auto* run = app.add_subcommand("run", "grid search (if several values given) then 5x2 cross-validation");
  detail::add_run_options(*run, run_cfg, run_config);

  RunConfig sweep_cfg;
  std::string sweep_config;
  sweep_cfg.landmarks = {1, 5, 10, 25, 50};
  auto* sweep = app.add_subcommand("sweep", "NTVM error per landmark count");
  detail::add_run_options(*sweep, sweep_cfg, sweep_config);

  ToyConfig toy_cfg;
  auto* toy = app.add_subcommand("gen-toy", "write a synthetic source/target pair as dense CSV");
  toy->add_option("--kind", toy_cfg.kind, "rotated-gaussians or shifted-means");
  toy->add_option("--n", toy_cfg.n, "source samples");
  toy->add_option("--m", toy_cfg.m, "target samples");
  toy->add_option("--d", toy_cfg.d, "dimension");
  toy->add_option("--angle", toy_cfg.angle, "target rotation in degrees");
  toy->add_option("--shift", toy_cfg.shift, "target mean shift");
  toy->add_option("--seed", toy_cfg.seed, "64-bit seed");
  toy->add_option("--out", toy_cfg.out, "output directory");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << PCVMTL_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (run->parsed()) {
      detail::apply_config_file(*run, run_config);
      return detail::cmd_run(run_cfg, out);
    }
    if (sweep->parsed()) {
      detail::apply_config_file(*sweep, sweep_config);
      return detail::cmd_sweep(sweep_cfg, out, err);
    }
    return detail::cmd_gen_toy(toy_cfg, out);
  } catch (const NumericalError& e) {
    err << "numerical failure in " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pcvmtl::cli
