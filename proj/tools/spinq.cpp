// Command line front end: `sweep` runs a parameter sweep, `detect` scans a
// sweep CSV for features.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinq/sweep.hpp"

using namespace spinq;

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Splice `--config FILE` entries in front of the explicit arguments so that the
// command line wins.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
    } else {
      continue;
    }
    std::vector<std::string> from_file;
    for (const auto& [k, v] : read_config_file(path)) from_file.push_back("--" + k + "=" + v);
    // keep the subcommand name first
    const std::size_t at = args.empty() ? 0 : 1;
    args.insert(args.begin() + static_cast<long>(at), from_file.begin(), from_file.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-1 chain ground states, correlation and coherence measures, and phase-transition features"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write a CSV");
  std::string model = "xxz", delta_grid, theta_grid, backend = "dmrg", measures = "discord,mutual_info", out, plot,
              markers, central_bond = "last", checkpoint;
  int m = 100, sites = 12, workers = 1, max_iter = 400, min_iter = 10, m_max = 200, restarts = 50;
  std::uint64_t seed = 1;
  bool auto_m = false, no_symmetrize = false, no_predict = false;
  double energy_tol = 1e-9, lanczos_tol = 1e-9;
  sweep->add_option("--model", model, "xxz or blbq")->check(CLI::IsMember({"xxz", "blbq"}));
  sweep->add_option("--delta", delta_grid, "XXZ grid start:stop:step");
  sweep->add_option("--theta", theta_grid, "BLBQ grid start:stop:step in units of pi");
  sweep->add_option("--backend", backend, "dmrg or ed")->check(CLI::IsMember({"dmrg", "ed"}));
  sweep->add_option("--sites", sites, "chain length for the ed backend");
  sweep->add_option("--m", m, "kept states per DMRG block");
  sweep->add_flag("--auto-m", auto_m, "raise m until the truncation error is below 1e-6");
  sweep->add_option("--m-max", m_max, "upper bound for --auto-m");
  sweep->add_option("--max-iterations", max_iter, "DMRG growth steps");
  sweep->add_option("--min-iterations", min_iter, "DMRG growth steps before convergence is accepted");
  sweep->add_option("--energy-tol", energy_tol, "per-site energy convergence threshold");
  sweep->add_option("--lanczos-tol", lanczos_tol, "relative Lanczos residual");
  sweep->add_option("--central-bond", central_bond, "last, average, even or odd")
      ->check(CLI::IsMember({"last", "average", "even", "odd"}));
  sweep->add_flag("--no-symmetrize", no_symmetrize, "keep the raw central two-site state");
  sweep->add_flag("--no-predict", no_predict, "random Lanczos start vectors instead of wavefunction prediction");
  sweep->add_option("--checkpoint", checkpoint, "directory for per-point DMRG checkpoints");
  sweep->add_option("--measures", measures, "comma list of mutual_info, discord, c_re, c_l1, skew:K:side, skew1:K");
  sweep->add_option("--restarts", restarts, "discord optimizer restarts");
  sweep->add_option("--out", out, "CSV output path")->required();
  sweep->add_option("--plot", plot, "SVG output path");
  sweep->add_option("--markers", markers, "comma list of vertical reference lines for the plot");
  sweep->add_option("--workers", workers, "parallel grid points");
  sweep->add_option("--seed", seed, "root seed");
  sweep->add_option("--config", "flat key=value file with the same keys as the options");

  // detect
  auto* detect = app.add_subcommand("detect", "Detect features in a sweep CSV");
  std::string in, series = "discord", report;
  Thresholds th;
  detect->add_option("--in", in, "sweep CSV")->required();
  detect->add_option("--series", series, "comma list of columns; pairs are checked for crossings");
  detect->add_option("--report", report, "JSON output path (default: stdout)");
  detect->add_option("--jump-threshold", th.jump, "jump when |dy| exceeds this multiple of the median |dy|");
  detect->add_option("--kink-threshold", th.kink, "kink when |d2y| exceeds this multiple of the median |d2y|");
  detect->add_option("--zero-threshold", th.zero, "zero touch below this fraction of max |y|");
  detect->add_option("--basis-threshold", th.basis, "sudden basis change above this fingerprint distance");
  detect->add_option("--noise", th.noise, "differences below this fraction of the range count as flat");
  detect->add_option("--config", "flat key=value file with the same keys as the options");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sweep) {
      SweepConfig cfg;
      cfg.model = parse_model_kind(model);
      const std::string& grid = cfg.model == ModelKind::XXZ ? delta_grid : theta_grid;
      if (grid.empty())
        cfg.grid = cfg.model == ModelKind::XXZ ? Grid{-0.95, 1.5, 0.025} : Grid{0.0, 1.99, 0.01};
      else
        cfg.grid = parse_grid(grid);
      cfg.backend = backend == "ed" ? Backend::ed : Backend::dmrg;
      cfg.ed_sites = sites;
      cfg.dmrg.m = m;
      cfg.dmrg.auto_m = auto_m;
      cfg.dmrg.m_max = m_max;
      cfg.dmrg.max_iterations = max_iter;
      cfg.dmrg.min_iterations = min_iter;
      cfg.dmrg.energy_convergence_tol = energy_tol;
      cfg.dmrg.lanczos_tol = lanczos_tol;
      cfg.dmrg.symmetrize = !no_symmetrize;
      cfg.dmrg.predict_wavefunction = !no_predict;
      cfg.dmrg.central_bond = central_bond == "average" ? CentralBond::average
                              : central_bond == "even"  ? CentralBond::even
                              : central_bond == "odd"   ? CentralBond::odd
                                                        : CentralBond::last;
      if (!checkpoint.empty()) cfg.dmrg.checkpoint_path = checkpoint;
      cfg.measures = parse_measures(measures);
      cfg.discord.restarts = restarts;
      cfg.output_path = out;
      cfg.workers = workers;
      cfg.seed = seed;
      const auto records = run_sweep(cfg);
      std::size_t bad = 0;
      for (const auto& r : records) bad += r.status != "ok";
      std::fprintf(stderr, "sweep: %zu points written to %s (%zu flagged)\n", records.size(), out.c_str(), bad);
      if (!plot.empty()) {
        std::vector<std::string> names;
        for (const auto& mm : cfg.measures) names.push_back(mm.name());
        PlotOptions po;
        po.markers = parse_list(markers);
        po.x_label = cfg.model == ModelKind::XXZ ? "Delta" : "theta / pi";
        if (names.empty()) names.push_back("energy_per_site");
        emit_plot(records_to_table(cfg, records), names, plot, po);
      }
      return 0;
    }
    const Table table = read_csv(in);
    const auto rep = detect_features(table, parse_names(series), th);
    const std::string json = feature_report_json(rep);
    if (report.empty()) {
      std::cout << json;
    } else {
      std::ofstream os(report);
      if (!os) throw std::runtime_error("cannot write " + report);
      os << json;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
