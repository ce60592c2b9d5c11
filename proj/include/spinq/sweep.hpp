#pragma once

// Parameter sweeps: one ground state per grid point, the requested measures on
// its central reduced density matrices, CSV/SVG output and feature detection.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinq/dmrg.hpp"
#include "spinq/measures.hpp"
#include "spinq/models.hpp"

namespace spinq {

enum class Backend { dmrg, ed };

struct Grid {
  double start = 0.0;
  double stop = 1.0;
  double step = 0.1;

  /// start + i * step for every i with the point not beyond stop (inclusive,
  /// with a 1e-9 step tolerance).
  std::vector<double> points() const;
  void validate() const;
};

/// "start:stop:step"
Grid parse_grid(const std::string& text);

struct MeasureSpec {
  enum Kind { mutual_info, discord, c_re, c_l1, skew, skew1 } kind = mutual_info;
  char axis = 'z';                   // observable S^axis for skew / skew1
  Subsystem side = Subsystem::B;     // skew only; "local" means side B

  std::string name() const;
};

/// Comma separated list, e.g. "discord,mutual_info,skew:sx:local,skew1:sz".
std::vector<MeasureSpec> parse_measures(const std::string& text);

struct SweepConfig {
  ModelKind model = ModelKind::XXZ;
  Grid grid;                          // theta in units of pi for BLBQ
  Backend backend = Backend::dmrg;
  DmrgConfig dmrg;
  int ed_sites = 12;
  std::vector<MeasureSpec> measures;
  DiscordConfig discord;
  std::string output_path;            // CSV, written incrementally; empty: none
  int workers = 1;
  std::uint64_t seed = 1;

  void validate() const;
  ModelSpec spec_at(double parameter) const;
};

struct SweepRecord {
  double parameter = 0.0;
  std::vector<double> values;         // aligned with SweepConfig::measures
  double energy_per_site = 0.0;
  double truncation_error = 0.0;
  bool converged = false;
  int iterations = 0;
  int target_sz = 0;
  std::vector<double> fingerprint;    // optimal discord basis, empty without discord
  double basis_jump = 0.0;            // fingerprint distance to the previous grid point
  double wall_seconds = 0.0;          // not written to the CSV
  std::string status = "ok";
};

/// Ground state and measures at one parameter value.
SweepRecord evaluate_point(const SweepConfig& cfg, double parameter, std::uint64_t seed);

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

// ---- tabular I/O ----

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 if absent
  std::vector<double> series(const std::string& name) const;
};

std::vector<std::string> csv_header(const SweepConfig& cfg);
std::string csv_row(const SweepConfig& cfg, const SweepRecord& r);
void emit_csv(const SweepConfig& cfg, const std::vector<SweepRecord>& records, const std::string& path);
Table read_csv(const std::string& path);
Table records_to_table(const SweepConfig& cfg, const std::vector<SweepRecord>& records);

struct PlotOptions {
  std::vector<double> markers;        // vertical reference lines
  std::string x_label = "parameter";
  std::string title;
};

/// Standalone SVG with one polyline per selected series.
void emit_plot(const Table& table, const std::vector<std::string>& series, const std::string& path,
               const PlotOptions& opts = {});

// ---- feature detection ----

struct Thresholds {
  double jump = 10.0;        // |dy| over max(local, global) median |dy|
  int jump_window = 5;       // half width of the local median window
  double kink = 8.0;         // |d2y| over median |d2y|
  double zero = 1e-3;        // relative to max |y|
  double basis = 0.2;        // fingerprint distance
  double noise = 1e-6;       // relative to the series range
};

struct Feature {
  std::string kind;          // local_min, local_max, inflection, jump, kink, curvature_max,
                             // crossing, sudden_basis_change, zero_touch
  double location = 0.0;
  std::string series;
  double strength = 0.0;
};

struct FeatureReport {
  std::vector<Feature> features;

  std::vector<Feature> of_kind(const std::string& kind, const std::string& series = "") const;
};

/// Features of one series sampled at increasing x.
FeatureReport detect_features(const std::vector<double>& x, const std::vector<double>& y, const std::string& name,
                              const Thresholds& t = {});

/// Sign changes of a - b.
FeatureReport detect_crossings(const std::vector<double>& x, const std::vector<double>& a,
                               const std::vector<double>& b, const std::string& name, const Thresholds& t = {});

/// Jumps of the basis_jump column above the basis threshold.
FeatureReport detect_basis_changes(const std::vector<double>& x, const std::vector<double>& jumps,
                                   const std::string& name, const Thresholds& t = {});

/// Everything for the named series of a table; crossings for every pair.
FeatureReport detect_features(const Table& table, const std::vector<std::string>& series, const Thresholds& t = {});

std::string feature_report_json(const FeatureReport& r);
FeatureReport parse_feature_report_json(const std::string& text);

// ---- config files ----

/// Flat key=value text with '#' comments; keys match the CLI long options.
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace spinq
