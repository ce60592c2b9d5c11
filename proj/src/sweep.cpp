#include "spinq/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spinq/oracle.hpp"

namespace spinq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ContractViolation("cannot parse " + what + " '" + s + "'");
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

ComplexMatrix spin_component(char axis) {
  const auto s = spin1_operators();
  switch (axis) {
    case 'x': return s.sx;
    case 'y': return s.sy;
    case 'z': return s.sz;
  }
  throw ContractViolation(std::string("unknown spin component '") + axis + "'");
}

std::size_t fingerprint_size(ModelKind model) {
  return fingerprint_kind_for(model) == FingerprintKind::sz_populations ? 9 : 3;
}

bool wants_discord(const SweepConfig& cfg) {
  return std::any_of(cfg.measures.begin(), cfg.measures.end(),
                     [](const MeasureSpec& m) { return m.kind == MeasureSpec::discord; });
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

// ---------------------------------------------------------------- config

std::vector<double> Grid::points() const {
  validate();
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

void Grid::validate() const {
  if (!(step > 0)) throw ContractViolation("grid step must be positive");
  if (!(start < stop)) throw ContractViolation("grid start must be below stop");
  if (!std::isfinite(start) || !std::isfinite(stop)) throw ContractViolation("grid bounds must be finite");
  if ((stop - start) / step > 1e6) throw ContractViolation("grid has too many points");
}

Grid parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw ContractViolation("grid must look like start:stop:step");
  Grid g{parse_double(trim(parts[0]), "grid start"), parse_double(trim(parts[1]), "grid stop"),
         parse_double(trim(parts[2]), "grid step")};
  g.validate();
  return g;
}

std::string MeasureSpec::name() const {
  switch (kind) {
    case mutual_info: return "mutual_info";
    case discord: return "discord";
    case c_re: return "c_re";
    case c_l1: return "c_l1";
    case skew: return std::string("skew:s") + axis + (side == Subsystem::B ? ":local" : ":a");
    case skew1: return std::string("skew1:s") + axis;
  }
  return "?";
}

std::vector<MeasureSpec> parse_measures(const std::string& text) {
  std::vector<MeasureSpec> out;
  if (trim(text).empty()) return out;
  for (const auto& raw : split(text, ',')) {
    const std::string item = trim(raw);
    std::string lower = item;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto parts = split(lower, ':');
    MeasureSpec m;
    const auto axis_of = [&](const std::string& k) {
      if (k.size() != 2 || k[0] != 's' || (k[1] != 'x' && k[1] != 'y' && k[1] != 'z'))
        throw ContractViolation("observable must be sx, sy or sz in '" + item + "'");
      return k[1];
    };
    if (lower == "mutual_info" || lower == "mi") {
      m.kind = MeasureSpec::mutual_info;
    } else if (lower == "discord") {
      m.kind = MeasureSpec::discord;
    } else if (lower == "c_re") {
      m.kind = MeasureSpec::c_re;
    } else if (lower == "c_l1") {
      m.kind = MeasureSpec::c_l1;
    } else if (parts.size() == 3 && parts[0] == "skew") {
      m.kind = MeasureSpec::skew;
      m.axis = axis_of(parts[1]);
      if (parts[2] == "local" || parts[2] == "b")
        m.side = Subsystem::B;
      else if (parts[2] == "a")
        m.side = Subsystem::A;
      else
        throw ContractViolation("skew side must be local, a or b in '" + item + "'");
    } else if (parts.size() == 2 && parts[0] == "skew1") {
      m.kind = MeasureSpec::skew1;
      m.axis = axis_of(parts[1]);
    } else {
      throw ContractViolation("unknown measure '" + item + "'");
    }
    for (const auto& prev : out)
      if (prev.name() == m.name()) throw ContractViolation("measure listed twice: " + m.name());
    out.push_back(m);
  }
  return out;
}

void SweepConfig::validate() const {
  grid.validate();
  if (workers < 1) throw ContractViolation("workers must be >= 1");
  if (backend == Backend::dmrg) dmrg.validate();
  if (backend == Backend::ed && (ed_sites < 4 || ed_sites > kMaxEdSites || ed_sites % 2))
    throw ContractViolation("ED backend needs an even site count in [4, 14]");
  if (wants_discord(*this)) discord.validate();
}

ModelSpec SweepConfig::spec_at(double parameter) const {
  return model == ModelKind::XXZ ? ModelSpec::xxz(parameter) : ModelSpec::blbq_pi(parameter);
}

// ---------------------------------------------------------------- running

SweepRecord evaluate_point(const SweepConfig& cfg, double parameter, std::uint64_t seed) {
  SweepRecord r;
  r.parameter = parameter;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ModelSpec spec = cfg.spec_at(parameter);
    DensityMatrix two, one;
    if (cfg.backend == Backend::dmrg) {
      DmrgConfig d = cfg.dmrg;
      d.seed = seed;
      if (!d.checkpoint_path.empty()) {
        // one file per grid point inside the checkpoint directory
        std::string file = spec.to_string();
        std::replace(file.begin(), file.end(), ':', '_');
        d.checkpoint_path = (std::filesystem::path(d.checkpoint_path) / (file + ".ckpt")).string();
        std::filesystem::create_directories(std::filesystem::path(cfg.dmrg.checkpoint_path));
      }
      const auto res = dmrg_ground_state(spec, d);
      two = res.rho_two_site;
      one = res.rho_one_site;
      r.energy_per_site = res.energy_per_site;
      r.truncation_error = res.truncation_errors.empty() ? 0.0 : res.truncation_errors.back();
      r.converged = res.converged;
      r.iterations = res.iterations_used;
      r.target_sz = res.target_sz;
    } else {
      EdOptions eo;
      eo.compute_gap = false;
      eo.seed = seed;
      const int n = cfg.ed_sites;
      const auto ed = ed_ground_state(spec, n, 0.0, eo);
      two = rdm_from_vector(ed.ground_vector, n, {n / 2 - 1, n / 2});
      one = rdm_from_vector(ed.ground_vector, n, {n / 2 - 1});
      r.energy_per_site = ed.energy / n;
      r.converged = true;
    }
    DiscordConfig dc = cfg.discord;
    dc.seed = derive_seed(seed, 1);
    for (const auto& m : cfg.measures) {
      double v = kNaN;
      switch (m.kind) {
        case MeasureSpec::mutual_info: v = mutual_information(two, 3, 3); break;
        case MeasureSpec::discord: {
          const auto d = quantum_discord(two, 3, 3, dc);
          v = d.discord;
          r.fingerprint = basis_fingerprint(d.optimal_basis, fingerprint_kind_for(cfg.model));
          break;
        }
        case MeasureSpec::c_re: v = rel_entropy_coherence(two); break;
        case MeasureSpec::c_l1: v = l1_coherence(two); break;
        case MeasureSpec::skew: v = skew_information(two, local_observable(spin_component(m.axis), m.side)); break;
        case MeasureSpec::skew1: v = skew_information(one, spin_component(m.axis)); break;
      }
      r.values.push_back(v);
    }
    if (!r.converged) r.status = "not_converged";
  } catch (const std::exception& e) {
    r.values.assign(cfg.measures.size(), kNaN);
    r.fingerprint.clear();
    r.status = "error";
    std::fprintf(stderr, "sweep: point %.12g failed: %s\n", parameter, e.what());
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const auto xs = cfg.grid.points();
  const std::size_t n = xs.size();
  std::vector<std::optional<SweepRecord>> slots(n);
  std::vector<SweepRecord> done;
  done.reserve(n);

  std::ofstream csv;
  if (!cfg.output_path.empty()) {
    csv.open(cfg.output_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write CSV to " + cfg.output_path);
    const auto header = csv_header(cfg);
    for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
    csv << '\n' << std::flush;
  }
  const FingerprintKind fk = fingerprint_kind_for(cfg.model);

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  // Flush every finished record that has all its predecessors finished, so the
  // file on disk is always a sorted prefix of the sweep.
  const auto flush_ready = [&]() {
    while (done.size() < n && slots[done.size()]) {
      SweepRecord rec = std::move(*slots[done.size()]);
      if (!done.empty() && !rec.fingerprint.empty() && !done.back().fingerprint.empty())
        rec.basis_jump = fingerprint_distance(done.back().fingerprint, rec.fingerprint, fk);
      else if (!done.empty() && (rec.fingerprint.empty() != done.back().fingerprint.empty()))
        rec.basis_jump = kNaN;
      if (csv.is_open()) csv << csv_row(cfg, rec) << '\n' << std::flush;
      done.push_back(std::move(rec));
    }
  };
  const auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      SweepRecord rec = evaluate_point(cfg, xs[i], derive_seed(cfg.seed, i));
      std::lock_guard<std::mutex> lock(mu);
      slots[i] = std::move(rec);
      flush_ready();
    }
  };
  if (cfg.workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (csv.is_open() && !csv) throw std::runtime_error("write failed for " + cfg.output_path);
  return done;
}

// ---------------------------------------------------------------- CSV

std::vector<std::string> csv_header(const SweepConfig& cfg) {
  std::vector<std::string> h{"parameter"};
  for (const auto& m : cfg.measures) h.push_back(m.name());
  if (wants_discord(cfg)) {
    for (std::size_t i = 0; i < fingerprint_size(cfg.model); ++i) h.push_back("basis_fp_" + std::to_string(i));
    h.push_back("basis_jump");
  }
  for (const char* c : {"energy_per_site", "truncation_error", "converged", "iterations", "target_sz", "status"})
    h.emplace_back(c);
  return h;
}

std::string csv_row(const SweepConfig& cfg, const SweepRecord& r) {
  std::ostringstream os;
  os << format_double(r.parameter);
  for (double v : r.values) os << ',' << format_double(v);
  if (wants_discord(cfg)) {
    const std::size_t k = fingerprint_size(cfg.model);
    for (std::size_t i = 0; i < k; ++i) os << ',' << format_double(i < r.fingerprint.size() ? r.fingerprint[i] : kNaN);
    os << ',' << format_double(r.basis_jump);
  }
  os << ',' << format_double(r.energy_per_site) << ',' << format_double(r.truncation_error) << ','
     << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << r.target_sz << ',' << r.status;
  return os.str();
}

void emit_csv(const SweepConfig& cfg, const std::vector<SweepRecord>& records, const std::string& path) {
  if (records.empty()) throw ContractViolation("emit_csv: no records");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("emit_csv: cannot open " + path);
  const auto header = csv_header(cfg);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& r : records) os << csv_row(cfg, r) << '\n';
  if (!os) throw std::runtime_error("emit_csv: write failed for " + path);
}

int Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::vector<double> Table::series(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw ContractViolation("no column named '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

Table read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_csv: " + path + " is empty");
  for (const auto& c : split(trim(line), ',')) t.columns.push_back(trim(c));
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != t.columns.size())
      throw std::runtime_error("read_csv: " + path + ":" + std::to_string(lineno) + " has the wrong number of cells");
    std::vector<double> row;
    for (const auto& c : cells) {
      const std::string s = trim(c);
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      row.push_back(end && *end == '\0' && !s.empty() ? v : kNaN);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table records_to_table(const SweepConfig& cfg, const std::vector<SweepRecord>& records) {
  Table t;
  t.columns = csv_header(cfg);
  for (const auto& r : records) {
    const auto cells = split(csv_row(cfg, r), ',');
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      row.push_back(end && *end == '\0' ? v : kNaN);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------- SVG

void emit_plot(const Table& table, const std::vector<std::string>& series, const std::string& path,
               const PlotOptions& opts) {
  if (table.rows.empty()) throw ContractViolation("emit_plot: no records");
  if (series.empty()) throw ContractViolation("emit_plot: no series selected");
  const auto xs = table.series(table.columns.front());
  std::vector<std::vector<double>> ys;
  for (const auto& s : series) ys.push_back(table.series(s));

  double x0 = *std::min_element(xs.begin(), xs.end()), x1 = *std::max_element(xs.begin(), xs.end());
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const auto& y : ys)
    for (double v : y)
      if (std::isfinite(v)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
  if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;
  if (y1 - y0 < 1e-12 * std::max(1.0, std::abs(y0))) {
    const double pad = std::max(0.5, 0.5 * std::abs(y0));
    y0 -= pad;
    y1 += pad;
  }
  if (x1 <= x0) x1 = x0 + 1.0;

  const double w = 800, h = 500, ml = 80, mr = 180, mt = 40, mb = 60;
  const auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  const auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("emit_plot: cannot open " + path);
  char buf[256];
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opts.title.empty()) os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << opts.title << "</text>\n";
  // axes and ticks
  std::snprintf(buf, sizeof(buf), "<path d=\"M%.1f %.1f L%.1f %.1f L%.1f %.1f\" fill=\"none\" stroke=\"black\"/>\n", ml,
                mt, ml, h - mb, w - mr, h - mb);
  os << buf;
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"12\">%.4g</text>\n",
                  px(xv), h - mb, px(xv), h - mb + 5, px(xv), h - mb + 20, xv);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"12\">%.4g</text>\n",
                  ml - 5, py(yv), ml, py(yv), ml - 8, py(yv) + 4, yv);
    os << buf;
  }
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\" font-size=\"14\">"
     << opts.x_label << "</text>\n";
  for (double m : opts.markers) {
    if (m < x0 || m > x1) continue;
    std::snprintf(buf, sizeof(buf),
                  "<line class=\"marker\" x1=\"%.2f\" y1=\"%.1f\" x2=\"%.2f\" y2=\"%.1f\" stroke=\"gray\" "
                  "stroke-dasharray=\"6,4\"/>\n",
                  px(m), mt, px(m), h - mb);
    os << buf;
  }
  for (std::size_t s = 0; s < ys.size(); ++s) {
    const char* color = colors[s % 8];
    os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(ys[s][i])) continue;
      std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", first ? "" : " ", px(xs[i]), py(ys[s][i]));
      os << buf;
      first = false;
    }
    os << "\"/>\n";
    const double ly = mt + 20 + 20 * static_cast<double>(s);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text class=\"legend\" x=\"%.1f\" y=\"%.1f\" font-size=\"12\">",
                  w - mr + 15, ly, w - mr + 40, ly, color, w - mr + 45, ly + 4);
    os << buf << series[s] << "</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw std::runtime_error("emit_plot: write failed for " + path);
}

// ---------------------------------------------------------------- features

std::vector<Feature> FeatureReport::of_kind(const std::string& kind, const std::string& series) const {
  std::vector<Feature> out;
  for (const auto& f : features)
    if (f.kind == kind && (series.empty() || f.series == series)) out.push_back(f);
  return out;
}

namespace {

struct Extremum {
  std::size_t index;
  bool maximum;
};

// Sign changes of successive differences; steps within eps count as flat.
std::vector<Extremum> find_extrema(const std::vector<double>& y, double eps) {
  std::vector<Extremum> out;
  int last_sign = 0;
  std::size_t last_idx = 0;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    const double d = y[i + 1] - y[i];
    const int s = std::abs(d) <= eps ? 0 : (d > 0 ? 1 : -1);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) {
      std::size_t best = last_idx + 1;
      for (std::size_t j = last_idx + 1; j <= i; ++j)
        if (last_sign > 0 ? y[j] > y[best] : y[j] < y[best]) best = j;
      out.push_back({best, last_sign > 0});
    }
    last_sign = s;
    last_idx = i;
  }
  return out;
}

// Drop NaN points.
void finite_only(const std::vector<double>& x, const std::vector<double>& y, std::vector<double>& xo,
                 std::vector<double>& yo) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      xo.push_back(x[i]);
      yo.push_back(y[i]);
    }
}

}  // namespace

FeatureReport detect_features(const std::vector<double>& x_in, const std::vector<double>& y_in,
                              const std::string& name, const Thresholds& t) {
  if (x_in.size() != y_in.size()) throw ContractViolation("detect_features: x and y differ in length");
  std::vector<double> x, y;
  finite_only(x_in, y_in, x, y);
  if (x.size() < 5) throw ContractViolation("detect_features: need at least 5 finite points");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw ContractViolation("detect_features: x must be increasing");

  FeatureReport rep;
  const std::size_t n = y.size();
  const double lo = *std::min_element(y.begin(), y.end()), hi = *std::max_element(y.begin(), y.end());
  const double range = hi - lo;
  if (!(range > 0)) return rep;
  const double eps = t.noise * range;

  std::vector<double> d(n - 1), ad(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d[i] = y[i + 1] - y[i];
    ad[i] = std::abs(d[i]);
  }

  // jumps
  std::vector<bool> jump_interval(n - 1, false);
  const double global_med = median(ad);
  std::vector<double> jump_strength(n - 1, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::vector<double> local;
    const std::size_t a = i >= static_cast<std::size_t>(t.jump_window) ? i - t.jump_window : 0;
    const std::size_t b = std::min(n - 2, i + t.jump_window);
    for (std::size_t j = a; j <= b; ++j)
      if (j != i) local.push_back(ad[j]);
    const double ref = std::max(median(local), global_med);
    if (ad[i] > eps && ad[i] > t.jump * ref) {
      jump_interval[i] = true;
      jump_strength[i] = ref > 0 ? ad[i] / ref : std::numeric_limits<double>::max();
    }
  }
  for (std::size_t i = 0; i + 1 < n;) {
    if (!jump_interval[i]) {
      ++i;
      continue;
    }
    std::size_t best = i, j = i;
    while (j + 1 < n && jump_interval[j]) {
      if (ad[j] > ad[best]) best = j;
      ++j;
    }
    rep.features.push_back({"jump", 0.5 * (x[best] + x[best + 1]), name, jump_strength[best]});
    i = j;
  }
  // point i is near a jump if an interval touching i +- margin is a jump
  const auto near_jump = [&](std::size_t i, std::size_t margin) {
    const std::size_t a = i >= margin + 1 ? i - margin - 1 : 0;
    for (std::size_t j = a; j < std::min(n - 1, i + margin + 1); ++j)
      if (jump_interval[j]) return true;
    return false;
  };

  // extrema
  for (const auto& e : find_extrema(y, eps)) {
    if (near_jump(e.index, 0)) continue;
    const double s = (std::abs(y[e.index] - y[e.index - 1]) + std::abs(y[e.index + 1] - y[e.index])) / range;
    rep.features.push_back({e.maximum ? "local_max" : "local_min", x[e.index], name, s});
  }

  // inflections: extrema of the slope, at interval midpoints
  std::vector<double> slope(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) slope[i] = d[i] / (x[i + 1] - x[i]);
  const double srange =
      *std::max_element(slope.begin(), slope.end()) - *std::min_element(slope.begin(), slope.end());
  if (srange > 0) {
    for (const auto& e : find_extrema(slope, t.noise * srange)) {
      bool skip = false;
      for (std::size_t j = e.index > 1 ? e.index - 1 : 0; j <= std::min(n - 2, e.index + 1); ++j)
        skip = skip || jump_interval[j];
      if (skip) continue;
      const double s = (std::abs(slope[e.index] - slope[e.index - 1]) + std::abs(slope[e.index + 1] - slope[e.index])) /
                       srange;
      rep.features.push_back({"inflection", 0.5 * (x[e.index] + x[e.index + 1]), name, s});
    }
  }

  // kinks and the curvature maximum from second differences
  std::vector<double> d2(n, 0.0);
  std::vector<double> ad2;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
    d2[i] = 2.0 * (d[i] / h2 - d[i - 1] / h1) / (h1 + h2) * (0.5 * (h1 + h2)) * (0.5 * (h1 + h2));
    if (!near_jump(i, 2)) ad2.push_back(std::abs(d2[i]));
  }
  const double med2 = median(ad2);
  std::size_t curv_best = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (near_jump(i, 2)) continue;
    const double a = std::abs(d2[i]);
    const bool local_peak = (i == 1 || a >= std::abs(d2[i - 1])) && (i + 2 == n || a >= std::abs(d2[i + 1]));
    if (!local_peak || a <= eps) continue;
    if (curv_best == 0 || a > std::abs(d2[curv_best])) curv_best = i;
    if (a > t.kink * med2) rep.features.push_back({"kink", x[i], name, med2 > 0 ? a / med2 : a / eps});
  }
  if (curv_best != 0)
    rep.features.push_back({"curvature_max", x[curv_best], name, med2 > 0 ? std::abs(d2[curv_best]) / med2 : 0.0});

  // zero touches
  const double ymax = std::max(std::abs(lo), std::abs(hi));
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (std::abs(y[i]) < t.zero * ymax && y[i - 1] > y[i] && y[i + 1] > y[i])
      rep.features.push_back({"zero_touch", x[i], name, 1.0 - std::abs(y[i]) / (t.zero * ymax)});

  std::stable_sort(rep.features.begin(), rep.features.end(),
                   [](const Feature& a, const Feature& b) { return a.location < b.location; });
  return rep;
}

FeatureReport detect_crossings(const std::vector<double>& x_in, const std::vector<double>& a_in,
                               const std::vector<double>& b_in, const std::string& name, const Thresholds& t) {
  if (x_in.size() != a_in.size() || x_in.size() != b_in.size())
    throw ContractViolation("detect_crossings: series differ in length");
  std::vector<double> x, diff, a, b;
  for (std::size_t i = 0; i < x_in.size(); ++i)
    if (std::isfinite(a_in[i]) && std::isfinite(b_in[i])) {
      x.push_back(x_in[i]);
      a.push_back(a_in[i]);
      b.push_back(b_in[i]);
      diff.push_back(a_in[i] - b_in[i]);
    }
  FeatureReport rep;
  if (x.size() < 2) return rep;
  const auto span = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  };
  const double scale = std::max({span(a), span(b), 1e-300});
  const double eps = t.noise * scale;
  int last_sign = 0;
  std::size_t last_idx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int s = std::abs(diff[i]) <= eps ? 0 : (diff[i] > 0 ? 1 : -1);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) {
      double loc;
      if (i == last_idx + 1)
        loc = x[last_idx] + (x[i] - x[last_idx]) * diff[last_idx] / (diff[last_idx] - diff[i]);
      else
        loc = 0.5 * (x[last_idx + 1] + x[i - 1]);
      rep.features.push_back({"crossing", loc, name, std::abs(diff[i] - diff[last_idx]) / scale});
    }
    last_sign = s;
    last_idx = i;
  }
  return rep;
}

FeatureReport detect_basis_changes(const std::vector<double>& x, const std::vector<double>& jumps,
                                   const std::string& name, const Thresholds& t) {
  if (x.size() != jumps.size()) throw ContractViolation("detect_basis_changes: length mismatch");
  FeatureReport rep;
  for (std::size_t i = 1; i < x.size();) {
    if (!(jumps[i] > t.basis)) {
      ++i;
      continue;
    }
    std::size_t j = i, best = i;
    while (j < x.size() && jumps[j] > t.basis) {
      if (jumps[j] > jumps[best]) best = j;
      ++j;
    }
    // run of flagged intervals (i-1, i) ... (j-2, j-1): report its centre
    rep.features.push_back({"sudden_basis_change", 0.5 * (x[i - 1] + x[j - 1]), name, jumps[best]});
    i = j;
  }
  return rep;
}

FeatureReport detect_features(const Table& table, const std::vector<std::string>& series, const Thresholds& t) {
  if (table.columns.empty()) throw ContractViolation("detect_features: empty table");
  const auto x = table.series(table.columns.front());
  FeatureReport rep;
  for (const auto& s : series) {
    const auto r = detect_features(x, table.series(s), s, t);
    rep.features.insert(rep.features.end(), r.features.begin(), r.features.end());
    if (s == "discord" && table.column("basis_jump") >= 0) {
      const auto b = detect_basis_changes(x, table.series("basis_jump"), s, t);
      rep.features.insert(rep.features.end(), b.features.begin(), b.features.end());
    }
  }
  for (std::size_t i = 0; i < series.size(); ++i)
    for (std::size_t j = i + 1; j < series.size(); ++j) {
      const auto r = detect_crossings(x, table.series(series[i]), table.series(series[j]), series[i] + "|" + series[j], t);
      rep.features.insert(rep.features.end(), r.features.begin(), r.features.end());
    }
  return rep;
}

std::string feature_report_json(const FeatureReport& r) {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : r.features) {
    nlohmann::ordered_json e;
    e["kind"] = f.kind;
    e["location"] = f.location;
    e["series"] = f.series;
    e["strength"] = std::isfinite(f.strength) ? f.strength : 1e308;
    j["features"].push_back(e);
  }
  return j.dump(2) + "\n";
}

FeatureReport parse_feature_report_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FeatureReport r;
  for (const auto& e : j.at("features"))
    r.features.push_back({e.at("kind").get<std::string>(), e.at("location").get<double>(),
                          e.at("series").get<std::string>(), e.at("strength").get<double>()});
  return r;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ContractViolation(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace spinq
