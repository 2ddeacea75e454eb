#pragma once

// Command-line driver: configuration, tabular output and the subcommands.
// run() is the whole program; main() only forwards argv and the standard
// streams so tests can drive it in-process.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nonsmooth/analysis.hpp"
#include "nonsmooth/catalog.hpp"
#include "nonsmooth/lattice_sum.hpp"

namespace nonsmooth::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::monostate, double, long long, bool, std::string>;

struct Table {
  std::string schema;  ///< e.g. "compare"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline Cell opt_cell(const std::optional<double>& v) {
  if (!v) return std::monostate{};
  return *v;
}

inline Cell opt_cell(const std::optional<int>& v) {
  if (!v) return std::monostate{};
  return static_cast<long long>(*v);
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + "\"";
    }
  };
  return std::visit(Visitor{}, c);
}

/// First line: "# nonsmooth <schema> schema v<N>", then the column header.
inline void write_csv(const Table& t, std::ostream& os) {
  os << "# nonsmooth " << t.schema << " schema v" << kSchemaVersion << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
    os << "\n";
  }
}

inline nlohmann::json json_cell(const Cell& c) {
  struct Visitor {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(double v) const {
      if (!std::isfinite(v)) return nullptr;
      return v;
    }
    nlohmann::json operator()(long long v) const { return v; }
    nlohmann::json operator()(bool v) const { return v; }
    nlohmann::json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

/// {"schema": ..., "schema_version": N, "columns": [...], "rows": [{...}]};
/// non-finite numbers become null.
inline void write_json(const Table& t, std::ostream& os) {
  nlohmann::ordered_json doc;
  doc["schema"] = t.schema;
  doc["schema_version"] = kSchemaVersion;
  doc["columns"] = t.columns;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r;
    for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = json_cell(row[i]);
    doc["rows"].push_back(r);
  }
  os << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  std::string command;
  std::string system;
  std::vector<double> hbar;
  int k = 1;
  double j = 100.0;
  std::optional<double> pc;
  std::optional<double> pc_over_hbar;
  double lambda = 1.0;
  std::optional<double> emin;
  std::optional<double> emax;
  std::vector<double> energy;
  double gap_ratio = 0.25;
  int basis_cap = kDefaultBasisCap;
  int jobs = 1;
  std::string format = "csv";
  std::string out;
  std::string precision = "double";
  bool engine = false;
  bool gnuplot = false;
  // scan
  std::string axis;
  std::vector<double> values;
  std::optional<double> from;
  std::optional<double> to;
  int points = 0;
  bool envelope = false;
  double envelope_width = 2.5;
  int envelope_grid = 17;
  // wsum
  std::vector<double> x;
  std::vector<double> y;
  int order = 2;
  // catalog
  std::string catalog_action;
  std::string catalog_id;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::Configuration, message);
}

/// Checks that do not need a catalog entry; entry-dependent ranges (hbar,
/// k, j) are checked by catalog::build before any computation starts.
inline void validate(const RunConfig& c) {
  const bool needs_system = c.command != "wsum" && c.command != "catalog";
  require(!needs_system || !c.system.empty(), "--system is required for '" + c.command + "'");
  require(c.format == "csv" || c.format == "json", "--format must be csv or json");
  require(c.precision == "double" || c.precision == "long", "--precision must be double or long");
  require(c.jobs >= 1, "--jobs must be at least 1");
  require(c.basis_cap >= 3, "--basis-cap must be at least 3");
  require(c.gap_ratio > 0.0 && c.gap_ratio < 1.0, "--gap-ratio must lie in (0, 1)");
  require(!(c.pc && c.pc_over_hbar), "give --pc or --pc-over-hbar, not both");
  require(!c.emin || !c.emax || *c.emin < *c.emax, "--emin must be below --emax");
  require(!c.gnuplot || !c.out.empty(), "--gnuplot needs --out");
  if (c.command != "scan") require(c.hbar.size() <= 1, "a list of --hbar values is only accepted by 'scan'");
  for (double v : c.hbar) {
    if (!(v > 0.0)) throw Error(ErrorCode::OutOfRange, "hbar = " + format_double(v) + " must be positive");
  }
  if (c.command == "scan") {
    require(c.axis == "hbar" || c.axis == "lambda" || c.axis == "pc", "--axis must be hbar, lambda or pc");
    require(c.axis != "pc" || !c.pc_over_hbar, "--pc-over-hbar cannot be combined with a pc scan");
    require(c.envelope_grid >= 3, "--envelope-grid must be at least 3");
    require(c.envelope_width > 0.0, "--envelope-width must be positive");
    if (c.from || c.to || c.points) {
      require(c.from && c.to && c.points >= 2, "--from, --to and --points (>= 2) go together");
    }
  }
  if (c.command == "wsum") {
    require(!c.x.empty(), "--x is required for 'wsum'");
    require(c.order >= 2, "--order must be at least 2");
  }
}

inline catalog::Parameters parameters(const RunConfig& c) {
  catalog::Parameters p;
  if (!c.hbar.empty()) p.hbar = c.hbar.front();
  p.k = c.k;
  p.j = c.j;
  p.lambda = c.lambda;
  if (c.pc) p.pc = *c.pc;
  return p;
}

inline catalog::Entry build_entry(const RunConfig& c, catalog::Parameters p) {
  if (c.pc_over_hbar) {
    p.pc = 0.0;
    p.pc = *c.pc_over_hbar * catalog::build(c.system, p).hbar;
  }
  auto e = catalog::build(c.system, p);
  e.basis_cap = c.basis_cap;
  return e;
}

inline double window_lo(const RunConfig& c, const catalog::Entry& e) {
  if (c.emin) return *c.emin;
  if (!e.regimes.empty()) return e.regimes.front().lo;
  return -std::numeric_limits<double>::infinity();
}

inline double window_hi(const RunConfig& c, const catalog::Entry& e) { return c.emax.value_or(e.default_emax); }

// ---------------------------------------------------------------------------
// Commands

template <class Real>
Table spectrum_table(const RunConfig& c, const catalog::Entry& e) {
  const double lo = c.emin.value_or(-std::numeric_limits<double>::infinity());
  const double hi = window_hi(c, e);
  const auto spec = catalog::spectrum<Real>(e, hi, true);
  Table t{"spectrum", {"index", "energy", "p2", "sector", "dominant_n"}, {}};
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double en = static_cast<double>(spec.energies[i]);
    if (en < lo || en > hi) continue;
    t.rows.push_back({static_cast<long long>(i), en, spec.p2[i], spec.sector[i],
                      static_cast<long long>(spec.dominant_n[i])});
  }
  return t;
}

template <class Real>
Table pairs_table(const RunConfig& c, const catalog::Entry& e) {
  Table t{"pairs",
          {"index", "lower_state", "upper_state", "lower", "upper", "mean", "splitting", "eta", "p2",
           "near_separatrix"},
          {}};
  for (const auto& p : analysis::entry_pairs<Real>(e, window_lo(c, e), window_hi(c, e), c.gap_ratio)) {
    t.rows.push_back({static_cast<long long>(p.index), static_cast<long long>(p.lower_state),
                      static_cast<long long>(p.upper_state), p.lower, p.upper, p.mean, p.splitting,
                      opt_cell(p.eta), p.p2, p.near_separatrix});
  }
  return t;
}

inline Table predict_table(const RunConfig& c, const catalog::Entry& e) {
  require(!c.energy.empty(), "--energy is required for 'predict'");
  Table t{"predict",
          {"energy", "amplitude", "eta", "splitting", "source", "quantum_number", "interference_zero",
           "below_power_law_floor"},
          {}};
  for (double en : c.energy) {
    const auto pr = c.engine ? catalog::engine_prediction(e, en) : catalog::prediction(e, en);
    t.rows.push_back({en, pr.amplitude, pr.eta, opt_cell(pr.splitting), pr.source, opt_cell(pr.quantum_number),
                      pr.interference_zero, pr.below_power_law_floor});
  }
  return t;
}

template <class Real>
Table compare_table(const RunConfig& c, const catalog::Entry& e) {
  Table t{"compare",
          {"energy", "splitting_numeric", "splitting_predicted", "eta_numeric", "eta_predicted", "ratio",
           "quantum_number", "interference_zero", "near_separatrix", "source"},
          {}};
  for (const auto& r : analysis::compare<Real>(e, window_lo(c, e), window_hi(c, e), c.gap_ratio)) {
    t.rows.push_back({r.energy, r.splitting_numeric, r.splitting_predicted, r.eta_numeric, r.eta_predicted,
                      r.ratio, opt_cell(r.quantum_number), r.interference_zero, r.near_separatrix, r.source});
  }
  return t;
}

inline std::vector<double> scan_grid(const RunConfig& c) {
  if (!c.values.empty()) return c.values;
  if (c.from) {
    std::vector<double> g;
    for (int i = 0; i < c.points; ++i) g.push_back(*c.from + (*c.to - *c.from) * i / (c.points - 1));
    return g;
  }
  if (c.axis == "hbar" && !c.hbar.empty()) return c.hbar;
  throw Error(ErrorCode::Configuration, "scan needs --values, --from/--to/--points or an --hbar list");
}

inline Table scan_table(const RunConfig& c) {
  const auto grid = scan_grid(c);
  const analysis::ScanAxis axis = c.axis == "hbar"     ? analysis::ScanAxis::Hbar
                                  : c.axis == "lambda" ? analysis::ScanAxis::Lambda
                                                       : analysis::ScanAxis::Pc;
  auto params = parameters(c);
  if (axis == analysis::ScanAxis::Hbar) params.hbar = grid.front();
  // Every grid point is validated before any of them is computed.
  for (double v : grid) build_entry(c, analysis::with_axis(params, axis, v));
  const auto e = build_entry(c, params);

  analysis::ScanOptions opt;
  opt.system = c.system;
  opt.params = params;
  opt.emin = window_lo(c, e);
  opt.emax = window_hi(c, e);
  if (!c.energy.empty()) {
    opt.energy = c.energy.front();
  } else {
    require(axis == analysis::ScanAxis::Pc, "--energy is required for hbar and lambda scans");
    opt.energy = 0.5 * (opt.emin + opt.emax);
  }
  opt.gap_ratio = c.gap_ratio;
  opt.envelope = c.envelope;
  opt.envelope_options.width_factor = c.envelope_width;
  opt.envelope_options.grid = c.envelope_grid;
  opt.jobs = c.jobs;
  const auto res = analysis::scan(axis, grid, opt);

  Table t{"scan", {c.axis, "hbar_used", "splitting_numeric", "splitting_predicted", "amplitude_predicted",
                   "interference_zero"}, {}};
  if (res.slope) t.columns.push_back("slope");
  for (const auto& r : res.rows) {
    std::vector<Cell> row{r.parameter, r.hbar, r.splitting_numeric, r.splitting_predicted, r.amplitude_predicted,
                          r.interference_zero};
    if (res.slope) row.push_back(res.slope->slope);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table wsum_table(const RunConfig& c) {
  Table t{"wsum", {"x", "y", "k", "re", "im", "abs"}, {}};
  const std::vector<double> ys = c.y.empty() ? std::vector<double>{0.0} : c.y;
  for (double x : c.x) {
    for (double y : ys) {
      const auto w = circle_lattice_sum(x, y, c.order);
      t.rows.push_back({x, y, static_cast<long long>(c.order), w.real(), w.imag(), std::abs(w)});
    }
  }
  return t;
}

inline Table catalog_list() {
  Table t{"catalog", {"id", "hamiltonian", "parameters"}, {}};
  for (const auto& id : catalog::identifiers()) {
    const auto e = catalog::build(id);
    std::string params;
    for (const auto& p : e.parameters) params += (params.empty() ? "" : " ") + p;
    t.rows.push_back({id, e.hamiltonian, params});
  }
  return t;
}

inline std::string gnuplot_script(const Table& t, const std::string& data) {
  std::ostringstream os;
  os << "# gnuplot script for " << data << "\n";
  os << "set datafile separator ','\nset key autotitle columnhead\n";
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (t.columns[i] == name) return std::to_string(i + 1);
    }
    return std::string("2");
  };
  const std::string f = "'" + data + "'";
  if (t.schema == "compare") {
    os << "set logscale y\nset xlabel 'energy'\nset ylabel 'eta'\n";
    os << "plot " << f << " using 1:" << col("eta_numeric") << " with points, " << f << " using 1:"
       << col("eta_predicted") << " with lines\n";
  } else if (t.schema == "scan") {
    if (t.columns.front() == "hbar") os << "set logscale xy\n";
    else os << "set logscale y\n";
    os << "set xlabel '" << t.columns.front() << "'\nset ylabel 'splitting'\n";
    os << "plot " << f << " using 1:" << col("splitting_numeric") << " with points, " << f << " using 1:"
       << col("splitting_predicted") << " with lines\n";
  } else if (t.schema == "pairs") {
    os << "set logscale y\nset xlabel 'mean'\nset ylabel 'splitting'\n";
    os << "plot " << f << " using " << col("mean") << ":" << col("splitting") << " with points\n";
  } else {
    os << "plot " << f << " using 1:2 with points\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Driver

inline void emit_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  j["exit_code"] = exit_code;
  err << j.dump() << "\n";
}

inline nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["command"] = c.command;
  j["system"] = c.system;
  j["hbar"] = c.hbar;
  j["k"] = c.k;
  j["j"] = c.j;
  j["pc"] = c.pc ? nlohmann::ordered_json(*c.pc) : nullptr;
  j["pc_over_hbar"] = c.pc_over_hbar ? nlohmann::ordered_json(*c.pc_over_hbar) : nullptr;
  j["lambda"] = c.lambda;
  j["emin"] = c.emin ? nlohmann::ordered_json(*c.emin) : nullptr;
  j["emax"] = c.emax ? nlohmann::ordered_json(*c.emax) : nullptr;
  j["energy"] = c.energy;
  j["gap_ratio"] = c.gap_ratio;
  j["basis_cap"] = c.basis_cap;
  j["jobs"] = c.jobs;
  j["format"] = c.format;
  j["precision"] = c.precision;
  if (c.command == "scan") {
    j["axis"] = c.axis;
    j["values"] = c.values;
    j["envelope"] = c.envelope;
  }
  return j;
}

inline void write_output(const RunConfig& c, const Table& t, std::ostream& out, const std::vector<std::string>& argv,
                         std::chrono::steady_clock::time_point started) {
  auto emit = [&](std::ostream& os) {
    if (c.format == "json") write_json(t, os);
    else write_csv(t, os);
  };
  if (c.out.empty()) {
    emit(out);
    return;
  }
  {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw Error(ErrorCode::Configuration, "cannot write '" + c.out + "'");
    emit(f);
  }
  nlohmann::ordered_json meta;
  meta["program"] = "nonsmooth";
  meta["version"] = kVersion;
  meta["schema"] = t.schema;
  meta["schema_version"] = kSchemaVersion;
  meta["argv"] = argv;
  meta["config"] = config_json(c);
  meta["rows"] = t.rows.size();
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  meta["finished_utc"] = stamp;
  meta["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::ofstream(c.out + ".meta.json") << meta.dump(2) << "\n";
  if (c.gnuplot) std::ofstream(c.out + ".gp") << gnuplot_script(t, c.out);
}

inline Table execute(const RunConfig& c, std::ostream& out) {
  if (c.command == "wsum") return wsum_table(c);
  if (c.command == "catalog") {
    if (c.catalog_action == "list") return catalog_list();
    require(c.catalog_action == "describe", "catalog action must be 'list' or 'describe'");
    require(!c.catalog_id.empty(), "catalog describe needs a system id");
    RunConfig d = c;
    d.system = c.catalog_id;
    out << catalog::describe(build_entry(d, parameters(d)));
    return {};
  }
  if (c.command == "scan") return scan_table(c);
  const auto e = build_entry(c, parameters(c));
  const bool wide = c.precision == "long";
  if (c.command == "spectrum") return wide ? spectrum_table<long double>(c, e) : spectrum_table<double>(c, e);
  if (c.command == "pairs") return wide ? pairs_table<long double>(c, e) : pairs_table<double>(c, e);
  if (c.command == "compare") return wide ? compare_table<long double>(c, e) : compare_table<double>(c, e);
  if (c.command == "predict") return predict_table(c, e);
  throw Error(ErrorCode::Configuration, "unknown command '" + c.command + "'");
}

/// Exit codes: 0 success, 1 numerical failure, 2 usage or configuration
/// error. Errors go to `err` as one line of JSON.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  RunConfig c;
  CLI::App app{"Near-degeneracy splittings of piecewise-smooth Hamiltonians", "nonsmooth"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "flat 'key = value' file; command-line flags override it");
  app.require_subcommand(1);

  app.add_option("--system", c.system, "catalog system id (see 'catalog list')");
  app.add_option("--hbar", c.hbar, "Planck constant; a comma list for hbar scans")->delimiter(',');
  app.add_option("--k", c.k, "order of the non-smoothness (ex2.1, ex2.2)");
  app.add_option("--j", c.j, "spin quantum number (ex3.3)");
  app.add_option("--pc", c.pc, "kink momentum p_c (ex3.2)");
  app.add_option("--pc-over-hbar", c.pc_over_hbar, "kink momentum in units of hbar (ex3.2)");
  app.add_option("--lambda", c.lambda, "potential strength");
  app.add_option("--emin", c.emin, "lower end of the energy window");
  app.add_option("--emax", c.emax, "upper end of the energy window");
  app.add_option("--energy", c.energy, "energies for predict, reference energy for scans")->delimiter(',');
  app.add_option("--gap-ratio", c.gap_ratio, "pair detection: splitting below this fraction of the neighbour gap");
  app.add_option("--basis-cap", c.basis_cap, "largest allowed basis size");
  app.add_option("--jobs", c.jobs, "worker threads for scans");
  app.add_option("--format", c.format, "csv or json");
  app.add_option("--out", c.out, "output file (default stdout); writes <out>.meta.json alongside");
  app.add_option("--precision", c.precision, "double or long (extended-precision eigensolver)");
  app.add_flag("--engine", c.engine, "predict with the transition-path engine even when a closed form exists");
  app.add_flag("--gnuplot", c.gnuplot, "also write <out>.gp");
  app.add_option("--axis", c.axis, "scan axis: hbar, lambda or pc");
  app.add_option("--values", c.values, "scan grid values")->delimiter(',');
  app.add_option("--from", c.from, "scan grid start");
  app.add_option("--to", c.to, "scan grid end");
  app.add_option("--points", c.points, "scan grid size");
  app.add_flag("--envelope", c.envelope, "hbar scans: take the interference maximum near each hbar");
  app.add_option("--envelope-width", c.envelope_width, "envelope search half-width in units of hbar^2");
  app.add_option("--envelope-grid", c.envelope_grid, "envelope search grid size");
  app.add_option("--x", c.x, "wsum: path lengths")->delimiter(',');
  app.add_option("--y", c.y, "wsum: twists")->delimiter(',');
  app.add_option("--order", c.order, "wsum: inverse power k >= 2");

  for (const char* name : {"spectrum", "pairs", "predict", "compare", "scan", "wsum"}) {
    app.add_subcommand(name)->fallthrough();
  }
  auto* cat = app.add_subcommand("catalog", "list systems or describe one")->fallthrough();
  cat->add_option("action", c.catalog_action, "list | describe")->required();
  cat->add_option("id", c.catalog_id, "system id for describe");
  app.get_subcommand("spectrum")->description("eigenvalues with diagnostics");
  app.get_subcommand("pairs")->description("near-degenerate pairs");
  app.get_subcommand("predict")->description("leading-order splitting predictions");
  app.get_subcommand("compare")->description("numeric versus predicted splittings");
  app.get_subcommand("scan")->description("hbar, lambda or pc scans");
  app.get_subcommand("wsum")->description("evaluate the periodized inverse-power sum W_k");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "usage", e.what(), 2);
    return 2;
  }
  c.command = app.get_subcommands().front()->get_name();

  std::vector<std::string> args(argv, argv + argc);
  try {
    validate(c);
    const Table t = execute(c, out);
    if (!t.schema.empty()) write_output(c, t, out, args, started);
    return 0;
  } catch (const Error& e) {
    const int code = is_usage_error(e.code()) ? 2 : 1;
    emit_error(err, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    emit_error(err, "internal", e.what(), 1);
    return 1;
  }
}

}  // namespace nonsmooth::cli
