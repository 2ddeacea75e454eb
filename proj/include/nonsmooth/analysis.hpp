#pragma once

// Numeric-versus-prediction comparisons and parameter scans over catalog
// entries.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "nonsmooth/catalog.hpp"

namespace nonsmooth::analysis {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs f(0..n-1) on up to `jobs` threads; results are stored by index so
/// the output order never depends on completion order. The first exception
/// thrown by any task is rethrown after all workers stop.
template <class T>
std::vector<T> parallel_map(std::size_t n, int jobs, const std::function<T(std::size_t)>& f) {
  std::vector<std::optional<T>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = f(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Pairs and comparisons

/// Near-degenerate pairs of an entry with means in [emin, emax]. Pairs are
/// found over the whole spectrum first, so the ones at the window edges
/// still get eta from their neighbours.
template <class Real = double>
std::vector<NDPair> entry_pairs(const catalog::Entry& e, double emin, double emax, double gap_ratio = 0.25) {
  if (!(emax > emin)) throw Error(ErrorCode::Configuration, "energy window needs emin < emax");
  const auto spec = catalog::spectrum<Real>(e, emax, e.keep_needs_vectors);
  auto opt = catalog::pair_options(e, gap_ratio);
  opt.window_lo = emin;
  opt.window_hi = emax;
  return find_nd_pairs(spec, opt);
}

struct CompareRow {
  double energy = 0.0;  ///< pair mean
  double splitting_numeric = 0.0;
  double splitting_predicted = kNaN;
  double eta_numeric = kNaN;
  double eta_predicted = kNaN;
  double amplitude_predicted = kNaN;
  /// eta_numeric / eta_predicted, or the splitting ratio where eta is
  /// unavailable; NaN where the leading order cancels.
  double ratio = kNaN;
  std::optional<int> quantum_number;
  bool interference_zero = false;
  bool near_separatrix = false;
  std::string source;
};

/// Runs a prediction, mapping failures that only mean "no prediction at
/// this energy" to an empty result.
template <class F>
std::optional<catalog::Prediction> guarded(F&& f) {
  try {
    return f();
  } catch (const Error& err) {
    switch (err.code()) {
      case ErrorCode::NoTorus:
      case ErrorCode::SingularTorus:
      case ErrorCode::Tangency:
      case ErrorCode::SingularPath:
      case ErrorCode::OutOfRange:
        return std::nullopt;
      default:
        throw;
    }
  }
}

inline std::optional<catalog::Prediction> try_prediction(const catalog::Entry& e, double energy) {
  return guarded([&] { return catalog::prediction(e, energy); });
}

inline CompareRow compare_pair(const catalog::Entry& e, const NDPair& pair) {
  CompareRow row;
  row.energy = pair.mean;
  row.splitting_numeric = pair.splitting;
  row.eta_numeric = pair.eta.value_or(kNaN);
  row.near_separatrix = pair.near_separatrix;
  if (const auto pr = try_prediction(e, pair.mean)) {
    row.amplitude_predicted = pr->amplitude;
    row.eta_predicted = pr->eta;
    row.splitting_predicted = pr->splitting.value_or(kNaN);
    row.quantum_number = pr->quantum_number;
    row.interference_zero = pr->interference_zero;
    row.source = pr->source;
    if (!pr->interference_zero) {
      row.ratio = pair.eta ? *pair.eta / pr->eta : pair.splitting / row.splitting_predicted;
    }
  }
  return row;
}

template <class Real = double>
std::vector<CompareRow> compare(const catalog::Entry& e, double emin, double emax, double gap_ratio = 0.25) {
  std::vector<CompareRow> rows;
  for (const auto& pair : entry_pairs<Real>(e, emin, emax, gap_ratio)) rows.push_back(compare_pair(e, pair));
  return rows;
}

// ---------------------------------------------------------------------------
// Interpolation, envelopes and slopes

/// Splitting at `energy`, interpolated linearly in (log energy, log
/// splitting) between the two pairs whose means straddle it. Empty when
/// no pair lies on one side or a splitting is not positive.
inline std::optional<double> interpolated_splitting(const std::vector<NDPair>& pairs, double energy) {
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    const auto& a = pairs[i];
    const auto& b = pairs[i + 1];
    if (!(a.mean <= energy && energy < b.mean)) continue;
    if (!(a.splitting > 0.0 && b.splitting > 0.0 && a.mean > 0.0)) return std::nullopt;
    const double t = (std::log(energy) - std::log(a.mean)) / (std::log(b.mean) - std::log(a.mean));
    return std::exp((1 - t) * std::log(a.splitting) + t * std::log(b.splitting));
  }
  return std::nullopt;
}

/// Pair whose mean is closest to `energy`.
inline std::optional<NDPair> nearest_pair(const std::vector<NDPair>& pairs, double energy) {
  if (pairs.empty()) return std::nullopt;
  return *std::min_element(pairs.begin(), pairs.end(), [energy](const NDPair& a, const NDPair& b) {
    return std::abs(a.mean - energy) < std::abs(b.mean - energy);
  });
}

struct EnvelopePoint {
  double hbar = 0.0;  ///< where the maximum was found
  double value = 0.0;
};

struct EnvelopeOptions {
  double width_factor = 2.5;  ///< search hbar +- width_factor hbar^2
  int grid = 17;
  int bits = 30;  ///< Brent refinement precision
};

/// Local maximum of f(hbar') nearest the nominal hbar. f is sampled on a
/// grid spanning hbar +- width_factor hbar^2, the grid maximum nearest
/// hbar is bracketed by its neighbours and refined with Brent's method.
/// Meant for quantities whose interference factor oscillates in 1/hbar.
inline EnvelopePoint envelope_maximum(const std::function<double(double)>& f, double hbar,
                                      const EnvelopeOptions& opt = {}) {
  if (opt.grid < 3) throw Error(ErrorCode::InsufficientData, "envelope search needs at least 3 grid points");
  const double half = opt.width_factor * hbar * hbar;
  std::vector<double> hs(static_cast<std::size_t>(opt.grid));
  std::vector<double> vs(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    hs[i] = hbar - half + 2 * half * static_cast<double>(i) / static_cast<double>(opt.grid - 1);
    vs[i] = f(hs[i]);
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 1; i + 1 < hs.size(); ++i) {
    if (vs[i] >= vs[i - 1] && vs[i] >= vs[i + 1]) {
      if (!best || std::abs(hs[i] - hbar) < std::abs(hs[*best] - hbar)) best = i;
    }
  }
  if (!best) {
    throw Error(ErrorCode::InsufficientData,
                "no interior local maximum within hbar +- " + std::to_string(half) + "; widen the search");
  }
  const auto [h, negv] = boost::math::tools::brent_find_minima([&](double x) { return -f(x); },
                                                               hs[*best - 1], hs[*best + 1], opt.bits);
  if (-negv < vs[*best]) return {hs[*best], vs[*best]};
  return {h, -negv};
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through (log x, log y).
inline SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::Configuration, "slope fit needs matching x and y");
  if (x.size() < 3) {
    throw Error(ErrorCode::InsufficientData,
                "slope fit needs at least 3 points, got " + std::to_string(x.size()));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) {
      throw Error(ErrorCode::InsufficientData, "slope fit needs positive values");
    }
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw Error(ErrorCode::InsufficientData, "slope fit needs distinct x values");
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.points = x.size();
  return fit;
}

// ---------------------------------------------------------------------------
// Scans

enum class ScanAxis { Hbar, Lambda, Pc };

struct ScanRow {
  double parameter = 0.0;  ///< grid value of the scanned parameter
  double hbar = 0.0;       ///< hbar actually used (differs under envelope search)
  double splitting_numeric = kNaN;
  double splitting_predicted = kNaN;
  double amplitude_predicted = kNaN;
  bool interference_zero = false;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  std::optional<SlopeFit> slope;  ///< hbar scans: log splitting_numeric vs log hbar
};

struct ScanOptions {
  std::string system;
  catalog::Parameters params;
  double energy = 0.0;  ///< reference energy
  double emin = 0.0;    ///< pc scans: window for the largest splitting
  double emax = 0.0;    ///< top of the spectrum used
  double gap_ratio = 0.25;
  bool envelope = false;  ///< hbar scans: maximize over hbar near each grid point
  EnvelopeOptions envelope_options;
  int jobs = 1;
};

inline catalog::Parameters with_axis(catalog::Parameters p, ScanAxis axis, double v) {
  switch (axis) {
    case ScanAxis::Hbar: p.hbar = v; break;
    case ScanAxis::Lambda: p.lambda = v; break;
    case ScanAxis::Pc: p.pc = v; break;
  }
  return p;
}

/// Splitting at the reference energy from an entry's pairs.
inline double splitting_at(const catalog::Entry& e, const ScanOptions& opt) {
  const auto pairs = entry_pairs(e, std::min(opt.emin, opt.energy), opt.emax, opt.gap_ratio);
  if (const auto s = interpolated_splitting(pairs, opt.energy)) return *s;
  if (const auto p = nearest_pair(pairs, opt.energy)) return p->splitting;
  return kNaN;
}

/// hbar: interpolated splitting at `energy` (envelope maximum if asked),
/// plus a log-log slope over the grid.
/// lambda: splitting of the pair nearest `energy`, prediction at `energy`.
/// pc: largest splitting among pairs in [emin, emax], prediction at `energy`.
inline ScanResult scan(ScanAxis axis, const std::vector<double>& grid, const ScanOptions& opt) {
  if (grid.empty()) throw Error(ErrorCode::InsufficientData, "scan grid is empty");
  std::function<ScanRow(std::size_t)> point = [&](std::size_t i) {
    ScanRow row;
    row.parameter = grid[i];
    const auto e = catalog::build(opt.system, with_axis(opt.params, axis, grid[i]));
    row.hbar = e.hbar;
    switch (axis) {
      case ScanAxis::Hbar: {
        if (opt.envelope) {
          const auto env = envelope_maximum(
              [&](double h) {
                return splitting_at(catalog::build(opt.system, with_axis(opt.params, axis, h)), opt);
              },
              grid[i], opt.envelope_options);
          row.hbar = env.hbar;
          row.splitting_numeric = env.value;
        } else {
          row.splitting_numeric = splitting_at(e, opt);
        }
        break;
      }
      case ScanAxis::Lambda: {
        const auto pairs = entry_pairs(e, opt.emin, opt.emax, opt.gap_ratio);
        if (const auto p = nearest_pair(pairs, opt.energy)) row.splitting_numeric = p->splitting;
        break;
      }
      case ScanAxis::Pc: {
        double largest = 0.0;
        for (const auto& p : entry_pairs(e, opt.emin, opt.emax, opt.gap_ratio)) largest = std::max(largest, p.splitting);
        row.splitting_numeric = largest;
        break;
      }
    }
    const auto ev = row.hbar == e.hbar ? e : catalog::build(opt.system, with_axis(opt.params, ScanAxis::Hbar, row.hbar));
    const auto pr = axis == ScanAxis::Hbar
                        ? try_prediction(ev, opt.energy)
                        : guarded([&] { return catalog::engine_prediction(ev, opt.energy); });
    if (pr) {
      row.amplitude_predicted = pr->amplitude;
      row.splitting_predicted = pr->splitting.value_or(kNaN);
      row.interference_zero = pr->interference_zero;
    }
    return row;
  };
  ScanResult out;
  out.rows = parallel_map<ScanRow>(grid.size(), opt.jobs, point);
  if (axis == ScanAxis::Hbar) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& r : out.rows) {
      xs.push_back(r.hbar);
      ys.push_back(r.splitting_numeric);
    }
    out.slope = fit_loglog(xs, ys);
  }
  return out;
}

}  // namespace nonsmooth::analysis
