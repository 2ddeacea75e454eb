#pragma once

// Leading-order splitting predictions: the direct formula for symmetric
// monotone kinetic energies, and the general transition-path sum
//   A = sum_j r_j exp(i phi_j),  splitting = (2 hbar / T) |A|,  eta = |A| / pi.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "nonsmooth/classical.hpp"
#include "nonsmooth/error.hpp"
#include "nonsmooth/lattice_sum.hpp"
#include "nonsmooth/model.hpp"

namespace nonsmooth {

/// Line: plain 1/length^(k+1). Circle: p-line lengths are periodized with
/// W_{k+1}(length, (p* - grid offset)/hbar). x-lines always use the plain
/// form since momentum is not compact.
enum class Topology { Line, Circle };

struct PathContribution {
  TransitionPath path;
  complex coefficient;
  double phase = 0.0;  ///< relative to the first (reference) path
  int maslov = 0;
};

struct PredictionReport {
  complex amplitude;
  std::optional<double> splitting;
  double eta = 0.0;
  std::optional<double> period;
  double hbar = 0.0;
  std::vector<PathContribution> paths;
  /// |A| < 1e-3 max|r_j|: the leading order cancels and higher orders
  /// dominate.
  bool interference_zero = false;
};

inline constexpr double kInterferenceZeroRatio = 1e-3;

inline complex i_power(int k) {
  static const complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[((k % 4) + 4) % 4];
}

/// r = (i hbar)^k jump / (length^(k+1) sqrt|v v'|), with velocities x-dot for
/// x-lines and p-dot for p-lines.
inline complex reflection_coefficient(const TransitionPath& path, double hbar,
                                      Topology topology = Topology::Line, double grid_offset = 0.0) {
  if (path.length == 0.0) {
    throw Error(ErrorCode::SingularPath, "transition path has zero length");
  }
  const double vv = std::abs(path.start_velocity * path.end_velocity);
  if (vv == 0.0) {
    throw Error(ErrorCode::SingularPath, "transition path ends at a turning point of its projection");
  }
  const int k = path.order;
  const complex pre = i_power(k) * std::pow(hbar, k) * path.jump / std::sqrt(vv);
  if (path.axis == Axis::P && topology == Topology::Circle) {
    return pre * circle_lattice_sum(path.length, (path.locus - grid_offset) / hbar, k + 1);
  }
  return pre / std::pow(path.length, k + 1);
}

struct RelativePhase {
  double phase = 0.0;
  int maslov = 0;
};

/// phi_j - phi_ref = (1/hbar) loop integral of p dx - M pi/2 over the loop
/// path_j, flow arc on the target torus, reversed path_ref, flow arc on the
/// source torus. M counts caustics of the projection onto the coordinate
/// held fixed along the paths.
inline RelativePhase relative_phase(const TransitionPath& path_j, const TransitionPath& path_ref,
                                    const Torus& from, const Torus& to, double hbar) {
  if (std::abs(from.energy() - to.energy()) > 1e-12 * std::max(1.0, std::abs(from.energy()))) {
    throw Error(ErrorCode::EnergyMismatch, "relative phase needs paths at one energy");
  }
  auto straight = [](const TransitionPath& p) { return p.axis == Axis::P ? p.locus * p.length : 0.0; };
  const FlowArc on_to = to.flow_arc(path_j.end, path_ref.end);
  const FlowArc on_from = from.flow_arc(path_ref.start, path_j.start);
  const double loop = straight(path_j) + on_to.integral - straight(path_ref) + on_from.integral;
  RelativePhase out;
  out.maslov = path_j.axis == Axis::X ? on_to.x_caustics + on_from.x_caustics
                                      : on_to.p_caustics + on_from.p_caustics;
  out.phase = loop / hbar - out.maslov * std::numbers::pi / 2.0;
  return out;
}

struct PathOptions {
  Topology topology = Topology::Circle;
  /// Relative phases supplied by the caller instead of the loop
  /// construction, one per path in find_transition_paths order.
  std::optional<std::vector<double>> phase_offsets;
};

/// Reflection coefficients and relative phases for every transition path
/// from `from` to `to`.
inline std::vector<PathContribution> path_contributions(const Torus& from, const Torus& to,
                                                        const PathOptions& opt = {}) {
  const auto& s = from.system();
  const auto paths = find_transition_paths(from, to);
  if (opt.phase_offsets && opt.phase_offsets->size() != paths.size()) {
    throw Error(ErrorCode::Configuration, "expected " + std::to_string(paths.size()) +
                                              " phase offsets, got " +
                                              std::to_string(opt.phase_offsets->size()));
  }
  std::vector<PathContribution> out;
  for (std::size_t j = 0; j < paths.size(); ++j) {
    PathContribution c;
    c.path = paths[j];
    c.coefficient = reflection_coefficient(paths[j], s.hbar, opt.topology, s.p_offset);
    if (opt.phase_offsets) {
      c.phase = (*opt.phase_offsets)[j];
    } else if (j > 0) {
      const auto rp = relative_phase(paths[j], paths[0], from, to, s.hbar);
      c.phase = rp.phase;
      c.maslov = rp.maslov;
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// A = sum r_j e^{i phi_j}. With a period the splitting (2 hbar/T)|A| is
/// filled in; require_splitting turns a missing period into an error.
inline PredictionReport amplitude(std::vector<PathContribution> paths, double hbar,
                                  std::optional<double> period = std::nullopt,
                                  bool require_splitting = false) {
  if (paths.empty()) throw Error(ErrorCode::Configuration, "amplitude needs at least one path");
  PredictionReport rep;
  rep.hbar = hbar;
  double biggest = 0.0;
  for (const auto& c : paths) {
    rep.amplitude += c.coefficient * std::polar(1.0, c.phase);
    biggest = std::max(biggest, std::abs(c.coefficient));
  }
  rep.eta = std::abs(rep.amplitude) / std::numbers::pi;
  rep.interference_zero = std::abs(rep.amplitude) < kInterferenceZeroRatio * biggest;
  if (period) {
    if (!(*period > 0.0)) throw Error(ErrorCode::Configuration, "period must be positive");
    rep.period = period;
    rep.splitting = 2.0 * hbar / *period * std::abs(rep.amplitude);
  } else if (require_splitting) {
    throw Error(ErrorCode::Configuration, "a period is needed to convert the amplitude to a splitting");
  }
  rep.paths = std::move(paths);
  return rep;
}

/// Path-sum prediction between two tori of one energy, using the period of
/// the source torus.
inline PredictionReport predict(const Torus& from, const Torus& to, const PathOptions& opt = {}) {
  auto paths = path_contributions(from, to, opt);
  if (paths.empty()) {
    PredictionReport rep;
    rep.hbar = from.system().hbar;
    rep.period = from.period();
    rep.splitting = 0.0;
    return rep;
  }
  return amplitude(std::move(paths), from.system().hbar, from.period(), true);
}

/// Direct formula for a time-reversal symmetric kinetic energy increasing in
/// |p| and a potential with breakpoints of order k:
///   splitting = hbar^(k+1)/(2^k T) |sum_j e^{2 i s(x_j)/hbar} jump_j / (p^(k+1) E_k'(p))|.
/// `plus` is the rotational torus with p > 0.
inline PredictionReport splitting_direct(const Torus& plus) {
  const auto& s = plus.system();
  if (!s.mixed.empty()) {
    throw Error(ErrorCode::UnsupportedForm, "direct splitting formula needs a separable system");
  }
  const auto& kin = s.kinetic;
  bool monotone = kin.time_reversal_symmetric();
  for (double p : kin.stationary_points()) monotone = monotone && std::abs(p) < 1e-15;
  for (double p : kin.kinks()) monotone = monotone && std::abs(p) < 1e-15;
  if (!monotone) {
    throw Error(ErrorCode::UnsupportedForm,
                "direct splitting formula needs a symmetric kinetic energy increasing in |p|; "
                "use the transition-path sum");
  }
  if (!plus.rotational() || plus.momentum(0.0, Branch::Upper) <= 0.0) {
    throw Error(ErrorCode::Configuration, "direct splitting formula needs the p > 0 rotational torus");
  }
  PredictionReport rep;
  rep.hbar = s.hbar;
  rep.period = plus.period();
  const auto order = s.potential.kink_order();
  if (!order) {
    rep.splitting = 0.0;
    return rep;
  }
  const int k = *order;
  complex sum = 0.0;
  for (double x : s.potential.breakpoints()) {
    const double p = plus.momentum(x, Branch::Upper);
    const double v = s.dH_dp(x, p);
    const double jump = s.potential.jump(x, k);
    sum += std::polar(1.0, 2.0 * plus.phase_integral(x) / s.hbar) * jump / (std::pow(p, k + 1) * v);
  }
  const double mag = std::abs(sum);
  rep.splitting = std::pow(s.hbar, k + 1) / (std::pow(2.0, k) * *rep.period) * mag;
  rep.eta = std::pow(s.hbar, k) / (std::pow(2.0, k + 1) * std::numbers::pi) * mag;
  rep.amplitude = *rep.splitting * *rep.period / (2.0 * s.hbar);
  return rep;
}

/// Asymptotic Fourier coefficient of a piecewise-smooth function,
///   int_0^{2pi} f e^{inx} dx ~ sum_{l<=L} (i/n)^(l+1) sum_j e^{inx_j} jump_l(x_j).
inline complex fourier_asymptotics(const PiecewisePeriodicFunction& f, int n, int max_order) {
  if (n == 0) throw Error(ErrorCode::OutOfRange, "Fourier asymptotics need n != 0");
  complex sum = 0.0;
  if (f.is_smooth()) return sum;
  complex factor = 1.0;
  const complex step(0.0, 1.0 / n);
  for (int l = 0; l <= max_order; ++l) {
    factor *= step;
    complex inner = 0.0;
    for (double x : f.breakpoints()) inner += std::polar(1.0, n * x) * f.jump(x, l);
    sum += factor * inner;
  }
  return sum;
}

}  // namespace nonsmooth
