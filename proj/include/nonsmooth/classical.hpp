#pragma once

// Classical engine: invariant curves (tori) of a circle system at fixed
// energy, their action and period, EBK levels, phase integrals, flow arcs
// for loop phases, and transition paths along lines of non-smoothness.
//
// Torus classes are described by the caller (the catalog): a rotational
// class is a single branch p(x) over the whole circle selected by a
// momentum bracket; a librational class is a well around x_center whose
// upper and lower branches meet at the momentum p_junction.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nonsmooth/error.hpp"
#include "nonsmooth/model.hpp"
#include "nonsmooth/numeric.hpp"

namespace nonsmooth {

enum class TorusKind { Rotational, Librational };
enum class Branch { Upper, Lower };

struct TorusClass {
  std::string name;
  TorusKind kind = TorusKind::Rotational;
  /// Momentum range of the whole torus (either end may be infinite).
  double p_lo = -std::numeric_limits<double>::infinity();
  double p_hi = std::numeric_limits<double>::infinity();
  /// Librational only: momentum where the two branches meet, and a point
  /// inside the well.
  double p_junction = 0.0;
  double x_center = 0.0;
  /// Maslov index for EBK: S = 2 pi (n + maslov/4) hbar.
  int maslov = 0;
  /// Open energy interval on which the class exists; its ends are
  /// separatrices.
  double energy_min = -std::numeric_limits<double>::infinity();
  double energy_max = std::numeric_limits<double>::infinity();
};

struct PhasePoint {
  double x = 0.0;
  double p = 0.0;
};

/// Integral of p dx along the Hamiltonian flow between two torus points,
/// with the number of caustics of the x- and p-projections crossed on the
/// way (endpoints excluded).
struct FlowArc {
  double integral = 0.0;
  int x_caustics = 0;
  int p_caustics = 0;
};

inline QuadratureOptions classical_quadrature() {
  QuadratureOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-12;
  return opt;
}

/// A torus of one class resolved at one energy.
class Torus {
 public:
  static constexpr double kSeparatrixTolerance = 1e-12;

  Torus(CircleSystem system, TorusClass cls, double energy)
      : system_(std::move(system)), cls_(std::move(cls)), energy_(energy) {
    if (std::abs(energy_ - cls_.energy_min) < kSeparatrixTolerance ||
        std::abs(energy_ - cls_.energy_max) < kSeparatrixTolerance) {
      throw Error(ErrorCode::SingularTorus, "torus class '" + cls_.name +
                                                "' degenerates at energy " + std::to_string(energy_));
    }
    if (!(energy_ > cls_.energy_min && energy_ < cls_.energy_max)) {
      throw Error(ErrorCode::NoTorus, "torus class '" + cls_.name + "' does not exist at energy " +
                                          std::to_string(energy_));
    }
    if (cls_.kind == TorusKind::Librational) {
      locate_turning_points();
      upper_direction_ = direction(0.5 * (x_left_ + x_right_), Branch::Upper);
    } else {
      double fastest = 0.0;
      for (int i = 0; i < 64; ++i) {
        const double v = velocity(kTwoPi * i / 64.0, Branch::Upper);
        if (std::abs(v) > std::abs(fastest)) fastest = v;
      }
      if (fastest == 0.0) {
        throw Error(ErrorCode::SingularTorus, "torus class '" + cls_.name + "' does not move");
      }
      upper_direction_ = fastest > 0.0 ? 1.0 : -1.0;
    }
  }

  const CircleSystem& system() const { return system_; }
  const TorusClass& torus_class() const { return cls_; }
  double energy() const { return energy_; }
  bool rotational() const { return cls_.kind == TorusKind::Rotational; }
  double x_left() const { return x_left_; }
  double x_right() const { return x_right_; }

  /// Momentum on a branch at x (rotational tori only have the upper one).
  double momentum(double x, Branch b) const {
    if (rotational()) {
      if (auto p = solve_branch(x, cls_.p_lo, cls_.p_hi)) return *p;
      throw Error(ErrorCode::NoTorus, "torus class '" + cls_.name + "' has no momentum at x = " +
                                          std::to_string(x) + ", energy " + std::to_string(energy_));
    }
    const double lo = b == Branch::Upper ? cls_.p_junction : cls_.p_lo;
    const double hi = b == Branch::Upper ? cls_.p_hi : cls_.p_junction;
    if (auto p = solve_branch(x, lo, hi)) return *p;
    return cls_.p_junction;  // at or just beyond a turning point
  }

  /// x-dot on a branch.
  double velocity(double x, Branch b) const {
    const double p = momentum(x, b);
    if (rotational()) return system_.dH_dp(x, p);
    const Side side = b == Branch::Upper ? Side::Right : Side::Left;
    return system_.dH_dp(x, p, side);
  }

  /// Orbit action along the flow, S = closed integral of p dx.
  double action() const {
    const auto opt = classical_quadrature();
    if (rotational()) {
      auto f = [&](double x) { return momentum(x, Branch::Upper); };
      const auto r = integrate_pieces(f, system_.potential.split_points(0.0, kTwoPi), opt);
      return upper_direction_ * r.value;
    }
    auto f = [&](double x) { return momentum(x, Branch::Upper) - momentum(x, Branch::Lower); };
    return upper_direction_ * integrate_window(f, opt);
  }

  /// Period, closed integral of dx / |x-dot|.
  double period() const {
    const auto opt = classical_quadrature();
    if (rotational()) {
      auto f = [&](double x) { return 1.0 / std::abs(velocity(x, Branch::Upper)); };
      return integrate_pieces(f, system_.potential.split_points(0.0, kTwoPi), opt).value;
    }
    auto f = [&](double x) {
      return 1.0 / std::abs(velocity(x, Branch::Upper)) + 1.0 / std::abs(velocity(x, Branch::Lower));
    };
    return integrate_window(f, opt);
  }

  /// s(x): integral of p from x = 0 (rotational) or from the left turning
  /// point along the upper branch (librational).
  double phase_integral(double x) const {
    const auto opt = classical_quadrature();
    if (rotational()) {
      const double xr = x == kTwoPi ? kTwoPi : wrap_angle(x);
      auto f = [&](double t) { return momentum(t, Branch::Upper); };
      return integrate_pieces(f, system_.potential.split_points(0.0, xr), opt).value;
    }
    const double xu = unwrap(x);
    if (xu < x_left_ - 1e-12 || xu > x_right_ + 1e-12) {
      throw Error(ErrorCode::Projection, "x = " + std::to_string(x) +
                                             " lies outside the projection of torus '" + cls_.name + "'");
    }
    auto f = [&](double t) { return momentum(t, Branch::Upper); };
    double sum = 0.0;
    const auto pts = system_.potential.split_points(x_left_, std::min(xu, x_right_));
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      sum += integrate_turning_points(f, pts[i], pts[i + 1], opt).value;
    }
    return sum;
  }

  /// Whether a phase-space point lies on this torus.
  bool contains(const PhasePoint& pt, double tol = 1e-9) const {
    if (std::abs(system_.hamiltonian(pt.x, pt.p) - energy_) > tol) return false;
    if (pt.p < cls_.p_lo - tol || pt.p > cls_.p_hi + tol) return false;
    if (rotational()) return true;
    const double xu = unwrap(pt.x);
    return xu >= x_left_ - 1e-9 && xu <= x_right_ + 1e-9;
  }

  /// p dx along the flow from a to b (both on the torus). Equal points give
  /// an empty arc.
  FlowArc flow_arc(const PhasePoint& a, const PhasePoint& b) const {
    const auto opt = classical_quadrature();
    FlowArc arc;
    if (rotational()) {
      const double d = upper_direction_;
      const double xa = a.x;
      const double span = d > 0 ? wrap_angle(b.x - a.x) : wrap_angle(a.x - b.x);
      if (span < 1e-14 || kTwoPi - span < 1e-14) return arc;
      const double xb = xa + d * span;
      auto f = [&](double x) { return momentum(x, Branch::Upper); };
      const double lo = std::min(xa, xb);
      const double hi = std::max(xa, xb);
      const double integral = integrate_pieces(f, system_.potential.split_points(lo, hi), opt).value;
      arc.integral = d > 0 ? integral : -integral;
      arc.p_caustics = count_p_caustics(lo, hi, Branch::Upper);
      return arc;
    }
    double ca = cycle_coordinate(a);
    double cb = cycle_coordinate(b);
    if (std::abs(ca - cb) < 1e-12 || std::abs(std::abs(ca - cb) - 2.0) < 1e-12) return arc;
    if (cb < ca) cb += 2.0;
    const double width = x_right_ - x_left_;
    for (int seg = 0; seg < 4; ++seg) {
      const double s0 = std::max(ca, static_cast<double>(seg));
      const double s1 = std::min(cb, static_cast<double>(seg + 1));
      if (s1 <= s0) continue;
      const bool forward = seg % 2 == 0;  // branch that flows toward +x
      const Branch br = forward == (upper_direction_ > 0) ? Branch::Upper : Branch::Lower;
      double x0, x1;
      if (forward) {
        x0 = x_left_ + (s0 - seg) * width;
        x1 = x_left_ + (s1 - seg) * width;
      } else {
        x0 = x_right_ - (s0 - seg) * width;
        x1 = x_right_ - (s1 - seg) * width;
      }
      const double lo = std::min(x0, x1);
      const double hi = std::max(x0, x1);
      auto f = [&](double x) { return momentum(x, br); };
      double integral = 0.0;
      const auto pts = system_.potential.split_points(lo, hi);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        integral += integrate_turning_points(f, pts[i], pts[i + 1], opt).value;
      }
      arc.integral += forward ? integral : -integral;
      arc.p_caustics += count_p_caustics(lo, hi, br);
    }
    for (int boundary = 1; boundary <= 3; ++boundary) {
      if (boundary > ca + 1e-12 && boundary < cb - 1e-12) ++arc.x_caustics;
    }
    return arc;
  }

 private:
  std::optional<double> solve_branch(double x, double lo, double hi) const {
    if (system_.separable()) {
      const double ek = energy_ - system_.potential(x);
      return system_.kinetic.inverse(ek, lo, hi);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw Error(ErrorCode::Configuration,
                  "torus class '" + cls_.name + "' needs a finite momentum range for a mixed system");
    }
    auto g = [&](double p) { return system_.hamiltonian(x, p) - energy_; };
    const double glo = g(lo);
    const double ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo > 0.0) == (ghi > 0.0)) return std::nullopt;
    return bisect(g, lo, hi, 1e-15);
  }

  double direction(double x, Branch b) const {
    const double v = velocity(x, b);
    if (v == 0.0) {
      throw Error(ErrorCode::SingularTorus, "zero velocity on torus '" + cls_.name + "'");
    }
    return v > 0.0 ? 1.0 : -1.0;
  }

  void locate_turning_points() {
    const double pj = cls_.p_junction;
    auto g = [&](double x) { return system_.hamiltonian(x, pj) - energy_; };
    if (!(g(cls_.x_center) < 0.0)) {
      throw Error(ErrorCode::NoTorus, "torus class '" + cls_.name + "' has no well at energy " +
                                          std::to_string(energy_));
    }
    auto scan = [&](double dir) {
      const int samples = 4096;
      double prev = cls_.x_center;
      for (int i = 1; i <= samples; ++i) {
        const double x = cls_.x_center + dir * std::numbers::pi * i / samples;
        if (g(x) >= 0.0) {
          return dir > 0 ? bisect(g, prev, x, 1e-15) : bisect(g, x, prev, 1e-15);
        }
        prev = x;
      }
      throw Error(ErrorCode::NoTorus, "torus class '" + cls_.name + "' is not closed at energy " +
                                          std::to_string(energy_));
    };
    x_left_ = scan(-1.0);
    x_right_ = scan(1.0);
  }

  /// x mapped into the unwrapped window around x_center.
  double unwrap(double x) const {
    if (rotational()) return x;
    return wrap_angle(x, cls_.x_center - std::numbers::pi);
  }

  template <class F>
  double integrate_window(const F& f, const QuadratureOptions& opt) const {
    double sum = 0.0;
    const auto pts = system_.potential.split_points(x_left_, x_right_);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      sum += integrate_turning_points(f, pts[i], pts[i + 1], opt).value;
    }
    return sum;
  }

  double cycle_coordinate(const PhasePoint& pt) const {
    const double xu = unwrap(pt.x);
    const double width = x_right_ - x_left_;
    if (std::abs(xu - x_left_) < 1e-10) return 0.0;
    if (std::abs(xu - x_right_) < 1e-10) return 1.0;
    const Branch br = pt.p >= cls_.p_junction ? Branch::Upper : Branch::Lower;
    const bool forward = (br == Branch::Upper) == (upper_direction_ > 0);
    return forward ? (xu - x_left_) / width : 1.0 + (x_right_ - xu) / width;
  }

  int count_p_caustics(double lo, double hi, Branch br) const {
    const int samples = 512;
    int count = 0;
    double prev = 0.0;
    for (int i = 1; i < samples; ++i) {
      const double x = lo + (hi - lo) * i / samples;
      const double v = system_.dH_dx(x, momentum(x, br));
      if (v != 0.0 && prev != 0.0 && (v > 0.0) != (prev > 0.0)) ++count;
      if (v != 0.0) prev = v;
    }
    return count;
  }

  CircleSystem system_;
  TorusClass cls_;
  double energy_;
  double x_left_ = 0.0;
  double x_right_ = kTwoPi;
  double upper_direction_ = 1.0;
};

// ---------------------------------------------------------------------------
// Free-function interface

inline double action(const CircleSystem& s, double energy, const TorusClass& cls) {
  return Torus(s, cls, energy).action();
}

inline double period(const CircleSystem& s, double energy, const TorusClass& cls) {
  return Torus(s, cls, energy).period();
}

inline double phase_integral(const CircleSystem& s, double energy, const TorusClass& cls, double x) {
  return Torus(s, cls, energy).phase_integral(x);
}

struct EbkLevel {
  int n = 0;
  double energy = 0.0;
};

/// Solves |S(e_n)| = 2 pi (n + mu/4) hbar on [e_lo, e_hi] (clipped to the
/// class's range) for every n whose level falls inside. The class's Maslov
/// index is used unless one is given.
inline std::vector<EbkLevel> ebk_levels(const CircleSystem& s, const TorusClass& cls, double e_lo,
                                        double e_hi, std::optional<int> maslov = std::nullopt) {
  const int mu = maslov.value_or(cls.maslov);
  const double margin = 1e-9;
  e_lo = std::max(e_lo, cls.energy_min + margin);
  e_hi = std::min(e_hi, cls.energy_max - margin);
  std::vector<EbkLevel> out;
  if (!(e_hi > e_lo)) return out;
  auto S = [&](double e) { return std::abs(Torus(s, cls, e).action()); };
  const double unit = kTwoPi * s.hbar;
  const double s_lo = S(e_lo);
  const double s_hi = S(e_hi);
  if (!(s_hi > s_lo)) {
    throw Error(ErrorCode::Configuration, "action of torus class '" + cls.name +
                                              "' is not increasing on the requested range");
  }
  const int n0 = static_cast<int>(std::ceil(s_lo / unit - mu / 4.0));
  const int n1 = static_cast<int>(std::floor(s_hi / unit - mu / 4.0));
  for (int n = n0; n <= n1; ++n) {
    const double target = unit * (n + mu / 4.0);
    if (target < s_lo || target > s_hi) continue;
    double lo = e_lo;
    double hi = e_hi;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (S(mid) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.push_back({n, 0.5 * (lo + hi)});
  }
  return out;
}

/// EBK quantum number of a level at energy e: round(|S|/(2 pi hbar) - mu/4).
inline int ebk_quantum_number(const CircleSystem& s, const TorusClass& cls, double energy) {
  const double S = std::abs(Torus(s, cls, energy).action());
  return static_cast<int>(std::lround(S / (kTwoPi * s.hbar) - cls.maslov / 4.0));
}

// ---------------------------------------------------------------------------
// Transition paths

struct TransitionPath {
  Axis axis = Axis::X;
  double locus = 0.0;  ///< x* for x-lines, p* for p-lines
  int order = 1;
  double jump = 0.0;
  PhasePoint start;  ///< on the first torus
  PhasePoint end;    ///< on the second torus
  /// p - p' for x-lines; (x' - x) reduced into (0, 2 pi) for p-lines.
  double length = 0.0;
  /// x-dot (x-lines) or p-dot (p-lines) at start and end.
  double start_velocity = 0.0;
  double end_velocity = 0.0;
};

namespace detail {

inline std::vector<double> roots_in_p(const CircleSystem& s, double x, double energy,
                                      double p_lo, double p_hi) {
  if (s.separable()) return s.kinetic.roots(energy - s.potential(x));
  auto g = [&](double p) { return s.hamiltonian(x, p) - energy; };
  return find_roots(g, p_lo, p_hi, 8192, 1e-15);
}

inline double finite_extent(const Torus& t, bool upper_end) {
  const auto& c = t.torus_class();
  const double v = upper_end ? c.p_hi : c.p_lo;
  if (std::isfinite(v)) return v;
  double m = upper_end ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (int i = 0; i < 256; ++i) {
    const double x = kTwoPi * i / 256.0;
    for (Branch b : {Branch::Upper, Branch::Lower}) {
      if (t.rotational() && b == Branch::Lower) continue;
      try {
        const double p = t.momentum(x, b);
        m = upper_end ? std::max(m, p) : std::min(m, p);
      } catch (const Error&) {
      }
    }
  }
  return upper_end ? m + 1.0 : m - 1.0;
}

}  // namespace detail

/// Every transition path from `from` to `to` along the system's lines of
/// non-smoothness at the tori's common energy.
inline std::vector<TransitionPath> find_transition_paths(const Torus& from, const Torus& to) {
  if (std::abs(from.energy() - to.energy()) > 1e-12 * std::max(1.0, std::abs(from.energy()))) {
    throw Error(ErrorCode::EnergyMismatch, "transition paths need tori of equal energy");
  }
  const auto& s = from.system();
  const double e = from.energy();
  std::vector<TransitionPath> out;
  const auto loci = s.loci();
  for (const auto& locus : loci) {
    std::vector<PhasePoint> starts, ends;
    if (locus.axis == Axis::X) {
      const double lo = std::min(detail::finite_extent(from, false), detail::finite_extent(to, false));
      const double hi = std::max(detail::finite_extent(from, true), detail::finite_extent(to, true));
      for (double p : detail::roots_in_p(s, locus.location, e, lo, hi)) {
        const PhasePoint pt{locus.location, p};
        const bool on_from = from.contains(pt);
        const bool on_to = to.contains(pt);
        if (!on_from && !on_to) continue;
        const double v = s.dH_dp(locus.location, p);
        if (std::abs(v) < 1e-9) {
          throw Error(ErrorCode::Tangency, "line x = " + std::to_string(locus.location) +
                                               " is tangent to a torus at p = " + std::to_string(p));
        }
        if (on_from) starts.push_back(pt);
        if (on_to) ends.push_back(pt);
      }
    } else {
      auto g = [&](double x) { return s.hamiltonian(x, locus.location) - e; };
      auto xs = find_roots(g, 0.0, kTwoPi, 8192, 1e-15);
      for (double x : xs) {
        if (x >= kTwoPi - 1e-13) continue;  // same point as x = 0
        const PhasePoint pt{x, locus.location};
        const bool on_from = from.contains(pt);
        const bool on_to = to.contains(pt);
        if (!on_from && !on_to) continue;
        const double v = s.dH_dx(x, locus.location);
        if (std::abs(v) < 1e-9) {
          throw Error(ErrorCode::Tangency, "line p = " + std::to_string(locus.location) +
                                               " is tangent to a torus at x = " + std::to_string(x));
        }
        if (on_from) starts.push_back(pt);
        if (on_to) ends.push_back(pt);
      }
    }
    for (const auto& a : starts) {
      for (const auto& b : ends) {
        TransitionPath path;
        path.axis = locus.axis;
        path.locus = locus.location;
        path.order = locus.order;
        path.start = a;
        path.end = b;
        if (locus.axis == Axis::X) {
          path.jump = locus.jump(a.p);
          path.length = a.p - b.p;
          path.start_velocity = s.dH_dp(a.x, a.p);
          path.end_velocity = s.dH_dp(b.x, b.p);
        } else {
          path.jump = locus.jump(a.x);
          path.length = wrap_angle(b.x - a.x);
          path.start_velocity = -s.dH_dx(a.x, a.p);
          path.end_velocity = -s.dH_dx(b.x, b.p);
        }
        if (path.length == 0.0) continue;
        out.push_back(path);
      }
    }
  }
  return out;
}

}  // namespace nonsmooth
