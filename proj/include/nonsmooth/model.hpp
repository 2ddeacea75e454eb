#pragma once

// Domain types for non-smooth Hamiltonians on the circle: piecewise-smooth
// periodic potentials, kinetic forms with kinks, mixed terms T_q(p) e^{iqx},
// the loci where the Hamiltonian fails to be smooth, and spin systems mapped
// onto the cylinder (x, p).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nonsmooth/error.hpp"
#include "nonsmooth/numeric.hpp"

namespace nonsmooth {

using complex = std::complex<double>;

enum class Side { Left, Right };

/// Closed-form smooth function: returns the order-th derivative at x.
using SmoothPiece = std::function<double(double x, int order)>;

/// 2pi-periodic function built from smooth pieces joined at declared
/// breakpoints. Piece i lives on [b_i, b_{i+1}); the last piece runs from
/// b_{n-1} to b_0 + 2pi and is evaluated in that (unwrapped) coordinate.
class PiecewisePeriodicFunction {
 public:
  using FourierFn = std::function<complex(int)>;

  PiecewisePeriodicFunction(std::vector<double> breakpoints, std::vector<SmoothPiece> pieces,
                            int kink_order, int max_derivative_order = 12, std::string name = {})
      : breakpoints_(std::move(breakpoints)),
        pieces_(std::move(pieces)),
        kink_order_(kink_order),
        max_order_(max_derivative_order),
        name_(std::move(name)) {
    if (breakpoints_.empty()) {
      throw Error(ErrorCode::InvalidFunction, "piecewise function needs breakpoints; use smooth()");
    }
    if (pieces_.size() != breakpoints_.size()) {
      throw Error(ErrorCode::InvalidFunction, "one piece per breakpoint required");
    }
    if (kink_order_ < 1) {
      throw Error(ErrorCode::InvalidFunction,
                  "discontinuous functions (k = 0) are not supported; k >= 1 required");
    }
    for (auto& b : breakpoints_) b = wrap_angle(b);
    std::vector<std::size_t> order(breakpoints_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return breakpoints_[a] < breakpoints_[b]; });
    std::vector<double> bs;
    std::vector<SmoothPiece> ps;
    for (auto i : order) {
      bs.push_back(breakpoints_[i]);
      ps.push_back(pieces_[i]);
    }
    breakpoints_ = std::move(bs);
    pieces_ = std::move(ps);
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      if (breakpoints_[i] - breakpoints_[i - 1] < 1e-12) {
        throw Error(ErrorCode::InvalidFunction, "duplicate breakpoints");
      }
    }
  }

  static PiecewisePeriodicFunction smooth(SmoothPiece f, int max_derivative_order = 12,
                                          std::string name = {}) {
    PiecewisePeriodicFunction out;
    out.pieces_.push_back(std::move(f));
    out.max_order_ = max_derivative_order;
    out.name_ = std::move(name);
    return out;
  }

  static PiecewisePeriodicFunction constant(double value) {
    auto f = smooth([value](double, int order) { return order == 0 ? value : 0.0; },
                    std::numeric_limits<int>::max(), value == 0.0 ? "0" : std::to_string(value));
    f.fourier_ = [value](int m) { return m == 0 ? complex(value) : complex(0.0); };
    return f;
  }

  PiecewisePeriodicFunction with_fourier(FourierFn fn) && {
    fourier_ = std::move(fn);
    return std::move(*this);
  }
  PiecewisePeriodicFunction with_fourier(FourierFn fn) const& {
    auto copy = *this;
    copy.fourier_ = std::move(fn);
    return copy;
  }

  double operator()(double x) const { return derivative(x, 0); }

  /// order-th derivative; at a breakpoint the right limit is returned.
  double derivative(double x, int order) const {
    check_order(order);
    const auto [idx, t] = locate(x);
    return pieces_[idx](t, order);
  }

  double one_sided(double x, int order, Side side) const {
    check_order(order);
    if (side == Side::Right || breakpoints_.empty()) return derivative(x, order);
    const auto bp = breakpoint_index(x);
    if (!bp) return derivative(x, order);
    if (*bp == 0) return pieces_.back()(breakpoints_.front() + kTwoPi, order);
    return pieces_[*bp - 1](breakpoints_[*bp], order);
  }

  /// Right limit minus left limit of the order-th derivative; 0 away from
  /// breakpoints.
  double jump(double x, int order) const {
    check_order(order);
    const auto bp = breakpoint_index(x);
    if (!bp) return 0.0;
    const double b = breakpoints_[*bp];
    return one_sided(b, order, Side::Right) - one_sided(b, order, Side::Left);
  }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  bool is_smooth() const { return breakpoints_.empty(); }
  /// k such that the function is C^{k-1} with a jump in the k-th derivative.
  std::optional<int> kink_order() const {
    if (is_smooth()) return std::nullopt;
    return kink_order_;
  }
  int max_derivative_order() const { return max_order_; }
  const std::string& name() const { return name_; }
  const FourierFn& fourier() const { return fourier_; }

  /// [start, end) of every piece in its own coordinate.
  std::vector<std::pair<double, double>> piece_intervals() const {
    if (is_smooth()) return {{0.0, kTwoPi}};
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      const double end = i + 1 < breakpoints_.size() ? breakpoints_[i + 1]
                                                     : breakpoints_.front() + kTwoPi;
      out.emplace_back(breakpoints_[i], end);
    }
    return out;
  }

  /// Breakpoints inside (a, b), unwrapped into that interval, plus both ends.
  std::vector<double> split_points(double a, double b) const {
    std::vector<double> pts{a};
    if (!is_smooth()) {
      const double first_turn = std::floor((a - breakpoints_.front()) / kTwoPi) - 1.0;
      for (double turn = first_turn; breakpoints_.front() + turn * kTwoPi < b; turn += 1.0) {
        for (double bp : breakpoints_) {
          const double x = bp + turn * kTwoPi;
          if (x > a + 1e-14 && x < b - 1e-14) pts.push_back(x);
        }
      }
    }
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    return pts;
  }

  /// Maximum over the circle (sampling plus golden-section polish).
  double max_value(int samples = 4096) const {
    double best_x = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const double x = kTwoPi * i / samples;
      const double v = (*this)(x);
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
    for (double bp : breakpoints_) {
      const double v = std::max(one_sided(bp, 0, Side::Left), one_sided(bp, 0, Side::Right));
      if (v > best) {
        best = v;
        best_x = bp;
      }
    }
    const double h = kTwoPi / samples;
    double lo = best_x - h;
    double hi = best_x + h;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
      const double x1 = hi - g * (hi - lo);
      const double x2 = lo + g * (hi - lo);
      if ((*this)(x1) > (*this)(x2)) {
        hi = x2;
      } else {
        lo = x1;
      }
    }
    return std::max(best, (*this)(0.5 * (lo + hi)));
  }

  /// Checks declared smoothness: value and derivatives below the kink order
  /// continue across breakpoints (and across 0 = 2pi); the kink order jumps.
  void validate(double rel_tol = 1e-10) const {
    if (is_smooth()) {
      for (int order = 0; order < std::min(max_order_, 3); ++order) {
        const double a = pieces_.front()(0.0, order);
        const double b = pieces_.front()(kTwoPi, order);
        if (std::abs(a - b) > rel_tol * std::max(1.0, std::abs(a))) {
          throw Error(ErrorCode::InvalidFunction, "smooth function is not 2pi-periodic");
        }
      }
      return;
    }
    for (double bp : breakpoints_) {
      for (int order = 0; order < kink_order_; ++order) {
        const double l = one_sided(bp, order, Side::Left);
        const double r = one_sided(bp, order, Side::Right);
        if (std::abs(l - r) > rel_tol * std::max(1.0, std::max(std::abs(l), std::abs(r)))) {
          throw Error(ErrorCode::InvalidFunction,
                      "derivative of order " + std::to_string(order) + " jumps at " +
                          std::to_string(bp));
        }
      }
      if (kink_order_ <= max_order_ && std::abs(jump(bp, kink_order_)) < rel_tol) {
        throw Error(ErrorCode::InvalidFunction,
                    "declared breakpoint " + std::to_string(bp) + " has no jump");
      }
    }
  }

 private:
  PiecewisePeriodicFunction() = default;

  void check_order(int order) const {
    if (order < 0 || order > max_order_) {
      throw Error(ErrorCode::UnsupportedOrder,
                  "derivative order " + std::to_string(order) + " exceeds available " +
                      std::to_string(max_order_));
    }
  }

  std::pair<std::size_t, double> locate(double x) const {
    if (is_smooth()) return {0, wrap_angle(x)};
    double t = wrap_angle(x, breakpoints_.front());
    // Snap values within rounding of a breakpoint onto it so the right
    // limit is used consistently.
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      if (std::abs(t - breakpoints_[i]) < 1e-13) return {i, breakpoints_[i]};
    }
    if (std::abs(t - (breakpoints_.front() + kTwoPi)) < 1e-13) return {0, breakpoints_.front()};
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return {static_cast<std::size_t>(it - breakpoints_.begin()) - 1, t};
  }

  std::optional<std::size_t> breakpoint_index(double x) const {
    const double t = wrap_angle(x);
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      const double d = std::abs(t - breakpoints_[i]);
      if (d < 1e-12 || std::abs(d - kTwoPi) < 1e-12) return i;
    }
    return std::nullopt;
  }

  std::vector<double> breakpoints_;
  std::vector<SmoothPiece> pieces_;
  int kink_order_ = 0;
  int max_order_ = 12;
  std::string name_;
  FourierFn fourier_;
};

/// Jump of the k-th derivative of f at x* (right minus left).
inline double jump_at(const PiecewisePeriodicFunction& f, double x_star, int k) {
  return f.jump(x_star, k);
}

namespace pieces {

/// scale * cos^k(x) via the expansion 2^{-k} sum_j C(k,j) cos((k-2j)x).
inline SmoothPiece cos_power(int k, double scale = 1.0) {
  return [k, scale](double x, int order) {
    double sum = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      const double a = k - 2 * j;
      sum += binom * std::pow(a, order) * std::cos(a * x + order * std::numbers::pi / 2.0);
      binom = binom * (k - j) / (j + 1);
    }
    if (order == 0 && k == 0) sum = 1.0;
    return scale * sum / std::pow(2.0, k);
  };
}

/// scale * sin(a x + phase).
inline SmoothPiece sine(double a, double phase, double scale = 1.0) {
  return [a, phase, scale](double x, int order) {
    return scale * std::pow(a, order) * std::sin(a * x + phase + order * std::numbers::pi / 2.0);
  };
}

/// sum_i c_i (x - origin)^i.
inline SmoothPiece polynomial(std::vector<double> coefficients, double origin = 0.0) {
  return [c = std::move(coefficients), origin](double x, int order) {
    double sum = 0.0;
    const double u = x - origin;
    for (std::size_t i = static_cast<std::size_t>(order); i < c.size(); ++i) {
      double falling = 1.0;
      for (int j = 0; j < order; ++j) falling *= static_cast<double>(i - j);
      sum += c[i] * falling * std::pow(u, static_cast<double>(i) - order);
    }
    return sum;
  };
}

inline SmoothPiece sum(SmoothPiece a, SmoothPiece b) {
  return [a = std::move(a), b = std::move(b)](double x, int order) { return a(x, order) + b(x, order); };
}

inline SmoothPiece zero() {
  return [](double, int) { return 0.0; };
}

}  // namespace pieces

// ---------------------------------------------------------------------------
// Kinetic energy E_k(p)

class KineticForm {
 public:
  enum class Kind { Quadratic, ShiftedAbs, QuarticDoubleWell, Linear, Custom };
  using Fn = std::function<double(double p, int order, Side side)>;

  /// p^2 / 2
  static KineticForm quadratic() {
    KineticForm k(Kind::Quadratic, "p^2/2");
    k.fn_ = [](double p, int order, Side) {
      switch (order) {
        case 0: return 0.5 * p * p;
        case 1: return p;
        case 2: return 1.0;
        default: return 0.0;
      }
    };
    k.stationary_ = {0.0};
    k.symmetric_ = true;
    return k;
  }

  /// |p - pc|
  static KineticForm shifted_abs(double pc) {
    KineticForm k(Kind::ShiftedAbs, "|p - pc|");
    k.center_ = pc;
    k.fn_ = [pc](double p, int order, Side side) {
      const double u = p - pc;
      const double s = u > 0.0 || (u == 0.0 && side == Side::Right) ? 1.0 : -1.0;
      switch (order) {
        case 0: return std::abs(u);
        case 1: return s;
        default: return 0.0;
      }
    };
    k.kinks_ = {pc};
    k.kink_order_ = 1;
    k.symmetric_ = pc == 0.0;
    return k;
  }

  /// (p^2 - 1)^2
  static KineticForm quartic_double_well() {
    KineticForm k(Kind::QuarticDoubleWell, "(p^2 - 1)^2");
    k.fn_ = [](double p, int order, Side) {
      switch (order) {
        case 0: return (p * p - 1.0) * (p * p - 1.0);
        case 1: return 4.0 * p * (p * p - 1.0);
        case 2: return 12.0 * p * p - 4.0;
        case 3: return 24.0 * p;
        case 4: return 24.0;
        default: return 0.0;
      }
    };
    k.stationary_ = {-1.0, 0.0, 1.0};
    k.symmetric_ = true;
    return k;
  }

  /// p - offset
  static KineticForm linear(double offset) {
    KineticForm k(Kind::Linear, "p - p0");
    k.center_ = offset;
    k.fn_ = [offset](double p, int order, Side) {
      if (order == 0) return p - offset;
      return order == 1 ? 1.0 : 0.0;
    };
    return k;
  }

  static KineticForm zero() {
    return custom([](double, int, Side) { return 0.0; }, {}, 0, {}, false, "0");
  }

  static KineticForm custom(Fn fn, std::vector<double> kinks, int kink_order,
                            std::vector<double> stationary, bool symmetric, std::string name) {
    KineticForm k(Kind::Custom, std::move(name));
    k.fn_ = std::move(fn);
    k.kinks_ = std::move(kinks);
    k.kink_order_ = kink_order;
    k.stationary_ = std::move(stationary);
    k.symmetric_ = symmetric;
    return k;
  }

  double value(double p) const { return fn_(p, 0, Side::Right); }
  double derivative(double p, int order, Side side = Side::Right) const { return fn_(p, order, side); }
  /// Classical velocity dE_k/dp.
  double velocity(double p, Side side = Side::Right) const { return fn_(p, 1, side); }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double center() const { return center_; }
  bool time_reversal_symmetric() const { return symmetric_; }
  const std::vector<double>& kinks() const { return kinks_; }
  int kink_order() const { return kink_order_; }
  const std::vector<double>& stationary_points() const { return stationary_; }

  double kink_jump(double p_star, int order) const {
    return fn_(p_star, order, Side::Right) - fn_(p_star, order, Side::Left);
  }

  /// Sorted boundaries of the monotone pieces (stationary points and kinks).
  std::vector<double> piece_boundaries() const {
    std::vector<double> b = stationary_;
    b.insert(b.end(), kinks_.begin(), kinks_.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

  /// Solution of E_k(p) = e inside [lo, hi] (either may be infinite) on a
  /// monotone piece, if one exists.
  std::optional<double> inverse(double e, double lo, double hi) const {
    if (auto closed = closed_inverse(e, lo, hi)) return closed;
    if (kind_ != Kind::Custom && kind_ != Kind::Linear) return std::nullopt;
    auto g = [&](double p) { return value(p) - e; };
    auto expand = [&](double finite, double dir) {
      double step = 1.0;
      double p = finite + dir * step;
      for (int i = 0; i < 60; ++i) {
        if ((g(p) > 0.0) != (g(finite) > 0.0)) return p;
        step *= 2.0;
        p = finite + dir * step;
      }
      return std::numeric_limits<double>::quiet_NaN();
    };
    if (std::isinf(lo) && std::isinf(hi)) {
      lo = -1.0;
      hi = 1.0;
      for (int i = 0; i < 60 && (g(lo) > 0.0) == (g(hi) > 0.0); ++i) {
        lo *= 2.0;
        hi *= 2.0;
      }
    } else if (std::isinf(lo)) {
      lo = expand(hi, -1.0);
    } else if (std::isinf(hi)) {
      hi = expand(lo, 1.0);
    }
    if (std::isnan(lo) || std::isnan(hi)) return std::nullopt;
    if ((g(lo) > 0.0) == (g(hi) > 0.0) && g(lo) != 0.0 && g(hi) != 0.0) return std::nullopt;
    return bisect(g, std::min(lo, hi), std::max(lo, hi), 1e-15);
  }

  /// All momenta with E_k(p) = e, one per monotone piece, ascending.
  std::vector<double> roots(double e) const {
    auto b = piece_boundaries();
    std::vector<double> edges;
    edges.push_back(-std::numeric_limits<double>::infinity());
    edges.insert(edges.end(), b.begin(), b.end());
    edges.push_back(std::numeric_limits<double>::infinity());
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      if (auto r = inverse(e, edges[i], edges[i + 1])) {
        if (out.empty() || std::abs(out.back() - *r) > 1e-13) out.push_back(*r);
      }
    }
    return out;
  }

 private:
  KineticForm(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  std::optional<double> closed_inverse(double e, double lo, double hi) const {
    auto inside = [&](double p) -> std::optional<double> {
      if (p >= lo - 1e-15 && p <= hi + 1e-15) return p;
      return std::nullopt;
    };
    switch (kind_) {
      case Kind::Quadratic: {
        if (e < 0.0) return std::nullopt;
        const double r = std::sqrt(2.0 * e);
        return hi <= 0.0 ? inside(-r) : inside(r);
      }
      case Kind::ShiftedAbs: {
        if (e < 0.0) return std::nullopt;
        return hi <= center_ ? inside(center_ - e) : inside(center_ + e);
      }
      case Kind::QuarticDoubleWell: {
        if (e < 0.0) return std::nullopt;
        const double s = std::sqrt(e);
        const double mid = 0.5 * (std::max(lo, -1e300) + std::min(hi, 1e300));
        const bool outer = mid > 1.0 || mid < -1.0;
        const double p2 = outer ? 1.0 + s : 1.0 - s;
        if (p2 < 0.0) return std::nullopt;
        const double p = std::sqrt(p2);
        return (lo >= 0.0 || hi > 0.0) && mid >= 0.0 ? inside(p) : inside(-p);
      }
      case Kind::Linear:
      case Kind::Custom:
        return std::nullopt;
    }
    return std::nullopt;
  }

  Kind kind_;
  std::string name_;
  Fn fn_;
  std::vector<double> kinks_;
  int kink_order_ = 0;
  std::vector<double> stationary_;
  bool symmetric_ = false;
  double center_ = 0.0;
};

// ---------------------------------------------------------------------------
// Mixed terms, loci and the circle system

/// T_q(p) e^{iqx}. The coefficient closure returns the order-th p-derivative
/// (one-sided at kinks).
struct MixedTerm {
  int harmonic = 0;
  std::function<complex(double p, int order, Side side)> coefficient;
  std::vector<double> kinks;
  int kink_order = 0;
};

enum class Axis { X, P };

/// A line x = x* or p = p* on which the Hamiltonian has a jump in its k-th
/// derivative. For p-lines the jump may depend on x, so it is stored as a
/// function of the coordinate along the line.
struct NonSmoothLocus {
  Axis axis = Axis::X;
  double location = 0.0;
  int order = 1;
  std::function<double(double along)> jump;
};

struct CircleSystem {
  KineticForm kinetic = KineticForm::quadratic();
  PiecewisePeriodicFunction potential = PiecewisePeriodicFunction::constant(0.0);
  std::vector<MixedTerm> mixed;
  double hbar = 1.0;
  /// Momentum-grid offset: the basis is p_n = n hbar + p_offset.
  double p_offset = 0.0;
  std::string name;

  bool separable() const { return mixed.empty(); }

  double mixed_value(double x, double p, int p_order, Side side) const {
    complex sum = 0.0;
    for (const auto& t : mixed) {
      sum += t.coefficient(p, p_order, side) * std::polar(1.0, t.harmonic * x);
    }
    return sum.real();
  }

  double hamiltonian(double x, double p) const {
    return kinetic.value(p) + potential(x) + mixed_value(x, p, 0, Side::Right);
  }

  /// dH/dp (velocity x-dot); one-sided at p-kinks.
  double dH_dp(double x, double p, Side side = Side::Right) const {
    return kinetic.velocity(p, side) + mixed_value(x, p, 1, side);
  }

  /// dH/dx (so p-dot = -dH/dx); one-sided at x-breakpoints.
  double dH_dx(double x, double p, Side side = Side::Right) const {
    double sum = potential.one_sided(x, 1, side);
    complex m = 0.0;
    for (const auto& t : mixed) {
      m += t.coefficient(p, 0, Side::Right) * complex(0.0, t.harmonic) *
           std::polar(1.0, t.harmonic * x);
    }
    return sum + m.real();
  }

  /// Every line of non-smoothness: potential breakpoints (x-lines), kinetic
  /// kinks and mixed-term kinks (p-lines, merged by location).
  std::vector<NonSmoothLocus> loci() const {
    std::vector<NonSmoothLocus> out;
    if (auto k = potential.kink_order()) {
      for (double bp : potential.breakpoints()) {
        const double j = potential.jump(bp, *k);
        out.push_back({Axis::X, bp, *k, [j](double) { return j; }});
      }
    }
    std::map<double, int> p_lines;
    for (double pk : kinetic.kinks()) p_lines[pk] = kinetic.kink_order();
    for (const auto& t : mixed) {
      for (double pk : t.kinks) {
        auto [it, inserted] = p_lines.emplace(pk, t.kink_order);
        if (!inserted) it->second = std::min(it->second, t.kink_order);
      }
    }
    for (const auto& [pk, order] : p_lines) {
      const auto self = *this;
      const int k = order;
      const double p_star = pk;
      out.push_back({Axis::P, pk, order, [self, k, p_star](double x) {
                       double j = self.kinetic.derivative(p_star, k, Side::Right) -
                                  self.kinetic.derivative(p_star, k, Side::Left);
                       j += self.mixed_value(x, p_star, k, Side::Right) -
                            self.mixed_value(x, p_star, k, Side::Left);
                       return j;
                     }});
    }
    return out;
  }

  /// Hermiticity of the implied operator: every T_q has a partner T_{-q} =
  /// conj(T_q); T_0 is real.
  void validate() const {
    if (!(hbar > 0.0)) throw Error(ErrorCode::OutOfRange, "hbar must be positive");
    for (const auto& t : mixed) {
      const MixedTerm* partner = nullptr;
      for (const auto& u : mixed) {
        if (u.harmonic == -t.harmonic) partner = &u;
      }
      if (!partner) {
        throw Error(ErrorCode::Construction,
                    "mixed term q=" + std::to_string(t.harmonic) + " has no conjugate partner");
      }
      for (int i = 0; i <= 64; ++i) {
        const double p = -4.0 + 8.0 * i / 64.0 + 1e-3;
        const complex a = t.coefficient(p, 0, Side::Right);
        const complex b = partner->coefficient(p, 0, Side::Right);
        if (std::abs(a - std::conj(b)) > 1e-12 * std::max(1.0, std::abs(a))) {
          throw Error(ErrorCode::Construction, "mixed terms are not Hermitian");
        }
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Spin systems

struct SpinMonomial {
  double coefficient = 1.0;
  int j1 = 0;
  int j2 = 0;
  int j3 = 0;
  int degree() const { return j1 + j2 + j3; }
};

enum class SpinRegion { All, UpperJ3, LowerJ3 };

/// One piece of a piecewise spin Hamiltonian, active where the J3 condition
/// holds (UpperJ3 is J3 >= 0, LowerJ3 is J3 < 0).
struct SpinBlock {
  SpinRegion region = SpinRegion::All;
  std::vector<SpinMonomial> terms;
};

inline bool region_contains(SpinRegion region, double j3, Side side = Side::Right) {
  switch (region) {
    case SpinRegion::All: return true;
    case SpinRegion::UpperJ3: return j3 > 0.0 || (j3 == 0.0 && side == Side::Right);
    case SpinRegion::LowerJ3: return j3 < 0.0 || (j3 == 0.0 && side == Side::Left);
  }
  return false;
}

struct SpinSystem {
  double j = 0.5;
  double hbar = 1.0;
  std::vector<SpinBlock> blocks;

  bool integer_spin() const { return std::abs(j - std::round(j)) < 1e-12; }
  /// J = (j + 1/2) hbar, so the sphere area is (2j+1) * 2 pi hbar.
  double radius() const { return (j + 0.5) * hbar; }
  /// p0 = 0 for integer j, hbar/2 for half-integer j.
  double p_offset() const { return integer_spin() ? 0.0 : 0.5 * hbar; }
  int dimension() const { return static_cast<int>(std::lround(2.0 * j)) + 1; }

  double classical_energy(double J1, double J2, double J3) const {
    double e = 0.0;
    for (const auto& b : blocks) {
      if (!region_contains(b.region, J3)) continue;
      for (const auto& t : b.terms) {
        e += t.coefficient * std::pow(J1, t.j1) * std::pow(J2, t.j2) * std::pow(J3, t.j3);
      }
    }
    return e;
  }

  void validate() const {
    if (!(j > 0.0) || std::abs(2.0 * j - std::round(2.0 * j)) > 1e-12) {
      throw Error(ErrorCode::OutOfRange, "spin j must be a positive multiple of 1/2");
    }
    if (!(hbar > 0.0)) throw Error(ErrorCode::OutOfRange, "hbar must be positive");
    for (const auto& b : blocks) {
      for (const auto& t : b.terms) {
        if (t.degree() > 2 || t.j1 < 0 || t.j2 < 0 || t.j3 < 0) {
          throw Error(ErrorCode::UnsupportedForm,
                      "spin Hamiltonians are limited to degree <= 2 per block");
        }
      }
    }
  }
};

/// Parses "J1^2 - J2^2 + 0.5*J3 + 2" style polynomials in J1, J2, J3.
inline std::vector<SpinMonomial> parse_spin_polynomial(std::string_view text) {
  std::vector<SpinMonomial> out;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::UnsupportedForm,
                "cannot parse spin polynomial '" + std::string(text) + "': " + why);
  };
  skip();
  if (i == text.size()) fail("empty expression");
  while (i < text.size()) {
    double sign = 1.0;
    skip();
    while (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      if (text[i] == '-') sign = -sign;
      ++i;
      skip();
    }
    SpinMonomial term;
    term.coefficient = sign;
    bool have_factor = false;
    while (true) {
      skip();
      if (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) {
        std::size_t end = i;
        while (end < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[end])) || text[end] == '.' ||
                text[end] == 'e' || text[end] == 'E' ||
                ((text[end] == '-' || text[end] == '+') && end > i &&
                 (text[end - 1] == 'e' || text[end - 1] == 'E')))) {
          ++end;
        }
        const std::string num(text.substr(i, end - i));
        try {
          term.coefficient *= std::stod(num);
        } catch (...) {
          fail("bad number");
        }
        i = end;
        have_factor = true;
      } else if (i + 1 < text.size() && (text[i] == 'J' || text[i] == 'j') &&
                 text[i + 1] >= '1' && text[i + 1] <= '3') {
        const int which = text[i + 1] - '0';
        i += 2;
        int power = 1;
        skip();
        if (i < text.size() && text[i] == '^') {
          ++i;
          skip();
          if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
            fail("expected exponent");
          }
          power = 0;
          while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            power = power * 10 + (text[i] - '0');
            ++i;
          }
        }
        (which == 1 ? term.j1 : which == 2 ? term.j2 : term.j3) += power;
        have_factor = true;
      } else {
        fail("unexpected character");
      }
      skip();
      if (i < text.size() && text[i] == '*') {
        ++i;
        continue;
      }
      break;
    }
    if (!have_factor) fail("empty term");
    if (term.degree() > 2) {
      throw Error(ErrorCode::UnsupportedForm,
                  "spin Hamiltonians are limited to degree <= 2 per block");
    }
    out.push_back(term);
    skip();
    if (i < text.size() && text[i] != '+' && text[i] != '-') fail("expected + or -");
  }
  return out;
}

namespace detail {

/// Coefficient of one harmonic in one block after the sphere substitution:
/// a0 + a1 P + a2 P^2 + R (b0 + b1 P), with R = sqrt(J^2 - P^2).
struct HarmonicPolynomial {
  complex a0, a1, a2, b0, b1;

  bool is_zero() const {
    const double tol = 1e-14;
    return std::abs(a0) < tol && std::abs(a1) < tol && std::abs(a2) < tol && std::abs(b0) < tol &&
           std::abs(b1) < tol;
  }

  /// order-th derivative in P at P for sphere radius J.
  complex eval(double P, double J, int order) const {
    const double R2 = J * J - P * P;
    const double R = std::sqrt(std::max(0.0, R2));
    switch (order) {
      case 0: return a0 + a1 * P + a2 * P * P + R * (b0 + b1 * P);
      case 1: {
        const double dR = R > 0.0 ? -P / R : 0.0;
        return a1 + 2.0 * a2 * P + dR * (b0 + b1 * P) + R * b1;
      }
      case 2: {
        const double dR = R > 0.0 ? -P / R : 0.0;
        const double d2R = R > 0.0 ? -J * J / (R * R * R) : 0.0;
        return 2.0 * a2 + d2R * (b0 + b1 * P) + 2.0 * dR * b1;
      }
      default:
        if (std::abs(b0) > 0.0 || std::abs(b1) > 0.0) {
          throw Error(ErrorCode::UnsupportedOrder, "R-terms support derivatives up to order 2");
        }
        return 0.0;
    }
  }
};

}  // namespace detail

/// Maps a spin Hamiltonian onto the cylinder with J3 = p - p0,
/// J1 = sqrt(J^2 - J3^2) cos x, J2 = sqrt(J^2 - J3^2) sin x.
///
/// The returned system quantizes on the integer momentum grid p = n hbar
/// (p_offset = 0); the half-integer J3 spectrum comes from p0 inside the
/// coefficients. When only the q = 0 harmonic survives it becomes the
/// kinetic energy and no mixed terms remain.
inline CircleSystem spin_to_circle(const SpinSystem& s) {
  s.validate();
  const double J = s.radius();
  const double p0 = s.p_offset();
  const complex I(0.0, 1.0);

  // harmonic -> per-block polynomial
  std::map<int, std::vector<std::pair<SpinRegion, detail::HarmonicPolynomial>>> harmonics;
  for (const auto& block : s.blocks) {
    std::map<int, detail::HarmonicPolynomial> acc;
    for (const auto& t : block.terms) {
      const double c = t.coefficient;
      const int a = t.j1, b = t.j2, k3 = t.j3;
      if (a == 0 && b == 0) {
        if (k3 == 0) acc[0].a0 += c;
        if (k3 == 1) acc[0].a1 += c;
        if (k3 == 2) acc[0].a2 += c;
      } else if (a == 1 && b == 0) {
        // R cos x (J3^k3) = R/2 (e^{ix} + e^{-ix})
        auto& lo = k3 == 0 ? acc[1].b0 : acc[1].b1;
        auto& hi = k3 == 0 ? acc[-1].b0 : acc[-1].b1;
        lo += c / 2.0;
        hi += c / 2.0;
      } else if (a == 0 && b == 1) {
        // R sin x = R/(2i) (e^{ix} - e^{-ix})
        auto& lo = k3 == 0 ? acc[1].b0 : acc[1].b1;
        auto& hi = k3 == 0 ? acc[-1].b0 : acc[-1].b1;
        lo += c / (2.0 * I);
        hi -= c / (2.0 * I);
      } else if (a == 2) {
        // R^2 cos^2 x = (J^2 - P^2) (1/2 + (e^{2ix} + e^{-2ix})/4)
        acc[0].a0 += c * J * J / 2.0;
        acc[0].a2 -= c / 2.0;
        for (int q : {2, -2}) {
          acc[q].a0 += c * J * J / 4.0;
          acc[q].a2 -= c / 4.0;
        }
      } else if (b == 2) {
        acc[0].a0 += c * J * J / 2.0;
        acc[0].a2 -= c / 2.0;
        for (int q : {2, -2}) {
          acc[q].a0 -= c * J * J / 4.0;
          acc[q].a2 += c / 4.0;
        }
      } else if (a == 1 && b == 1) {
        // R^2 sin x cos x = R^2/(4i) (e^{2ix} - e^{-2ix})
        acc[2].a0 += c * J * J / (4.0 * I);
        acc[2].a2 -= c / (4.0 * I);
        acc[-2].a0 -= c * J * J / (4.0 * I);
        acc[-2].a2 += c / (4.0 * I);
      }
    }
    for (auto& [q, poly] : acc) harmonics[q].emplace_back(block.region, poly);
  }

  auto make_coefficient = [J, p0](std::vector<std::pair<SpinRegion, detail::HarmonicPolynomial>> parts) {
    return [J, p0, parts = std::move(parts)](double p, int order, Side side) {
      const double P = p - p0;
      complex sum = 0.0;
      for (const auto& [region, poly] : parts) {
        if (region_contains(region, P, side)) sum += poly.eval(P, J, order);
      }
      return sum;
    };
  };

  CircleSystem out;
  out.hbar = s.hbar;
  out.p_offset = 0.0;
  out.kinetic = KineticForm::zero();
  out.name = "spin";

  bool has_nonzero_harmonic = false;
  for (auto& [q, parts] : harmonics) {
    const bool all_zero =
        std::all_of(parts.begin(), parts.end(), [](const auto& pr) { return pr.second.is_zero(); });
    if (all_zero) continue;
    MixedTerm term;
    term.harmonic = q;
    term.coefficient = make_coefficient(parts);
    // Kink at J3 = 0 when the blocks disagree there; find the first
    // derivative order with a nonzero jump.
    for (int order = 0; order <= 2; ++order) {
      const complex j = term.coefficient(p0, order, Side::Right) - term.coefficient(p0, order, Side::Left);
      if (std::abs(j) > 1e-12) {
        if (order == 0) {
          throw Error(ErrorCode::UnsupportedForm, "spin blocks are discontinuous at J3 = 0");
        }
        term.kinks = {p0};
        term.kink_order = order;
        break;
      }
    }
    if (q != 0) has_nonzero_harmonic = true;
    out.mixed.push_back(std::move(term));
  }

  if (!has_nonzero_harmonic) {
    // Only T_0 is left: it is a pure function of p.
    MixedTerm t0;
    for (auto& t : out.mixed) {
      if (t.harmonic == 0) t0 = t;
    }
    out.mixed.clear();
    if (t0.coefficient) {
      auto c = t0.coefficient;
      std::vector<double> stationary;
      out.kinetic = KineticForm::custom(
          [c](double p, int order, Side side) { return c(p, order, side).real(); }, t0.kinks,
          t0.kink_order, stationary, false, "spin T_0(p)");
    }
  }
  return out;
}

}  // namespace nonsmooth
