#pragma once

// Adaptive Gauss-Kronrod quadrature and bracketing root finders shared by the
// quantum and classical engines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include "nonsmooth/error.hpp"

namespace nonsmooth {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

struct QuadratureOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  std::size_t max_intervals = 20000;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair (QUADPACK constants).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = kKronrodWeights[7] * fc;
  double gauss = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate drops below max(abs_tol, rel_tol * |result|). Never throws; the
/// caller decides what an unconverged result means.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Panel> panels;
  auto first = detail::gauss_kronrod_15(f, a, b);
  double total = first.value;
  double total_err = first.error;
  panels.push(first);
  out.evaluations = 15;
  while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (panels.size() >= opt.max_intervals) {
      out.value = total;
      out.error = total_err;
      return out;
    }
    auto worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Panel cannot be split further in floating point.
      out.value = total;
      out.error = total_err;
      return out;
    }
    auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  total = 0.0;
  total_err = 0.0;
  while (!panels.empty()) {
    total += panels.top().value;
    total_err += panels.top().error;
    panels.pop();
  }
  out.value = total;
  out.error = total_err;
  out.converged = true;
  return out;
}

/// Integrates over consecutive sub-intervals [points[i], points[i+1]].
template <class F>
QuadratureResult integrate_pieces(const F& f, const std::vector<double>& points,
                                  const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  out.converged = true;
  const double pieces = std::max<double>(1.0, static_cast<double>(points.size()) - 1.0);
  QuadratureOptions local = opt;
  local.abs_tol = opt.abs_tol / pieces;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    auto r = integrate(f, points[i], points[i + 1], local);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
  }
  return out;
}

/// Integral over [a, b] of an integrand with inverse-square-root (or
/// square-root) behaviour at either end. The map x = a + (b - a)(1 - cos t)/2
/// is quadratic in t at both ends, so x - a ~ u^2 and the singular factor is
/// absorbed by the Jacobian.
template <class F>
QuadratureResult integrate_turning_points(const F& f, double a, double b,
                                          const QuadratureOptions& opt = {}) {
  const double half = 0.5 * (b - a);
  auto mapped = [&](double t) {
    const double s = std::sin(t);
    if (s == 0.0) return 0.0;
    const double x = a + half * (1.0 - std::cos(t));
    return f(x) * half * s;
  };
  return integrate(mapped, 0.0, std::numbers::pi, opt);
}

/// Bisection on a sign-changing bracket. Stops when the bracket is narrower
/// than xtol or f vanishes exactly.
template <class F>
double bisect(const F& f, double lo, double hi, double xtol = 1e-15, int max_iter = 400) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw Error(ErrorCode::ToleranceFailure, "bisect: bracket does not change sign");
  }
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= xtol) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// All sign changes of f on [a, b] located by sampling and refined by
/// bisection. Roots closer than the sampling step can be missed.
template <class F>
std::vector<double> find_roots(const F& f, double a, double b, int samples = 2048,
                               double xtol = 1e-15) {
  std::vector<double> roots;
  double x0 = a;
  double f0 = f(x0);
  for (int i = 1; i <= samples; ++i) {
    const double x1 = a + (b - a) * static_cast<double>(i) / samples;
    const double f1 = f(x1);
    if (f0 == 0.0) {
      if (roots.empty() || std::abs(roots.back() - x0) > xtol) roots.push_back(x0);
    } else if ((f0 > 0.0) != (f1 > 0.0) && f1 != 0.0) {
      roots.push_back(bisect(f, x0, x1, xtol));
    }
    x0 = x1;
    f0 = f1;
  }
  if (f0 == 0.0 && (roots.empty() || std::abs(roots.back() - x0) > xtol)) roots.push_back(x0);
  return roots;
}

/// Reduces x into [origin, origin + 2pi).
inline double wrap_angle(double x, double origin = 0.0) {
  double t = std::fmod(x - origin, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return origin + t;
}

}  // namespace nonsmooth
