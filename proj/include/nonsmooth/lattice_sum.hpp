#pragma once

// Periodized inverse powers on the circle:
//   W_k(x, y) = sum_q exp(i 2 pi q y) / (x + 2 pi q)^k.
// They replace 1/length^k for transition paths whose images wind around the
// configuration circle; y = p*/hbar carries the momentum-grid twist.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "nonsmooth/error.hpp"
#include "nonsmooth/numeric.hpp"

namespace nonsmooth {

namespace detail {

inline std::complex<double> lattice_sum_closed_2(double x, double y) {
  const std::complex<double> I(0.0, 1.0);
  const double s = std::sin(0.5 * x);
  return (1.0 + y * (std::exp(I * x) - 1.0)) * std::exp(-I * x * y) / (4.0 * s * s);
}

inline std::complex<double> lattice_sum_closed_3(double x, double y) {
  const std::complex<double> I(0.0, 1.0);
  const double s = std::sin(0.5 * x);
  const double c = std::cos(0.5 * x);
  const std::complex<double> num = c + 2.0 * I * y * s - 2.0 * y * y * s * s * std::exp(0.5 * I * x);
  return num * std::exp(-I * x * y) / (8.0 * s * s * s);
}

/// Number of images needed on each side so that the neglected tail is below
/// tol, for x already reduced into (-pi, pi].
inline long lattice_window(int k, double tol) {
  // |x + 2 pi q| >= 2 pi (|q| - 1/2); the two tails are bounded by
  // 2 / ((k - 1) (2 pi)^k (Q - 1/2)^(k-1)).
  const double c = 2.0 / ((k - 1) * std::pow(kTwoPi, k));
  const double q = std::pow(c / tol, 1.0 / (k - 1)) + 1.5;
  return static_cast<long>(std::ceil(q));
}

inline std::complex<double> lattice_sum_truncated(double x, double y, int k, double tol) {
  const long Q = lattice_window(k, tol);
  std::complex<double> sum = 0.0;
  // Smallest terms first.
  for (long q = Q; q >= 1; --q) {
    const double a = kTwoPi * static_cast<double>(q);
    sum += std::polar(1.0, kTwoPi * q * y) / std::pow(x + a, k) +
           std::polar(1.0, -kTwoPi * q * y) / std::pow(x - a, k);
  }
  return sum + 1.0 / std::pow(x, k);
}

}  // namespace detail

/// Upper bound on the neglected tail used for orders without a closed form.
inline constexpr double kLatticeTailTolerance = 1e-13;

/// W_k(x, y) for k >= 2. k = 2, 3 use closed forms valid for y in [0, 1]
/// after reducing y by its unit period; larger k sum a symmetric window of
/// images around x reduced into (-pi, pi].
inline std::complex<double> circle_lattice_sum(double x, double y, int k) {
  if (k < 2) {
    throw Error(ErrorCode::OutOfRange, "lattice sum needs k >= 2, got " + std::to_string(k));
  }
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw Error(ErrorCode::OutOfRange, "lattice sum arguments must be finite");
  }
  // x = xr + 2 pi m with xr in (-pi, pi].
  const double m = std::round(x / kTwoPi);
  const double xr = x - kTwoPi * m;
  if (std::abs(xr) < 1e-12) {
    throw Error(ErrorCode::DivergentSum, "lattice sum diverges for x a multiple of 2 pi");
  }
  const double yr = y - std::floor(y);
  const std::complex<double> twist = std::polar(1.0, -kTwoPi * m * yr);
  switch (k) {
    case 2: return twist * detail::lattice_sum_closed_2(xr, yr);
    case 3: return twist * detail::lattice_sum_closed_3(xr, yr);
    default: return twist * detail::lattice_sum_truncated(xr, yr, k, kLatticeTailTolerance);
  }
}

}  // namespace nonsmooth
