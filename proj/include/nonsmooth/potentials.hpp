#pragma once

// Named periodic potentials with their breakpoints and closed-form Fourier
// coefficients V_m = (1/2pi) int V(x) e^{-imx} dx.

#include <cmath>
#include <numbers>
#include <string>

#include "nonsmooth/model.hpp"

namespace nonsmooth::potentials {

namespace detail {

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int j = 0; j < k; ++j) b = b * (n - j) / (j + 1);
  return b;
}

/// int_{-pi/2}^{pi/2} cos(b x) dx
inline double half_period_cos_integral(double b) {
  if (b == 0.0) return std::numbers::pi;
  return 2.0 * std::sin(b * std::numbers::pi / 2.0) / b;
}

}  // namespace detail

/// scale * cos^2 x
inline PiecewisePeriodicFunction cos_squared(double scale = 1.0) {
  return PiecewisePeriodicFunction::smooth(pieces::cos_power(2, scale), 64, "cos^2 x")
      .with_fourier([scale](int m) -> complex {
        if (m == 0) return scale / 2.0;
        if (m == 2 || m == -2) return scale / 4.0;
        return 0.0;
      });
}

/// scale * cos x
inline PiecewisePeriodicFunction cosine(double scale = 1.0) {
  return PiecewisePeriodicFunction::smooth(pieces::cos_power(1, scale), 64, "cos x")
      .with_fourier([scale](int m) -> complex { return m == 1 || m == -1 ? scale / 2.0 : 0.0; });
}

/// scale * |cos x|; kinks at pi/2 and 3pi/2.
inline PiecewisePeriodicFunction abs_cos(double scale = 1.0) {
  if (scale == 0.0) return PiecewisePeriodicFunction::constant(0.0);
  return PiecewisePeriodicFunction({std::numbers::pi / 2.0, 3.0 * std::numbers::pi / 2.0},
                                   {pieces::cos_power(1, -scale), pieces::cos_power(1, scale)}, 1,
                                   64, "|cos x|")
      .with_fourier([scale](int m) -> complex {
        if (m % 2 != 0) return 0.0;
        const double k = m / 2;
        const double sign = (static_cast<long>(k) % 2 == 0) ? -1.0 : 1.0;
        return scale * (2.0 / std::numbers::pi) * sign / (4.0 * k * k - 1.0);
      });
}

/// scale * |sin x|; kinks at 0 and pi.
inline PiecewisePeriodicFunction abs_sin(double scale = 1.0) {
  if (scale == 0.0) return PiecewisePeriodicFunction::constant(0.0);
  return PiecewisePeriodicFunction({0.0, std::numbers::pi},
                                   {pieces::sine(1.0, 0.0, scale), pieces::sine(1.0, 0.0, -scale)},
                                   1, 64, "|sin x|")
      .with_fourier([scale](int m) -> complex {
        if (m % 2 != 0) return 0.0;
        const double k = m / 2;
        return -scale * (2.0 / std::numbers::pi) / (4.0 * k * k - 1.0);
      });
}

/// scale * max(cos x, 0)^k: C^{k-1} with k-th derivative jumps at pi/2 and
/// 3pi/2.
inline PiecewisePeriodicFunction max_cos_power(int k, double scale = 1.0) {
  if (k < 1) throw Error(ErrorCode::InvalidFunction, "max(cos, 0)^k needs k >= 1");
  if (scale == 0.0) return PiecewisePeriodicFunction::constant(0.0);
  return PiecewisePeriodicFunction({std::numbers::pi / 2.0, 3.0 * std::numbers::pi / 2.0},
                                   {pieces::zero(), pieces::cos_power(k, scale)}, k, 64,
                                   "max(cos x, 0)^" + std::to_string(k))
      .with_fourier([k, scale](int m) -> complex {
        double sum = 0.0;
        for (int j = 0; j <= k; ++j) {
          const double a = k - 2 * j;
          sum += detail::binomial(k, j) * 0.5 *
                 (detail::half_period_cos_integral(a - m) + detail::half_period_cos_integral(a + m));
        }
        return scale * sum / std::pow(2.0, k) / (2.0 * std::numbers::pi);
      });
}

/// scale * (1 - (x/pi)^2) on |x| <= pi, continued periodically; kink at pi.
inline PiecewisePeriodicFunction inverted_parabola(double scale = 1.0) {
  if (scale == 0.0) return PiecewisePeriodicFunction::constant(0.0);
  const double c = 1.0 / (std::numbers::pi * std::numbers::pi);
  return PiecewisePeriodicFunction({std::numbers::pi},
                                   {pieces::polynomial({scale, 0.0, -scale * c}, kTwoPi)}, 1, 64,
                                   "1 - (x/pi)^2")
      .with_fourier([scale](int m) -> complex {
        if (m == 0) return scale * 2.0 / 3.0;
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        return -scale * 2.0 * sign / (std::numbers::pi * std::numbers::pi * m * m);
      });
}

/// cos x + lambda |sin x|
inline PiecewisePeriodicFunction cos_plus_abs_sin(double lambda) {
  if (lambda == 0.0) return cosine(1.0);
  const auto s = abs_sin(lambda);
  return PiecewisePeriodicFunction(
             {0.0, std::numbers::pi},
             {pieces::sum(pieces::cos_power(1), pieces::sine(1.0, 0.0, lambda)),
              pieces::sum(pieces::cos_power(1), pieces::sine(1.0, 0.0, -lambda))},
             1, 64, "cos x + lambda |sin x|")
      .with_fourier([s](int m) -> complex {
        return s.fourier()(m) + (m == 1 || m == -1 ? 0.5 : 0.0);
      });
}

/// lambda * V, preserving breakpoints and Fourier data.
inline PiecewisePeriodicFunction scaled(const PiecewisePeriodicFunction& v, double lambda) {
  if (lambda == 0.0) return PiecewisePeriodicFunction::constant(0.0);
  auto wrap = [lambda](SmoothPiece p) -> SmoothPiece {
    return [p = std::move(p), lambda](double x, int order) { return lambda * p(x, order); };
  };
  PiecewisePeriodicFunction::FourierFn fourier;
  if (v.fourier()) fourier = [f = v.fourier(), lambda](int m) { return lambda * f(m); };
  if (v.is_smooth()) {
    SmoothPiece whole = [v](double x, int order) { return v.derivative(x, order); };
    return PiecewisePeriodicFunction::smooth(wrap(whole), v.max_derivative_order(), v.name())
        .with_fourier(fourier);
  }
  std::vector<SmoothPiece> ps;
  const auto intervals = v.piece_intervals();
  for (const auto& [a, b] : intervals) {
    ps.push_back(wrap([v, a, b](double x, int order) {
      if (x <= a + 1e-13) return v.one_sided(a, order, Side::Right);
      if (x >= b - 1e-13) return v.one_sided(b, order, Side::Left);
      return v.derivative(x, order);
    }));
  }
  return PiecewisePeriodicFunction(v.breakpoints(), std::move(ps), *v.kink_order(),
                                   v.max_derivative_order(), v.name())
      .with_fourier(fourier);
}

}  // namespace nonsmooth::potentials
