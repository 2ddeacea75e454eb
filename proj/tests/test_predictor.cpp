#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nonsmooth/predictor.hpp"
#include "nonsmooth/potentials.hpp"
#include "nonsmooth/quantize.hpp"

using namespace nonsmooth;

namespace {

constexpr double pi = std::numbers::pi;

TorusClass rotational(bool positive, double p_edge = 0.0, double e_min = 1.0) {
  TorusClass c;
  c.name = positive ? "O+" : "O-";
  if (positive) {
    c.p_lo = p_edge;
  } else {
    c.p_hi = -p_edge;
  }
  c.energy_min = e_min;
  return c;
}

TorusClass well(double x_center, double pc) {
  TorusClass c;
  c.name = "well";
  c.kind = TorusKind::Librational;
  c.x_center = x_center;
  c.p_junction = pc;
  c.energy_min = 0.0;
  c.energy_max = 1.0;
  c.maslov = 2;
  return c;
}

CircleSystem system(KineticForm kin, PiecewisePeriodicFunction v, double hbar) {
  CircleSystem s;
  s.kinetic = std::move(kin);
  s.potential = std::move(v);
  s.hbar = hbar;
  return s;
}

CircleSystem h2(double hbar = 0.05) { return system(KineticForm::quadratic(), potentials::abs_cos(), hbar); }

template <class F>
double midpoint(F f, double a, double b, int n = 400000) {
  const double h = (b - a) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += f(a + (i + 0.5) * h);
  return sum * h;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

TEST(Predictor, ReflectionCoefficientOfH2) {
  const auto s = h2();
  const Torus a(s, rotational(true), 2.0);
  const Torus b(s, rotational(false), 2.0);
  const auto paths = find_transition_paths(a, b);
  ASSERT_EQ(paths.size(), 2u);
  const auto& at_half_pi = std::abs(paths[0].locus - pi / 2) < 1e-12 ? paths[0] : paths[1];
  const complex r = reflection_coefficient(at_half_pi, s.hbar);
  EXPECT_NEAR(r.real(), 0.0, 1e-18);
  EXPECT_NEAR(r.imag(), 3.125e-3, 1e-15);
}

TEST(Predictor, GeneralCoefficientReducesToSymmetricForm) {
  for (int k = 1; k <= 4; ++k) {
    const auto s = system(KineticForm::quadratic(), potentials::max_cos_power(k), 0.05);
    const double e = 1.8;
    const Torus a(s, rotational(true), e);
    const Torus b(s, rotational(false), e);
    for (const auto& path : find_transition_paths(a, b)) {
      const double p = path.start.p;
      const complex symmetric =
          i_power(k) * std::pow(s.hbar, k) * path.jump / (std::pow(2 * p, k + 1) * p);
      EXPECT_LT(std::abs(reflection_coefficient(path, s.hbar) - symmetric), 1e-12 * std::abs(symmetric));
    }
  }
}

TEST(Predictor, CoefficientScalesAsHbarPower) {
  for (int k = 1; k <= 4; ++k) {
    const auto s = system(KineticForm::quadratic(), potentials::max_cos_power(k), 0.05);
    const auto paths = find_transition_paths(Torus(s, rotational(true), 2.0), Torus(s, rotational(false), 2.0));
    for (const auto& path : paths) {
      const complex r1 = reflection_coefficient(path, 0.05);
      const complex r2 = reflection_coefficient(path, 0.1);
      EXPECT_NEAR(std::abs(r2) / std::abs(r1), std::pow(2.0, k), 1e-12);
    }
  }
}

TEST(Predictor, RelativePhaseOfH2) {
  const auto s = h2();
  const double e = 2.0;
  const Torus a(s, rotational(true), e);
  const Torus b(s, rotational(false), e);
  const auto paths = find_transition_paths(a, b);
  const auto& p1 = std::abs(paths[0].locus - pi / 2) < 1e-12 ? paths[0] : paths[1];
  const auto& p2 = &p1 == &paths[0] ? paths[1] : paths[0];
  EXPECT_EQ(relative_phase(p1, p1, a, b, s.hbar).phase, 0.0);
  const double oracle =
      2.0 / s.hbar * midpoint([&](double x) { return std::sqrt(2 * (e - std::abs(std::cos(x)))); }, pi / 2, 3 * pi / 2);
  const auto rp = relative_phase(p2, p1, a, b, s.hbar);
  EXPECT_NEAR(rp.phase, oracle, 1e-8);
  EXPECT_EQ(rp.maslov, 0);
}

TEST(Predictor, DirectFormulaReferenceValues) {
  {
    const auto s = system(KineticForm::quadratic(), potentials::max_cos_power(1), 0.05);
    const auto rep = splitting_direct(Torus(s, rotational(true), 2.0));
    EXPECT_NEAR(rep.eta, 0.05 / (16 * pi), 1e-14);
  }
  {
    const double hbar = 0.04;
    const auto s = system(KineticForm::shifted_abs(0.0), potentials::max_cos_power(2), hbar);
    // alpha_2 = 1/4; evaluated at the EBK level nearest 2.
    const double e = std::round((2.0 - 0.25) / hbar) * hbar + 0.25;
    const auto rep = splitting_direct(Torus(s, rotational(true), e));
    const double closed = 2 * std::pow(hbar, 3) / (4 * pi * std::pow(e, 3)) *
                          std::abs(std::sin(0.25 * pi / hbar + pi));
    EXPECT_NEAR(*rep.splitting, closed, 1e-12 * std::max(closed, 1e-12) + 1e-20);
  }
  {
    const auto s = system(KineticForm::quadratic(), potentials::cos_squared(), 0.05);
    EXPECT_EQ(*splitting_direct(Torus(s, rotational(true), 2.0)).splitting, 0.0);
  }
}

TEST(Predictor, DirectFormulaMatchesHalfCosineClosedForm) {
  for (int k = 1; k <= 4; ++k) {
    for (double hbar : {0.05, 0.031}) {
      const auto s = system(KineticForm::quadratic(), potentials::max_cos_power(k), hbar);
      for (double e : {1.1, 1.6, 2.3, 2.9}) {
        const auto rep = splitting_direct(Torus(s, rotational(true), e));
        const double closed = factorial(k) * std::pow(hbar, k) /
                              (std::pow(2.0, k) * pi * std::pow(2 * e, k / 2.0 + 1)) *
                              std::abs(std::sin(std::sqrt(2 * e) * pi / hbar + k * pi / 2));
        const double scale = factorial(k) * std::pow(hbar, k) / (std::pow(2.0, k) * pi * std::pow(2 * e, k / 2.0 + 1));
        EXPECT_NEAR(rep.eta, closed, 1e-9 * scale) << "k=" << k << " e=" << e;
      }
    }
  }
}

TEST(Predictor, PathSumMatchesDirectOnH2) {
  const auto s = h2();
  for (int i = 0; i < 10; ++i) {
    const double e = 1.2 + 1.8 * i / 9.0;
    const Torus a(s, rotational(true), e);
    const Torus b(s, rotational(false), e);
    const auto direct = splitting_direct(a);
    const auto path = predict(a, b);
    EXPECT_NEAR(path.eta, direct.eta, 1e-10 * direct.eta + 1e-16) << e;
    EXPECT_NEAR(*path.splitting, 2 * s.hbar / *path.period * std::abs(path.amplitude), 1e-18);
  }
}

TEST(Predictor, QuarticSinglePathAboveBarrier) {
  const auto s = system(KineticForm::quartic_double_well(), potentials::inverted_parabola(), 0.05);
  const double e = 2.0;
  const Torus a(s, rotational(true, 1.0), e);
  const Torus b(s, rotational(false, 1.0), e);
  const auto rep = predict(a, b);
  ASSERT_EQ(rep.paths.size(), 1u);
  const double closed = s.hbar / (4 * pi * std::sqrt(e) * std::pow(1 + std::sqrt(e), 1.5));
  EXPECT_NEAR(std::abs(rep.amplitude), closed, 1e-12 * closed);
  try {
    splitting_direct(a);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::UnsupportedForm);
  }
}

TEST(Predictor, AbsKineticWellsAtZeroOffset) {
  const double hbar = 0.02;
  const auto s = system(KineticForm::shifted_abs(0.0), potentials::cos_squared(), hbar);
  const auto cls = well(pi / 2, 0.0);
  for (const auto& lvl : ebk_levels(s, cls, 0.1, 0.9)) {
    const double e = lvl.energy;
    const auto rep = predict(Torus(s, cls, e), Torus(s, well(3 * pi / 2, 0.0), e));
    ASSERT_EQ(rep.paths.size(), 4u);
    const double parity = lvl.n % 2 == 0 ? 1.0 : -1.0;
    const double closed = hbar / (2 * std::sqrt(e) * std::sqrt(1 - e)) * std::abs(1 / (1 - e) + parity);
    EXPECT_NEAR(std::abs(rep.amplitude), closed, 1e-9 * closed) << "n=" << lvl.n;
  }
}

TEST(Predictor, AbsKineticWellsCancelAtHalfHbar) {
  const double hbar = 0.02;
  const double pc = hbar / 2;
  const auto s = system(KineticForm::shifted_abs(pc), potentials::cos_squared(), hbar);
  for (double e : {0.2, 0.45, 0.7}) {
    const auto rep = predict(Torus(s, well(pi / 2, pc), e), Torus(s, well(3 * pi / 2, pc), e));
    double biggest = 0.0;
    for (const auto& c : rep.paths) biggest = std::max(biggest, std::abs(c.coefficient));
    EXPECT_LT(std::abs(rep.amplitude), 1e-14 * biggest);
    EXPECT_TRUE(rep.interference_zero);
  }
}

TEST(Predictor, AmplitudeConventions) {
  PathContribution c;
  c.coefficient = complex(0.0, 0.3);
  const auto rep = amplitude({c}, 0.1, 2.0);
  EXPECT_NEAR(*rep.splitting, 2 * 0.1 * 0.3 / 2.0, 1e-16);
  EXPECT_NEAR(rep.eta, 0.3 / pi, 1e-16);
  EXPECT_FALSE(rep.interference_zero);
  try {
    amplitude({c}, 0.1, std::nullopt, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Configuration);
  }
  TransitionPath degenerate;
  degenerate.length = 0.0;
  degenerate.start_velocity = degenerate.end_velocity = 1.0;
  try {
    reflection_coefficient(degenerate, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularPath);
  }
}

TEST(Predictor, FourierAsymptoticsOfAbsCos) {
  const auto f = potentials::abs_cos();
  EXPECT_EQ(fourier_asymptotics(potentials::cos_squared(), 7, 3), complex(0.0));
  const complex exact = kTwoPi * std::conj(fourier_by_quadrature(f, 200));
  const complex approx = fourier_asymptotics(f, 200, 1);
  EXPECT_LT(std::abs(approx - exact), 0.05 * std::abs(exact));
  // The remainder after L = 1 is the third-derivative term, O(n^-4).
  double worst2 = 0.0, worst4 = 0.0;
  for (int n = 100; n <= 400; n += 10) {
    const complex q = kTwoPi * std::conj(fourier_by_quadrature(f, n));
    const double rem = std::abs(q - fourier_asymptotics(f, n, 1));
    worst2 = std::max(worst2, rem * n * n);
    worst4 = std::max(worst4, rem * std::pow(n, 4));
  }
  EXPECT_LT(worst2, 1e-3);
  EXPECT_LT(worst4, 10.0);
}

TEST(Predictor, FourierAsymptoticsLeadingTerm) {
  const auto f = potentials::max_cos_power(1);
  const int n = 101;
  const complex lead = -1.0 / (double(n) * n) *
                       (std::polar(1.0, n * pi / 2) + std::polar(1.0, n * 3 * pi / 2));
  // Value jumps vanish, so L = 1 is the first-derivative term alone.
  EXPECT_LT(std::abs(fourier_asymptotics(f, n, 1) - lead), 1e-15);
}
