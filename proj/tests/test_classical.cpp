#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nonsmooth/classical.hpp"
#include "nonsmooth/potentials.hpp"

using namespace nonsmooth;

namespace {

constexpr double pi = std::numbers::pi;

TorusClass rot_plus(double e_min = -1e300) {
  TorusClass c;
  c.name = "O+";
  c.p_lo = 0.0;
  c.energy_min = e_min;
  return c;
}

TorusClass rot_minus(double e_min = -1e300) {
  TorusClass c;
  c.name = "O-";
  c.p_hi = 0.0;
  c.energy_min = e_min;
  return c;
}

TorusClass well(double x_center, double p_junction, double e_min, double e_max, int maslov = 2) {
  TorusClass c;
  c.name = "well";
  c.kind = TorusKind::Librational;
  c.x_center = x_center;
  c.p_junction = p_junction;
  c.energy_min = e_min;
  c.energy_max = e_max;
  c.maslov = maslov;
  return c;
}

CircleSystem quartic_system() {
  CircleSystem s;
  s.kinetic = KineticForm::quartic_double_well();
  s.potential = potentials::inverted_parabola();
  s.hbar = 0.05;
  return s;
}

TorusClass quartic_plus() {
  auto c = well(pi, 1.0, 0.0, 1.0);
  c.p_lo = 0.0;
  return c;
}

TorusClass quartic_minus() {
  auto c = well(pi, -1.0, 0.0, 1.0);
  c.p_hi = 0.0;
  return c;
}

CircleSystem abs_kinetic(double pc) {
  CircleSystem s;
  s.kinetic = KineticForm::shifted_abs(pc);
  s.potential = potentials::cos_squared();
  s.hbar = 0.05;
  return s;
}

CircleSystem h2() {
  CircleSystem s;
  s.potential = potentials::abs_cos();
  s.hbar = 0.05;
  return s;
}

// Midpoint rule on a fine grid.
template <class F>
double midpoint(F f, double a, double b, int n = 400000) {
  const double h = (b - a) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += f(a + (i + 0.5) * h);
  return sum * h;
}

}  // namespace

TEST(Classical, FreeRotorActionAndPeriod) {
  CircleSystem s;
  s.hbar = 0.1;
  const double e = 0.7;
  const Torus t(s, rot_plus(0.0), e);
  EXPECT_NEAR(t.action(), kTwoPi * std::sqrt(2 * e), 1e-12);
  EXPECT_NEAR(t.period(), kTwoPi / std::sqrt(2 * e), 1e-12);
  EXPECT_NEAR(t.phase_integral(1.0), std::sqrt(2 * e), 1e-13);
}

TEST(Classical, TimeReversedTorusHasSameAction) {
  const auto s = h2();
  for (double e : {1.3, 2.0, 3.5}) {
    const Torus a(s, rot_plus(1.0), e);
    const Torus b(s, rot_minus(1.0), e);
    EXPECT_NEAR(a.action(), b.action(), 1e-10 * a.action());
    EXPECT_GT(a.action(), 0.0);
  }
  const auto q = quartic_system();
  const Torus a(q, quartic_plus(), 0.4);
  const Torus b(q, quartic_minus(), 0.4);
  EXPECT_NEAR(a.action(), b.action(), 1e-10);
}

TEST(Classical, PeriodIsActionDerivative) {
  const auto s = h2();
  const double e = 1.7, h = 1e-5;
  const double dS = (Torus(s, rot_plus(1.0), e + h).action() - Torus(s, rot_plus(1.0), e - h).action()) / (2 * h);
  EXPECT_NEAR(Torus(s, rot_plus(1.0), e).period(), dS, 1e-6);

  const auto q = quartic_system();
  const double e2 = 0.5;
  const double dS2 = (Torus(q, quartic_plus(), e2 + h).action() - Torus(q, quartic_plus(), e2 - h).action()) / (2 * h);
  EXPECT_NEAR(Torus(q, quartic_plus(), e2).period(), dS2, 1e-6);

  const auto w = abs_kinetic(0.0);
  const auto cls = well(pi / 2, 0.0, 0.0, 1.0);
  const double dS3 = (Torus(w, cls, 0.6 + h).action() - Torus(w, cls, 0.6 - h).action()) / (2 * h);
  EXPECT_NEAR(Torus(w, cls, 0.6).period(), dS3, 1e-6);
}

TEST(Classical, AbsKineticWellMatchesClosedForm) {
  for (double pc : {0.0, 0.3}) {
    const auto s = abs_kinetic(pc);
    const double e = 0.45;
    const Torus t(s, well(pi / 2, pc, 0.0, 1.0), e);
    const double xc = std::acos(std::sqrt(e));
    EXPECT_NEAR(t.x_left(), xc, 1e-12);
    EXPECT_NEAR(t.x_right(), pi - xc, 1e-12);
    const double S = 2 * (e * (pi - 2 * xc) - (pi - 2 * xc) / 2 + std::sin(2 * xc) / 2);
    EXPECT_NEAR(t.action(), S, 1e-12);
    EXPECT_NEAR(t.period(), 2 * (pi - 2 * xc), 1e-12);
  }
}

TEST(Classical, QuarticWellActionAgainstQuadrature) {
  const auto s = quartic_system();
  const double e = 0.3;
  const Torus t(s, quartic_plus(), e);
  // Near pi, V = 1 - (1 - |x - pi|/pi)^2, so V = e at |x - pi| = pi (1 - sqrt(1 - e)).
  const double half = pi * (1 - std::sqrt(1 - e));
  EXPECT_NEAR(t.x_left(), pi - half, 1e-12);
  EXPECT_NEAR(t.x_right(), pi + half, 1e-12);
  auto width = [&](double x) {
    const double d = 1 - std::abs(x - pi) / pi;
    const double u = std::sqrt(std::max(0.0, e - (1 - d * d)));
    return std::sqrt(1 + u) - std::sqrt(1 - u);
  };
  // Substitution x = pi + half sin(theta) removes the endpoint square roots.
  auto g = [&](double th) { return width(pi + half * std::sin(th)) * half * std::cos(th); };
  const double oracle = midpoint(g, -pi / 2, pi / 2);
  EXPECT_NEAR(t.action(), oracle, 1e-9);
}

TEST(Classical, EbkLevelsOfFreeRotor) {
  CircleSystem s;
  s.hbar = 0.1;
  const auto levels = ebk_levels(s, rot_plus(0.0), 0.01, 2.0);
  ASSERT_FALSE(levels.empty());
  for (const auto& l : levels) {
    EXPECT_NEAR(l.energy, 0.5 * (l.n * s.hbar) * (l.n * s.hbar), 1e-12);
    EXPECT_NEAR(Torus(s, rot_plus(0.0), l.energy).action(), kTwoPi * l.n * s.hbar, 1e-12);
  }
  EXPECT_EQ(levels.front().n, 2);
  EXPECT_EQ(levels.back().n, 20);
}

TEST(Classical, EbkMaslovShift) {
  const auto s = abs_kinetic(0.0);
  const auto cls = well(pi / 2, 0.0, 0.0, 1.0);
  for (const auto& l : ebk_levels(s, cls, 0.05, 0.95)) {
    EXPECT_NEAR(Torus(s, cls, l.energy).action(), kTwoPi * (l.n + 0.5) * s.hbar, 1e-12);
    EXPECT_EQ(ebk_quantum_number(s, cls, l.energy), l.n);
  }
}

TEST(Classical, SeparatrixAndMissingTorus) {
  const auto s = h2();
  try {
    Torus(s, rot_plus(1.0), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularTorus);
  }
  try {
    Torus(s, rot_plus(1.0), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoTorus);
  }
  // Without a declared range the missing branch is still detected.
  try {
    Torus(s, rot_plus(), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoTorus);
  }
}

TEST(Classical, PhaseIntegralProjectionError) {
  const auto s = abs_kinetic(0.0);
  const Torus t(s, well(pi / 2, 0.0, 0.0, 1.0), 0.5);
  EXPECT_NEAR(t.phase_integral(t.x_right()), 0.5 * t.action(), 1e-12);
  try {
    t.phase_integral(3 * pi / 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Projection);
  }
}

TEST(Classical, XLinePathsOfRotationalTori) {
  const auto s = h2();
  const double e = 2.0;
  const Torus a(s, rot_plus(1.0), e);
  const Torus b(s, rot_minus(1.0), e);
  const auto paths = find_transition_paths(a, b);
  ASSERT_EQ(paths.size(), 2u);
  for (const auto& p : paths) {
    EXPECT_EQ(p.axis, Axis::X);
    EXPECT_EQ(p.order, 1);
    EXPECT_NEAR(p.start.p, std::sqrt(2 * e), 1e-13);
    EXPECT_NEAR(p.length, 2 * std::sqrt(2 * e), 1e-13);
    EXPECT_NEAR(std::abs(p.jump), 2.0, 1e-12);
    EXPECT_NEAR(s.hamiltonian(p.start.x, p.start.p), e, 1e-10);
    EXPECT_NEAR(s.hamiltonian(p.end.x, p.end.p), e, 1e-10);
    EXPECT_NEAR(p.start_velocity, -p.end_velocity, 1e-13);
  }
}

TEST(Classical, QuarticFourPaths) {
  const auto s = quartic_system();
  const double e = 0.36;
  const auto paths = find_transition_paths(Torus(s, quartic_plus(), e), Torus(s, quartic_minus(), e));
  ASSERT_EQ(paths.size(), 4u);
  for (const auto& p : paths) {
    EXPECT_NEAR(p.locus, pi, 1e-14);
    EXPECT_NEAR(std::abs(p.jump), 4 / pi, 1e-10);
    EXPECT_GT(p.start.p, 0.0);
    EXPECT_LT(p.end.p, 0.0);
    const double u = std::sqrt(e);
    EXPECT_TRUE(std::abs(p.start.p - std::sqrt(1 + u)) < 1e-12 || std::abs(p.start.p - std::sqrt(1 - u)) < 1e-12);
  }
}

TEST(Classical, PLinePathsOfWells) {
  const double pc = 0.2;
  const auto s = abs_kinetic(pc);
  const double e = 0.3;
  const Torus a(s, well(pi / 2, pc, 0.0, 1.0), e);
  const Torus b(s, well(3 * pi / 2, pc, 0.0, 1.0), e);
  const auto paths = find_transition_paths(a, b);
  ASSERT_EQ(paths.size(), 4u);
  const double xc = std::acos(std::sqrt(e));
  std::vector<double> lengths;
  for (const auto& p : paths) {
    EXPECT_EQ(p.axis, Axis::P);
    EXPECT_NEAR(p.jump, 2.0, 1e-12);
    EXPECT_NEAR(std::abs(p.start_velocity), std::sin(2 * xc), 1e-10);
    lengths.push_back(p.length);
  }
  std::sort(lengths.begin(), lengths.end());
  EXPECT_NEAR(lengths[0], 2 * xc, 1e-12);
  EXPECT_NEAR(lengths[1], pi, 1e-12);
  EXPECT_NEAR(lengths[2], pi, 1e-12);
  EXPECT_NEAR(lengths[3], 2 * pi - 2 * xc, 1e-12);
}

TEST(Classical, FlowArcsOfRotationalLoop) {
  const auto s = h2();
  const double e = 2.0;
  const Torus a(s, rot_plus(1.0), e);
  const Torus b(s, rot_minus(1.0), e);
  const double p = std::sqrt(2 * e);
  const auto up = a.flow_arc({pi / 2, 0}, {3 * pi / 2, 0});
  const auto down = b.flow_arc({3 * pi / 2, 0}, {pi / 2, 0});
  auto mom = [&](double x) { return std::sqrt(2 * (e - std::abs(std::cos(x)))); };
  const double oracle = midpoint(mom, pi / 2, 3 * pi / 2);
  EXPECT_NEAR(up.integral, oracle, 1e-9);
  EXPECT_NEAR(down.integral, oracle, 1e-9);
  EXPECT_EQ(up.x_caustics + down.x_caustics, 0);
  (void)p;
  // The wrapped direction covers the complement.
  const auto rest = a.flow_arc({3 * pi / 2, 0}, {pi / 2, 0});
  EXPECT_NEAR(rest.integral + up.integral, a.action(), 1e-11);
}

TEST(Classical, FlowArcsOfWell) {
  const auto s = abs_kinetic(0.0);
  const double e = 0.5;
  const Torus t(s, well(pi / 2, 0.0, 0.0, 1.0), e);
  const PhasePoint left{t.x_left(), 0.0};
  const PhasePoint right{t.x_right(), 0.0};
  const auto upper = t.flow_arc(left, right);
  const auto lower = t.flow_arc(right, left);
  EXPECT_NEAR(upper.integral, 0.5 * t.action(), 1e-12);
  EXPECT_NEAR(lower.integral, 0.5 * t.action(), 1e-12);
  // Each half passes the bottom of the well once, where p-dot vanishes.
  EXPECT_EQ(upper.p_caustics, 1);
  EXPECT_EQ(lower.p_caustics, 1);
  EXPECT_EQ(upper.x_caustics, 0);
  const auto full = t.flow_arc({pi / 2, 0.5}, {pi / 2, -0.5});
  EXPECT_EQ(full.x_caustics, 1);
  EXPECT_NEAR(full.integral, 0.5 * t.action(), 1e-11);
  EXPECT_EQ(t.flow_arc(left, left).integral, 0.0);
}

TEST(Classical, EnergyMismatchAndTangency) {
  const auto s = h2();
  try {
    find_transition_paths(Torus(s, rot_plus(1.0), 2.0), Torus(s, rot_minus(1.0), 2.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EnergyMismatch);
  }
  // Inner quartic branch touching p = 0 exactly on the kink line x = pi.
  const auto q = quartic_system();
  TorusClass inner_plus = rot_plus();
  inner_plus.p_hi = 1.0;
  TorusClass inner_minus = rot_minus();
  inner_minus.p_lo = -1.0;
  try {
    find_transition_paths(Torus(q, inner_plus, 1.0), Torus(q, inner_minus, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Tangency);
  }
}
