#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nonsmooth/lattice_sum.hpp"
#include "oracles.hpp"

using namespace nonsmooth;
constexpr double pi = std::numbers::pi;

TEST(LatticeSum, CosecantIdentity) {
  EXPECT_NEAR(circle_lattice_sum(1.0, 0.0, 2).real(), 1.0 / (4.0 * std::pow(std::sin(0.5), 2)), 1e-14);
  EXPECT_NEAR(circle_lattice_sum(1.0, 0.0, 2).imag(), 0.0, 1e-15);
}

TEST(LatticeSum, ClosedFormsMatchBruteForce) {
  for (int k : {2, 3}) {
    for (double x : {0.2, 1.0, pi, 5.0}) {
      for (double y : {0.0, 0.25, 0.5, 0.9}) {
        const auto w = circle_lattice_sum(x, y, k);
        const auto b = oracle::lattice_sum_brute(x, y, k);
        EXPECT_LT(std::abs(w - b), 1e-8) << "k=" << k << " x=" << x << " y=" << y;
      }
    }
  }
}

TEST(LatticeSum, TruncatedOrdersMatchBruteForce) {
  for (int k : {4, 5, 7}) {
    for (double x : {0.2, 3.0, 9.0}) {
      for (double y : {0.0, 0.3, 0.5}) {
        const auto w = circle_lattice_sum(x, y, k);
        const auto b = oracle::lattice_sum_brute(x, y, k, 20000);
        EXPECT_LT(std::abs(w - b), 1e-11 * std::max(1.0, std::abs(b))) << k << " " << x << " " << y;
      }
    }
  }
}

TEST(LatticeSum, QuasiPeriodicity) {
  const std::complex<double> I(0.0, 1.0);
  for (int k : {2, 3, 4}) {
    for (double x : {0.2, 1.0, 2.5, 5.0}) {
      for (double y : {0.0, 0.3, 0.75, -0.4, 1.6}) {
        const auto w = circle_lattice_sum(x, y, k);
        // Shifting x by 2 pi perturbs it by an ulp; |dW/dx| ~ k/x^(k+1) makes
        // k = 4 at small x ill-conditioned in absolute terms.
        const double tol = k <= 3 ? 1e-12 : 1e-12 * std::max(1.0, std::abs(w));
        EXPECT_LT(std::abs(circle_lattice_sum(x, y + 1.0, k) - w), tol);
        EXPECT_LT(std::abs(std::exp(I * (2.0 * pi * y)) * circle_lattice_sum(x + 2.0 * pi, y, k) - w), tol) << k << " " << x << " " << y;
      }
    }
  }
}

TEST(LatticeSum, ReducesToPlainPowerForLargeOrder) {
  // The q = 0 image dominates when |x| is small.
  const double x = 0.05;
  EXPECT_NEAR(std::abs(circle_lattice_sum(x, 0.3, 6)) * std::pow(x, 6), 1.0, 1e-6);
}

TEST(LatticeSum, Errors) {
  EXPECT_THROW(circle_lattice_sum(0.0, 0.3, 2), Error);
  EXPECT_THROW(circle_lattice_sum(4.0 * pi, 0.3, 3), Error);
  EXPECT_THROW(circle_lattice_sum(1.0, 0.3, 1), Error);
  try {
    circle_lattice_sum(2.0 * pi, 0.0, 5);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivergentSum);
  }
}
