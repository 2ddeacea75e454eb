#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "nonsmooth/analysis.hpp"

using namespace nonsmooth;
using namespace nonsmooth::analysis;

namespace {

NDPair pair_at(double mean, double splitting) {
  NDPair p;
  p.mean = mean;
  p.splitting = splitting;
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Construction;
}

}  // namespace

TEST(ParallelMap, KeepsGridOrder) {
  std::function<int(std::size_t)> square = [](std::size_t i) { return static_cast<int>(i * i); };
  for (int jobs : {1, 2, 4, 9}) {
    const auto out = parallel_map<int>(25, jobs, square);
    ASSERT_EQ(out.size(), 25u);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  }
}

TEST(ParallelMap, RethrowsTaskFailure) {
  std::function<int(std::size_t)> f = [](std::size_t i) -> int {
    if (i == 7) throw Error(ErrorCode::EigenFailure, "boom");
    return 0;
  };
  EXPECT_EQ(code_of([&] { parallel_map<int>(20, 3, f); }), ErrorCode::EigenFailure);
}

TEST(Interpolation, ExactForPowerLaws) {
  std::vector<NDPair> pairs;
  for (double e : {1.0, 1.5, 2.2, 3.1}) pairs.push_back(pair_at(e, 0.01 * std::pow(e, -3)));
  for (double e : {1.2, 2.0, 3.0}) {
    EXPECT_NEAR(*interpolated_splitting(pairs, e), 0.01 * std::pow(e, -3), 1e-15);
  }
  EXPECT_FALSE(interpolated_splitting(pairs, 0.5));
  EXPECT_FALSE(interpolated_splitting(pairs, 3.5));
  EXPECT_DOUBLE_EQ(nearest_pair(pairs, 2.0)->mean, 2.2);
}

TEST(Envelope, FindsNearestInterferenceMaximum) {
  // |sin(a/h)| h^2 peaks where a/h = pi/2 + m pi.
  const double a = 1.0 / std::numbers::pi;
  auto f = [a](double h) { return std::abs(std::sin(a / h)) * h * h; };
  const double hbar = 0.04;
  const auto env = envelope_maximum(f, hbar);
  EXPECT_NEAR(env.hbar, hbar, 2.5 * hbar * hbar);
  // Dense-grid oracle around the returned point.
  double best = 0.0;
  for (int i = -20000; i <= 20000; ++i) best = std::max(best, f(env.hbar + 1e-7 * i));
  EXPECT_NEAR(env.value, best, 1e-9 * best);
  EXPECT_GT(std::abs(std::sin(a / env.hbar)), 0.95);
  EnvelopeOptions narrow;
  narrow.width_factor = 1e-6;
  EXPECT_EQ(code_of([&] { envelope_maximum([](double h) { return h; }, hbar, narrow); }),
            ErrorCode::InsufficientData);
}

TEST(SlopeFit, RecoversExponent) {
  std::vector<double> h{0.08, 0.04, 0.02, 0.01};
  std::vector<double> y;
  for (double x : h) y.push_back(3.0 * std::pow(x, 2.5));
  const auto fit = fit_loglog(h, y);
  EXPECT_NEAR(fit.slope, 2.5, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 3.0, 1e-12);
  EXPECT_EQ(code_of([] { fit_loglog({0.1, 0.2}, {1.0, 2.0}); }), ErrorCode::InsufficientData);
  EXPECT_EQ(code_of([] { fit_loglog({0.1, 0.2, 0.3}, {1.0, 0.0, 2.0}); }), ErrorCode::InsufficientData);
}

TEST(Compare, HalfCosineCaseTracksPrediction) {
  catalog::Parameters p;
  p.hbar = 0.05;
  const auto e = catalog::build("ex2.1", p);
  const auto rows = compare(e, 1.5, 3.0);
  ASSERT_GT(rows.size(), 5u);
  int good = 0;
  for (const auto& r : rows) {
    EXPECT_EQ(r.source, "closed-form");
    if (std::abs(r.ratio - 1.0) < 0.25) ++good;
  }
  EXPECT_GT(good, static_cast<int>(rows.size()) / 2);
}

TEST(Scan, LambdaZeroIsDegenerate) {
  ScanOptions opt;
  opt.system = "H2";
  opt.params.hbar = 0.05;
  opt.energy = 1.5;
  opt.emin = 1.0;
  opt.emax = 2.5;
  opt.jobs = 2;
  const auto res = scan(ScanAxis::Lambda, {0.0, 0.5, 1.0}, opt);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_EQ(res.rows[0].amplitude_predicted, 0.0);
  EXPECT_LT(res.rows[0].splitting_numeric, 1e-12);
  EXPECT_GT(res.rows[2].splitting_numeric, 1e-6);
  EXPECT_FALSE(res.slope);
}

TEST(Scan, HalfHbarOffsetGivesExactDegeneracy) {
  ScanOptions opt;
  opt.system = "ex3.2";
  opt.params.hbar = 0.05;
  opt.energy = 0.5;
  opt.emin = 0.2;
  opt.emax = 0.8;
  const auto res = scan(ScanAxis::Pc, {0.0, 0.0125, 0.025}, opt);
  EXPECT_GT(res.rows[0].splitting_numeric, 1e-6);
  EXPECT_LT(res.rows[2].splitting_numeric, 1e-10);
  EXPECT_TRUE(res.rows[2].interference_zero);
  EXPECT_LT(res.rows[2].amplitude_predicted, 1e-14);
}

TEST(Scan, HbarScanNeedsThreePoints) {
  ScanOptions opt;
  opt.system = "H2";
  opt.energy = 1.5;
  opt.emin = 1.0;
  opt.emax = 2.5;
  EXPECT_EQ(code_of([&] { scan(ScanAxis::Hbar, {0.05, 0.04}, opt); }), ErrorCode::InsufficientData);
  const auto res = scan(ScanAxis::Hbar, {0.08, 0.06, 0.04}, opt);
  ASSERT_TRUE(res.slope);
  EXPECT_EQ(res.slope->points, 3u);
}
