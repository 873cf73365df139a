#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dpstat/distributions.hpp"
#include "dpstat/functionals.hpp"
#include "dpstat/rng.hpp"
#include "dpstat/sensitivity.hpp"

namespace dpstat {
namespace {

void expect_rel(double actual, double expected, double rel) {
  double scale = std::max(std::fabs(actual), std::fabs(expected));
  EXPECT_NEAR(actual, expected, rel * std::max(scale, 1e-300))
      << "actual " << actual << " expected " << expected;
}

TEST(PrivacyParamsTest, BetaFormulaAndValidation) {
  PrivacyParams p(1.0, 0.01);
  expect_rel(p.beta(), 1.0 / (2.0 * std::log(100.0)), 1e-15);
  EXPECT_FALSE(p.pure());
  EXPECT_TRUE(PrivacyParams(0.5, 0.0).pure());
  EXPECT_THROW(PrivacyParams(0.5, 0.0).beta(), DeltaZeroError);
  EXPECT_THROW(PrivacyParams(0.0, 0.1), ValidationError);
  EXPECT_THROW(PrivacyParams(1.0, 1.5), ValidationError);
  EXPECT_THROW(PrivacyParams(1.0, -0.1), ValidationError);
}

TEST(LocalSensitivity, Examples) {
  Interval dom(0.0, 10.0);
  Functional med = Functional::median(dom);
  EXPECT_DOUBLE_EQ(local_sensitivity(med, SampleData({1.0, 2.0, 3.0}, dom)),
                   1.0);

  // Linear with unit oscillation: (sup g - inf g) / n.
  PiecewiseLinear ramp({{0.0, 0.0}, {10.0, 1.0}});
  Functional lin = Functional::linear(ramp, Interval(0.0, 1.0));
  std::vector<double> hundred(100, 5.0);
  EXPECT_DOUBLE_EQ(local_sensitivity(lin, SampleData(hundred, dom)), 0.01);

  Functional flat =
      Functional::linear(PiecewiseLinear::constant(7.0), Interval(7.0, 7.0));
  EXPECT_DOUBLE_EQ(local_sensitivity(flat, SampleData({1.0, 2.0}, dom)), 0.0);

  // Mean: max_i max(x_i - L, U - x_i) / n.
  Functional mean = Functional::mean(dom);
  EXPECT_DOUBLE_EQ(local_sensitivity(mean, SampleData({1.0, 2.0}, dom)),
                   9.0 / 2.0);
}

TEST(SmoothSensitivity, BetaLimits) {
  Interval dom(0.0, 10.0);
  Functional med = Functional::median(dom);
  SampleData s({2.0, 4.0, 7.0, 8.0, 9.0}, dom);

  SensitivityResult at0 = smooth_sensitivity(med, s, 0.0);
  EXPECT_DOUBLE_EQ(at0.smooth, 10.0);  // global: both neighbors at endpoints
  EXPECT_FALSE(at0.capped_at_range);
  EXPECT_EQ(at0.method, SensitivityResult::Method::exact);

  SensitivityResult at50 = smooth_sensitivity(med, s, 50.0);
  EXPECT_DOUBLE_EQ(at50.smooth, at50.local);
  EXPECT_EQ(at50.k_star, 0u);
  EXPECT_DOUBLE_EQ(at50.local, local_sensitivity(med, s));

  EXPECT_THROW(smooth_sensitivity(med, s, -0.1), BetaNegativeError);
}

TEST(SmoothSensitivity, MatchesOracleOnWorkedSample) {
  Interval dom(0.0, 10.0);
  Functional med = Functional::median(dom);
  SampleData s({2.0, 4.0, 7.0, 8.0, 9.0}, dom);
  std::vector<double> grid = {0.0, 2.0, 4.0, 7.0, 8.0, 9.0, 10.0};
  double exact = smooth_sensitivity(med, s, 0.5).smooth;
  double oracle = smooth_sensitivity_oracle(med, s, 0.5, grid);
  expect_rel(exact, oracle, 1e-9);
}

TEST(SmoothSensitivity, NonincreasingInBetaAndAboveLocal) {
  Interval dom(-5.0, 5.0);
  Rng rng(424242);
  for (int inst = 0; inst < 5; ++inst) {
    std::vector<double> xs;
    for (int i = 0; i < 9; ++i) xs.push_back(-5.0 + 10.0 * rng.uniform());
    SampleData s(xs, dom);
    for (const Functional& t :
         {Functional::median(dom), Functional::quantile(0.25, dom)}) {
      double loc = local_sensitivity(t, s);
      double prev = 1e300;
      for (double beta : {0.0, 0.05, 0.1, 0.3, 0.7, 1.5, 4.0, 20.0}) {
        double ss = smooth_sensitivity(t, s, beta).smooth;
        EXPECT_LE(ss, prev + 1e-15);
        EXPECT_GE(ss, loc - 1e-15);
        prev = ss;
      }
    }
  }
}

TEST(SmoothSensitivity, GlobalBoundPathForMeanAndLinear) {
  Interval dom(0.0, 10.0);
  SampleData s({1.0, 5.0, 6.0, 9.0}, dom);
  Functional mean = Functional::mean(dom);
  SensitivityResult r = smooth_sensitivity(mean, s, 0.7);
  EXPECT_EQ(r.method, SensitivityResult::Method::global_bound);
  EXPECT_DOUBLE_EQ(r.smooth, 10.0 / 4.0);

  Functional trimmed = Functional::trimmed_mean(0.25, dom);
  // One point trimmed per side: span / (n - 2k) = 10 / 2.
  EXPECT_DOUBLE_EQ(smooth_sensitivity(trimmed, s, 0.7).smooth, 5.0);

  PiecewiseLinear ramp({{0.0, 0.0}, {10.0, 2.0}});
  Functional lin = Functional::linear(ramp, Interval(0.0, 2.0));
  EXPECT_DOUBLE_EQ(smooth_sensitivity(lin, s, 0.7).smooth, 0.5);
}

TEST(SmoothSensitivity, RangeCapBinds) {
  Interval dom(0.0, 10.0);
  // Declared range much narrower than the domain forces the cap.
  PiecewiseLinear ramp({{0.0, 0.0}, {10.0, 10.0}});
  Functional lin = Functional::linear(ramp, Interval(0.0, 1.0));
  SampleData s({1.0, 2.0}, dom);
  SensitivityResult r = smooth_sensitivity(lin, s, 0.0);
  EXPECT_TRUE(r.capped_at_range);
  EXPECT_DOUBLE_EQ(r.smooth, 1.0);
}

TEST(Oracle, TrivialCases) {
  Interval dom(0.0, 10.0);
  SampleData s({1.0, 2.0, 3.0}, dom);
  std::vector<double> grid = {0.0, 1.0, 2.0, 3.0, 10.0};

  Functional flat =
      Functional::linear(PiecewiseLinear::constant(2.0), Interval(2.0, 2.0));
  EXPECT_DOUBLE_EQ(smooth_sensitivity_oracle(flat, s, 0.5, grid), 0.0);

  Functional med = Functional::median(dom);
  EXPECT_DOUBLE_EQ(smooth_sensitivity_oracle(med, s, 0.0, grid), 10.0);

  EXPECT_THROW(smooth_sensitivity_oracle(
                   med, SampleData(std::vector<double>(8, 1.0), dom), 0.5, grid),
               TooLargeError);
  EXPECT_THROW(smooth_sensitivity_oracle(med, s, 0.5, {11.0}), ValidationError);
}

TEST(Oracle, AgreesWithExactOnRandomInstances) {
  Interval dom(0.0, 10.0);
  Rng rng(90210);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<double> grid = {0.0, 10.0};
    for (int i = 0; i < 5; ++i) grid.push_back(10.0 * rng.uniform());
    std::sort(grid.begin(), grid.end());
    std::vector<double> xs;
    for (int i = 0; i < 5; ++i)
      xs.push_back(grid[1 + static_cast<std::size_t>(5.9 * rng.uniform())]);
    SampleData s(xs, dom);
    for (const Functional& t :
         {Functional::median(dom), Functional::quantile(0.3, dom)}) {
      for (double beta : {0.0, 0.3, 1.0, 5.0}) {
        double exact = smooth_sensitivity(t, s, beta).smooth;
        double oracle = smooth_sensitivity_oracle(t, s, beta, grid);
        expect_rel(exact, oracle, 1e-9);
      }
    }
  }
}

TEST(SmoothSensitivityBound, WorkedExample) {
  double beta = PrivacyParams(1.0, 0.01).beta();
  double got = smooth_sensitivity_bound(20.0, 0.5, 100, beta, 0.1);
  long double t1 = 2.0L * 0.5L / 100.0L;
  long double t2 =
      20.0L *
      std::exp(-static_cast<long double>(beta) *
               (std::sqrt(100.0L * std::log(20.0L) / 2.0L) - 1.0L));
  expect_rel(got, static_cast<double>(std::max(t1, t2)), 1e-12);
  EXPECT_NEAR(got, 5.90, 0.02);
}

TEST(SmoothSensitivityBound, EdgeCasesAndCrossover) {
  EXPECT_DOUBLE_EQ(smooth_sensitivity_bound(0.0, 0.5, 100, 0.1, 0.1), 0.01);
  EXPECT_THROW(smooth_sensitivity_bound(20.0, 0.5, 100, -0.1, 0.1),
               BetaNegativeError);
  EXPECT_THROW(smooth_sensitivity_bound(20.0, 0.5, 100, 0.1, 1.0),
               EtaOutOfRangeError);

  // The exponential term dominates for small n and loses exactly once.
  double beta = 0.10857;
  bool seen_first = false;
  for (int k = 0; k <= 24; ++k) {
    std::size_t n = std::size_t{1} << k;
    double nn = static_cast<double>(n);
    double t1 = 2.0 * 0.5 / nn;
    double t2 = 20.0 * std::exp(-beta * (std::sqrt(nn * std::log(20.0) / 2.0) - 1.0));
    bool first_wins = t1 >= t2;
    if (seen_first) EXPECT_TRUE(first_wins) << "n = " << n;
    if (first_wins) seen_first = true;
    double bound = smooth_sensitivity_bound(20.0, 0.5, n, beta, 0.1);
    EXPECT_DOUBLE_EQ(bound, std::max(t1, t2));
  }
  EXPECT_TRUE(seen_first);
}

TEST(ReleaseErrorBound, WorkedExample) {
  PrivacyParams params(1.0, 1e-3);
  double got = release_error_bound(0.0, 20.0, 0.5, 1000000, params, 0.1);
  long double nn = 1000000.0L;
  long double t1 = 2.0L * 0.5L / nn;
  long double t2 = 20.0L * std::exp(-1.0L * std::sqrt(nn * std::log(20.0L)) /
                                    (74.0L * std::log(1000.0L)));
  long double factor = 2.0L * std::log(10.0L);
  expect_rel(got, static_cast<double>(factor * std::max(t1, t2)), 1e-12);
  // First branch alone would give 2 ln(10) * 1e-6 ~ 4.6e-6; the exponential
  // branch dominates at this n.
  EXPECT_NEAR(static_cast<double>(factor * t1), 4.60517e-6, 1e-9);
  EXPECT_GT(got, static_cast<double>(factor * t1));
}

TEST(ReleaseErrorBound, LimitsAndAdditivity) {
  PrivacyParams params(1e9, 1e-3);
  EXPECT_NEAR(release_error_bound(1.5, 20.0, 0.5, 1000, params, 0.1), 1.5, 1e-6);

  PrivacyParams mid(0.7, 1e-4);
  double base = release_error_bound(0.0, 20.0, 0.5, 500, mid, 0.2);
  double shifted = release_error_bound(7.25, 20.0, 0.5, 500, mid, 0.2);
  EXPECT_DOUBLE_EQ(shifted - base, 7.25);

  EXPECT_THROW(release_error_bound(0.0, 20.0, 0.5, 500, mid, 0.25),
               EtaOutOfRangeError);
  EXPECT_THROW(release_error_bound(0.0, 20.0, 0.5, 500, mid, 0.0),
               EtaOutOfRangeError);
  EXPECT_THROW(
      release_error_bound(0.0, 20.0, 0.5, 500, PrivacyParams(1.0, 0.0), 0.1),
      DeltaZeroError);
}

TEST(ContaminationRadius, ExamplesAndValidation) {
  EXPECT_DOUBLE_EQ(contamination_radius(100, 0.3), 0.02);
  // At the right endpoint the ceiling collapses to one replaced point.
  EXPECT_DOUBLE_EQ(contamination_radius(1000, std::log(2.0) / 2.0), 1e-3);
  EXPECT_THROW(contamination_radius(100, 0.0), AlphaOutOfRangeError);
  EXPECT_THROW(contamination_radius(100, 0.4), AlphaOutOfRangeError);
  EXPECT_THROW(contamination_radius(0, 0.3), ValidationError);

  Rng rng(777);
  for (int i = 0; i < 50; ++i) {
    double alpha = 1e-3 + (std::log(2.0) / 2.0 - 1e-3) * rng.uniform();
    double rho = contamination_radius(250, alpha);
    double k = rho * 250.0;
    EXPECT_GE(k, 1.0 - 1e-12);
    EXPECT_NEAR(k, std::round(k), 1e-9);  // whole number of replaced entries
  }
}

TEST(SmoothSensitivityBound, EmpiricalCoverageForMedian) {
  // Median on UniformShift(0): the bound with the exact ball supremum holds
  // with probability >= 1 - eta; allow 3 percentage points of slack.
  Distribution u0 = Distribution::uniform_shift(0.0);
  Functional med = Functional::median(u0.domain());
  const std::size_t n = 400;
  const double eta = 0.1;
  double beta = PrivacyParams(1.0, 0.01).beta();
  RobustnessProfile prof = gamma_n(med, u0, n, eta);
  double bound =
      smooth_sensitivity_bound(med.range_length(), prof.gamma_n, n, beta, eta);
  int covered = 0;
  for (std::uint64_t trial = 0; trial < 500; ++trial) {
    SampleData s = draw_sample(u0, n, Rng::mix(60601, {trial}));
    if (smooth_sensitivity(med, s, beta).smooth <= bound) ++covered;
  }
  EXPECT_GE(covered, 435);  // (1 - eta - 0.03) * 500
}

}  // namespace
}  // namespace dpstat
