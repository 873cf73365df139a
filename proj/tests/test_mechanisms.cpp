#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dpstat/distributions.hpp"
#include "dpstat/functionals.hpp"
#include "dpstat/mechanisms.hpp"
#include "dpstat/mestimation.hpp"
#include "dpstat/rng.hpp"

namespace dpstat {
namespace {

void expect_rel(double actual, double expected, double rel) {
  double scale = std::max(std::fabs(actual), std::fabs(expected));
  EXPECT_NEAR(actual, expected, rel * std::max(scale, 1e-300))
      << "actual " << actual << " expected " << expected;
}

TEST(LaplaceDraw, MedianAndTails) {
  Rng rng(20240601);
  const std::size_t n = 1000000;
  std::vector<double> abs_z(n);
  std::size_t over1 = 0, over2 = 0, over3 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = laplace_draw(rng);
    abs_z[i] = std::fabs(z);
    if (abs_z[i] > 1.0) ++over1;
    if (abs_z[i] > 2.0) ++over2;
    if (abs_z[i] > 3.0) ++over3;
  }
  std::nth_element(abs_z.begin(), abs_z.begin() + n / 2, abs_z.end());
  EXPECT_NEAR(abs_z[n / 2], std::log(2.0), 0.01);

  auto check_tail = [n](std::size_t count, double t) {
    double p = std::exp(-t);
    double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    EXPECT_NEAR(static_cast<double>(count) / static_cast<double>(n), p,
                3.0 * se)
        << "t = " << t;
  };
  check_tail(over1, 1.0);
  check_tail(over2, 2.0);
  check_tail(over3, 3.0);

  Rng a(5), b(5);
  EXPECT_EQ(laplace_draw(a), laplace_draw(b));
}

TEST(SmoothSensitivityRelease, NoiseScaleArithmetic) {
  // Mean on [0,1] with n = 100: global bound 0.01, so scale = 0.02 at alpha 1.
  Interval dom(0.0, 1.0);
  std::vector<double> xs(100, 0.5);
  SampleData s(xs, dom);
  Functional mean = Functional::mean(dom);
  PrivacyParams params(1.0, 1e-3);
  PrivateEstimate est = smooth_sensitivity_release(mean, s, params, 99);
  EXPECT_DOUBLE_EQ(est.noise_scale, 0.02);
  EXPECT_DOUBLE_EQ(est.nonprivate_value, 0.5);
  EXPECT_DOUBLE_EQ(est.value, est.nonprivate_value + est.noise_scale * est.noise_draw);
  EXPECT_EQ(est.mechanism, PrivateEstimate::Mechanism::smooth_laplace);
  EXPECT_EQ(est.seed, 99u);

  // Replays exactly from the recorded seed.
  PrivateEstimate again = smooth_sensitivity_release(mean, s, params, 99);
  EXPECT_EQ(est.value, again.value);
  EXPECT_EQ(est.noise_draw, again.noise_draw);
  EXPECT_NE(smooth_sensitivity_release(mean, s, params, 100).value, est.value);
}

TEST(SmoothSensitivityRelease, ZeroNoiseSeam) {
  Interval dom(0.0, 10.0);
  SampleData s({1.0, 2.0, 3.0}, dom);
  Functional med = Functional::median(dom);
  PrivateEstimate est = smooth_sensitivity_release_with_noise(
      med, s, PrivacyParams(1.0, 1e-3), 0.0, 7);
  EXPECT_EQ(est.value, est.nonprivate_value);
  EXPECT_DOUBLE_EQ(est.nonprivate_value, 2.0);
  EXPECT_GT(est.noise_scale, 0.0);
}

TEST(SmoothSensitivityRelease, LaplaceTailOnMedianSample) {
  Distribution u0 = Distribution::uniform_shift(0.0);
  SampleData s = draw_sample(u0, 1000, std::uint64_t{31415});
  Functional med = Functional::median(u0.domain());
  PrivacyParams params(1.0, 1e-3);
  double scale =
      smooth_sensitivity(med, s, params.beta()).smooth * 2.0 / params.alpha();
  ASSERT_GT(scale, 0.0);

  Mechanism mech = make_smooth_laplace(med, params);
  auto release = mech.bind(s);
  double base = mech.plugin(s);
  const std::size_t runs = 10000;
  std::size_t over[3] = {0, 0, 0};
  for (std::size_t i = 0; i < runs; ++i) {
    double dev = std::fabs(release(Rng::mix(8080, {i})) - base);
    for (int t = 1; t <= 3; ++t)
      if (dev > scale * static_cast<double>(t)) ++over[t - 1];
  }
  for (int t = 1; t <= 3; ++t) {
    double p = std::exp(-static_cast<double>(t));
    double se = std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
    EXPECT_LE(static_cast<double>(over[t - 1]) / static_cast<double>(runs),
              p + 3.0 * se)
        << "t = " << t;
  }
}

TEST(ExpMechDensity, HandValues) {
  Interval dom(0.0, 4.0);
  SampleData s({1.0, 2.0, 3.0}, dom);
  PsiSpec sign = PsiSpec::sign_median();
  PrivacyParams pure(1.0, 0.0);
  PriorSpec prior = PriorSpec::uniform(0.0, 4.0);

  // At the root the exponent vanishes and the prior value survives.
  EXPECT_DOUBLE_EQ(exp_mech_density(sign, s, pure, prior, 2.0), 0.25);
  // |Psi(2.5)| = 1/3 and n alpha / (2K) = 1.5.
  expect_rel(exp_mech_density(sign, s, pure, prior, 2.5),
             0.25 * std::exp(-0.5), 1e-15);

  // alpha -> 0 leaves only the prior.
  PrivacyParams weak(1e-12, 0.0);
  for (double t = 0.0; t <= 4.0; t += 0.25)
    expect_rel(exp_mech_density(sign, s, weak, prior, t), prior.density(t),
               1e-9);
}

TEST(ExpMechDensity, ScaleFreeInPsiAndK) {
  Interval dom(0.0, 4.0);
  SampleData s({0.5, 1.0, 2.5, 3.0}, dom);
  PrivacyParams pure(0.7, 0.0);
  PriorSpec prior = PriorSpec::uniform(0.0, 4.0);
  PsiSpec base = PsiSpec::clipped_shift(0.8);
  PsiSpec scaled = base.scaled(3.0);
  for (double t = 0.0; t <= 4.0; t += 0.1)
    expect_rel(exp_mech_density(base, s, pure, prior, t),
               exp_mech_density(scaled, s, pure, prior, t), 1e-12);
}

TEST(ExpMechTableTest, PriorOnlyLimitIsUniform) {
  Interval dom(0.0, 4.0);
  SampleData s({1.0, 2.0, 3.0}, dom);
  ExpMechTable table(PsiSpec::sign_median(), s, PrivacyParams(1e-12, 0.0),
                     PriorSpec::uniform(0.0, 4.0), 1024);
  const std::size_t n = 100000;
  std::vector<double> draws(n);
  Rng rng(777);
  for (std::size_t i = 0; i < n; ++i) draws[i] = table.sample_value(rng.uniform());
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = draws[i] / 4.0;
    double lo = static_cast<double>(i) / static_cast<double>(n);
    double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    ks = std::max({ks, std::fabs(f - lo), std::fabs(f - hi)});
  }
  EXPECT_LE(ks, 0.01);
}

TEST(ExpMechTableTest, HistogramMatchesTabulatedDensity) {
  Interval dom(0.0, 4.0);
  SampleData s({1.0, 2.0, 3.0}, dom);
  // 1025 nodes = 1024 cells: 64-bin edges land exactly on grid nodes.
  ExpMechTable table(PsiSpec::sign_median(), s, PrivacyParams(1.0, 0.0),
                     PriorSpec::uniform(0.0, 4.0), 1025);
  const std::size_t bins = 64;
  std::vector<double> expected(bins, 0.0);
  for (std::size_t i = 0; i + 1 < table.size(); ++i) {
    double mid = (table.grid_theta(i) + table.grid_theta(i + 1)) / 2.0;
    auto b = static_cast<std::size_t>(mid / 4.0 * static_cast<double>(bins));
    expected[b] += (table.normalized_density(i) + table.normalized_density(i + 1)) /
                   2.0 * (table.grid_theta(i + 1) - table.grid_theta(i));
  }
  const std::size_t n = 100000;
  std::vector<double> observed(bins, 0.0);
  Rng rng(4242);
  for (std::size_t i = 0; i < n; ++i) {
    double v = table.sample_value(rng.uniform());
    auto b = std::min(bins - 1,
                      static_cast<std::size_t>(v / 4.0 * static_cast<double>(bins)));
    observed[b] += 1.0 / static_cast<double>(n);
  }
  double tv = 0.0;
  for (std::size_t b = 0; b < bins; ++b)
    tv += 0.5 * std::fabs(observed[b] - expected[b]);
  EXPECT_LE(tv, 0.02);
}

TEST(ExpMechTableTest, MassConcentratesAsAlphaGrows) {
  Distribution u0 = Distribution::uniform_shift(0.0);
  SampleData s = draw_sample(u0, 100, std::uint64_t{1618});
  double center = solve_m_estimator(PsiSpec::sign_median(), s, 1e-9);
  PriorSpec prior = PriorSpec::uniform(-2.0, 2.0);
  std::vector<double> exceed;
  for (double alpha : {0.1, 1.0, 10.0}) {
    ExpMechTable table(PsiSpec::sign_median(), s, PrivacyParams(alpha, 0.0),
                       prior, 1024);
    Rng rng(2718);
    std::size_t out = 0;
    for (int i = 0; i < 2000; ++i)
      if (std::fabs(table.sample_value(rng.uniform()) - center) > 0.3) ++out;
    exceed.push_back(static_cast<double>(out) / 2000.0);
  }
  EXPECT_GE(exceed[0], exceed[1]);
  EXPECT_GE(exceed[1], exceed[2]);
  EXPECT_GT(exceed[0], exceed[2]);  // strictly less mass far out at n alpha x100
}

TEST(ExpMechTableTest, ArgmaxSitsAtMinimalPsi) {
  Interval dom(0.0, 4.0);
  SampleData s({0.5, 1.0, 1.5, 2.5, 3.5}, dom);
  PsiSpec sign = PsiSpec::sign_median();
  ExpMechTable table(sign, s, PrivacyParams(2.0, 0.0),
                     PriorSpec::uniform(0.0, 4.0), 1024);
  std::size_t argmax = 0;
  double best_psi = 1e300;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.normalized_density(i) > table.normalized_density(argmax)) argmax = i;
    best_psi = std::min(best_psi,
                        std::fabs(big_psi(sign, s, table.grid_theta(i))));
  }
  EXPECT_LE(std::fabs(big_psi(sign, s, table.grid_theta(argmax))),
            best_psi + 1e-12);
}

TEST(ExpMechTableTest, CauchyPriorTanGridCoversRealLine) {
  Interval dom(-1.0, 1.0);
  SampleData s({-0.5, 0.0, 0.5}, dom);
  ExpMechTable table(PsiSpec::sign_median(), s, PrivacyParams(1.0, 0.0),
                     PriorSpec::cauchy(), 2048);
  EXPECT_GT(table.grid_theta(1), -1e15);
  EXPECT_LT(table.grid_theta(table.size() - 2), 1e15);
  EXPECT_GT(table.total_mass(), 0.0);
  // Sampling stays finite and reproducible.
  Rng a(12), b(12);
  double va = table.sample_value(a.uniform());
  double vb = table.sample_value(b.uniform());
  EXPECT_EQ(va, vb);
  EXPECT_TRUE(std::isfinite(va));
}

TEST(ExpMechSample, ValidationAndCoarseGrid) {
  Interval dom(0.0, 4.0);
  SampleData s({1.0, 2.0, 3.0}, dom);
  PsiSpec sign = PsiSpec::sign_median();
  PriorSpec prior = PriorSpec::uniform(0.0, 4.0);
  EXPECT_THROW(exp_mech_sample(sign, s, PrivacyParams(1.0, 1e-3), prior, 1),
               ValidationError);
  EXPECT_THROW(
      exp_mech_sample(sign, s, PrivacyParams(1.0, 0.0), prior, 1, 63),
      ValidationError);

  // A point mass on the first grid node traps over half the mass in one cell.
  SampleData spike({0.0, 0.0}, dom);
  EXPECT_THROW(
      exp_mech_sample(sign, spike, PrivacyParams(30.0, 0.0), prior, 1, 64),
      GridTooCoarseError);
}

TEST(ExpMechSample, RecordFieldsAndDeterminism) {
  Interval dom(0.0, 4.0);
  SampleData s({1.0, 2.0, 3.0}, dom);
  PrivateEstimate est = exp_mech_sample(PsiSpec::sign_median(), s,
                                        PrivacyParams(1.0, 0.0),
                                        PriorSpec::uniform(0.0, 4.0), 55);
  EXPECT_EQ(est.mechanism, PrivateEstimate::Mechanism::exponential);
  EXPECT_TRUE(std::isnan(est.noise_scale));
  EXPECT_TRUE(std::isnan(est.noise_draw));
  EXPECT_DOUBLE_EQ(est.nonprivate_value, 2.0);
  EXPECT_EQ(est.seed, 55u);
  EXPECT_GE(est.value, 0.0);
  EXPECT_LE(est.value, 4.0);

  PrivateEstimate again = exp_mech_sample(PsiSpec::sign_median(), s,
                                          PrivacyParams(1.0, 0.0),
                                          PriorSpec::uniform(0.0, 4.0), 55);
  EXPECT_EQ(est.value, again.value);
}

TEST(GroupPrivacyFactor, Examples) {
  PrivacyParams base(0.1, 0.0);
  PrivacyParams same = group_privacy_factor(base, 1);
  EXPECT_DOUBLE_EQ(same.alpha(), 0.1);
  EXPECT_DOUBLE_EQ(same.delta(), 0.0);

  PrivacyParams ten = group_privacy_factor(base, 10);
  EXPECT_DOUBLE_EQ(ten.alpha(), 1.0);
  EXPECT_DOUBLE_EQ(ten.delta(), 0.0);

  PrivacyParams two = group_privacy_factor(PrivacyParams(0.1, 1e-6), 2);
  EXPECT_DOUBLE_EQ(two.alpha(), 0.2);
  expect_rel(two.delta(), 2.0 * std::exp(0.1) * 1e-6, 1e-15);

  // delta saturates at 1 rather than leaving [0, 1].
  EXPECT_DOUBLE_EQ(group_privacy_factor(PrivacyParams(1.0, 0.5), 5).delta(), 1.0);
  EXPECT_THROW(group_privacy_factor(base, 0), ValidationError);
}

TEST(MechanismStruct, FactoriesAndBindCaching) {
  Interval dom(0.0, 10.0);
  SampleData s({1.0, 2.0, 3.0, 4.0, 5.0}, dom);
  Functional med = Functional::median(dom);

  Mechanism lap = make_smooth_laplace(med, PrivacyParams(1.0, 1e-3));
  EXPECT_DOUBLE_EQ(lap.alpha, 1.0);
  EXPECT_DOUBLE_EQ(lap.plugin(s), 3.0);
  auto bound = lap.bind(s);
  EXPECT_EQ(bound(42), bound(42));
  EXPECT_EQ(lap.release(s, 42), bound(42));
  EXPECT_THROW(make_smooth_laplace(med, PrivacyParams(1.0, 0.0)),
               DeltaZeroError);

  Mechanism exp_mech = make_exp_mech(PsiSpec::sign_median(),
                                     PrivacyParams(1.0, 0.0),
                                     PriorSpec::uniform(0.0, 10.0));
  EXPECT_DOUBLE_EQ(exp_mech.plugin(s), 3.0);
  EXPECT_EQ(exp_mech.release(s, 9), exp_mech.release(s, 9));
  EXPECT_THROW(make_exp_mech(PsiSpec::sign_median(), PrivacyParams(1.0, 0.1),
                             PriorSpec::uniform(0.0, 10.0)),
               ValidationError);

  Mechanism plug = make_plugin(med);
  EXPECT_TRUE(std::isnan(plug.alpha));
  EXPECT_EQ(plug.release(s, 1), 3.0);
  EXPECT_EQ(plug.release(s, 2), 3.0);
}

}  // namespace
}  // namespace dpstat
