#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/format.hpp"
#include "dpstat/functionals.hpp"
#include "dpstat/mechanisms.hpp"
#include "dpstat/mestimation.hpp"
#include "dpstat/report.hpp"
#include "dpstat/rng.hpp"
#include "dpstat/sensitivity.hpp"

namespace dpstat {
namespace detail {

constexpr double knan = std::numeric_limits<double>::quiet_NaN();

struct MeanSe {
  double mean;
  double se;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {m, sd / std::sqrt(static_cast<double>(xs.size()))};
}

inline double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

inline double binom_se(double p, std::size_t trials) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

// Seed salts: keep the sample stream and the release stream of one trial
// disjoint, and trials of different cells disjoint.
enum Salt : std::uint64_t { draw_salt = 1, release_salt = 2 };

inline void echo(std::vector<std::pair<std::string, std::string>>& out,
                 const std::string& key, const std::string& value) {
  out.emplace_back(key, value);
}

inline void echo_mechanism(std::vector<std::pair<std::string, std::string>>& out,
                           const Mechanism& mech) {
  echo(out, "mechanism", mech.name);
  echo(out, "privacy.alpha", format_real(mech.alpha));
  echo(out, "privacy.delta", format_real(mech.delta));
}

inline void validate_trials(std::size_t trials, std::size_t least) {
  if (trials < least)
    throw ValidationError("trials",
                          "must be >= " + format_count(least) + " here");
}

}  // namespace detail

// Error curves of a mechanism and its plug-in counterpart over growing n.
// The bound column carries the factor-2 crossover trend check: the private
// error should come within twice the non-private error by the last n.
inline ExperimentReport convergence_curve(const Mechanism& mech,
                                          const Distribution& F, double target,
                                          const std::vector<std::size_t>& n_list,
                                          std::size_t trials,
                                          std::uint64_t root_seed) {
  detail::validate_trials(trials, 100);
  if (n_list.empty()) throw ValidationError("n_list", "must be nonempty");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw ValidationError("n_list", "must be strictly increasing");

  ExperimentReport report;
  report.experiment_id = "convergence";
  report.root_seed = root_seed;
  report.trials = trials;
  detail::echo_mechanism(report.config_echo, mech);
  detail::echo(report.config_echo, "model", F.describe());
  detail::echo(report.config_echo, "target", format_real(target));

  for (std::size_t n : n_list) {
    std::vector<double> priv, nonpriv;
    priv.reserve(trials);
    nonpriv.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng stream(Rng::mix(root_seed, {detail::draw_salt, n, t}));
      SampleData sample = draw_sample(F, n, stream);
      double released =
          mech.bind(sample)(Rng::mix(root_seed, {detail::release_salt, n, t}));
      priv.push_back(std::fabs(released - target));
      nonpriv.push_back(std::fabs(mech.plugin(sample) - target));
    }
    auto ms_priv = detail::mean_se(priv);
    auto ms_non = detail::mean_se(nonpriv);
    double bound = 2.0 * ms_non.mean;
    report.rows.push_back(ReportRow{
        "", static_cast<double>(n), ms_priv.mean, ms_non.mean, ms_priv.mean,
        ms_priv.se, bound, ms_priv.mean <= bound + 3.0 * ms_priv.se});
  }
  report.verdict = report.rows.back().bound_satisfied
                       ? ExperimentReport::Verdict::pass
                       : ExperimentReport::Verdict::inconclusive;
  report.notes =
      "factor-2 crossover is a trend check on the last row, not a theorem "
      "bound";
  return report;
}

// Two-point contamination lower bound: no private mechanism can beat
// (rho/16) GES_rho on both the center model and its worst contamination.
inline ExperimentReport contamination_lower_bound_check(
    const Functional& T, const Distribution& F, const Mechanism& mech,
    std::size_t n, double alpha, std::size_t trials, std::uint64_t root_seed) {
  detail::validate_trials(trials, 100);
  double rho = contamination_radius(n, alpha);
  double ges = ges_rho(T, F, rho);
  double xstar = ges_argmax(T, F, rho);
  Distribution G = Distribution::contaminated(F, xstar, rho);
  double bound = rho / 16.0 * ges;

  ExperimentReport report;
  report.experiment_id = "lower-bound-contamination";
  report.root_seed = root_seed;
  report.trials = trials;
  detail::echo_mechanism(report.config_echo, mech);
  detail::echo(report.config_echo, "functional", T.describe());
  detail::echo(report.config_echo, "model", F.describe());
  detail::echo(report.config_echo, "n", format_count(n));
  detail::echo(report.config_echo, "alpha", format_real(alpha));
  detail::echo(report.config_echo, "rho", format_real(rho));
  detail::echo(report.config_echo, "ges_rho", format_real(ges));
  detail::echo(report.config_echo, "x_star", format_real(xstar));

  const Distribution* models[2] = {&F, &G};
  const char* tags[2] = {"F", "G"};
  detail::MeanSe stats[2];
  detail::MeanSe plug_stats[2];
  for (std::size_t m = 0; m < 2; ++m) {
    double target = evaluate(T, *models[m]);
    std::vector<double> errs, plug_errs;
    errs.reserve(trials);
    plug_errs.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng stream(Rng::mix(root_seed, {m, detail::draw_salt, t}));
      SampleData sample = draw_sample(*models[m], n, stream);
      double released =
          mech.bind(sample)(Rng::mix(root_seed, {m, detail::release_salt, t}));
      errs.push_back(std::fabs(released - target));
      plug_errs.push_back(std::fabs(mech.plugin(sample) - target));
    }
    stats[m] = detail::mean_se(errs);
    plug_stats[m] = detail::mean_se(plug_errs);
    report.rows.push_back(ReportRow{
        tags[m], static_cast<double>(n), stats[m].mean, plug_stats[m].mean,
        stats[m].mean, stats[m].se, bound,
        stats[m].mean >= bound - 3.0 * stats[m].se});
  }
  bool either = report.rows[0].bound_satisfied || report.rows[1].bound_satisfied;
  report.verdict = either ? ExperimentReport::Verdict::pass
                          : ExperimentReport::Verdict::fail;
  double sum = stats[0].mean + stats[1].mean;
  double sum_threshold = rho / 8.0 * ges;
  bool sum_ok = sum >= sum_threshold - 3.0 * (stats[0].se + stats[1].se);
  report.notes =
      "either/or bound: max of the two errors vs (rho/16) GES_rho; "
      "sum-form variant (rho/8 vs error sum): sum = " + format_real(sum) +
      ", threshold = " + format_real(sum_threshold) +
      ", satisfied = " + format_bool(sum_ok);
  return report;
}

// Worst-case-over-family lower bound for a location family of width 2R:
// max_gamma E|A - gamma| >= (1/4) * 2R / (2 + e^{alpha n}).
inline ExperimentReport range_lower_bound_check(
    double R, const Mechanism& mech, std::size_t n, double alpha,
    const std::vector<double>& gamma_grid, std::size_t trials,
    std::uint64_t root_seed) {
  detail::validate_trials(trials, 100);
  if (!(R > 0.0)) throw ValidationError("range.R", "must be positive");
  if (gamma_grid.empty()) throw ValidationError("gamma_grid", "must be nonempty");
  if (!(mech.delta == 0.0))
    throw ValidationError("mechanism",
                          "range lower bound requires a pure alpha-DP mechanism");
  double threshold =
      0.25 * 2.0 * R / (2.0 + std::exp(alpha * static_cast<double>(n)));

  ExperimentReport report;
  report.experiment_id = "lower-bound-range";
  report.root_seed = root_seed;
  report.trials = trials;
  detail::echo_mechanism(report.config_echo, mech);
  detail::echo(report.config_echo, "family.R", format_real(R));
  detail::echo(report.config_echo, "n", format_count(n));
  detail::echo(report.config_echo, "alpha", format_real(alpha));

  Interval domain(-R - 1.0, R + 1.0);
  bool any = false;
  for (std::size_t gi = 0; gi < gamma_grid.size(); ++gi) {
    double gamma = gamma_grid[gi];
    if (std::fabs(gamma) > R)
      throw ValidationError("gamma_grid", "gamma outside [-R, R]");
    Distribution F = Distribution::uniform_shift(gamma, domain);
    std::vector<double> errs, plug_errs;
    errs.reserve(trials);
    plug_errs.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng stream(Rng::mix(root_seed, {gi, detail::draw_salt, t}));
      SampleData sample = draw_sample(F, n, stream);
      double released =
          mech.bind(sample)(Rng::mix(root_seed, {gi, detail::release_salt, t}));
      errs.push_back(std::fabs(released - gamma));
      plug_errs.push_back(std::fabs(mech.plugin(sample) - gamma));
    }
    auto ms = detail::mean_se(errs);
    auto plug_ms = detail::mean_se(plug_errs);
    bool ok = ms.mean >= threshold - 3.0 * ms.se;
    any = any || ok;
    report.rows.push_back(ReportRow{"gamma", gamma, ms.mean, plug_ms.mean,
                                    ms.mean, ms.se, threshold, ok});
  }
  report.verdict =
      any ? ExperimentReport::Verdict::pass : ExperimentReport::Verdict::fail;
  report.notes =
      "lower bound applies to the worst gamma; non-private column shown for "
      "the R-independent contrast";
  if (threshold < 1e-6)
    report.notes += "; threshold is numerically vacuous at this alpha * n";
  return report;
}

// Coverage of the high-probability error bound for the smoothed-noise
// release: |A_T(F_n) - T(F)| <= |T(F_n) - T(F)| + second term, expected with
// probability >= 1 - 2 eta.
inline ExperimentReport laplace_coverage_check(
    const Functional& T, const Distribution& F,
    const std::vector<std::size_t>& n_list, const PrivacyParams& params,
    double eta, std::size_t trials, std::uint64_t root_seed,
    std::optional<double> gamma_override = std::nullopt,
    bool zero_noise = false) {
  detail::validate_trials(trials, 100);
  if (!(eta > 0.0 && eta < 0.25))
    throw EtaOutOfRangeError("laplace_coverage_check: eta must lie in (0, 1/4)");
  if (n_list.empty()) throw ValidationError("n_list", "must be nonempty");

  ExperimentReport report;
  report.experiment_id = "coverage-laplace";
  report.root_seed = root_seed;
  report.trials = trials;
  detail::echo(report.config_echo, "mechanism", "smooth-laplace");
  detail::echo(report.config_echo, "privacy.alpha", format_real(params.alpha()));
  detail::echo(report.config_echo, "privacy.delta", format_real(params.delta()));
  detail::echo(report.config_echo, "functional", T.describe());
  detail::echo(report.config_echo, "model", F.describe());
  detail::echo(report.config_echo, "eta", format_real(eta));

  double target = evaluate(T, F);
  double p0 = 1.0 - 2.0 * eta;
  double slack = 3.0 * detail::binom_se(p0, trials);
  bool all = true;
  for (std::size_t n : n_list) {
    double gamma;
    std::string gamma_tag;
    if (gamma_override) {
      gamma = *gamma_override;
      gamma_tag = "override";
    } else {
      RobustnessProfile profile = gamma_n(T, F, n, eta);
      gamma = profile.gamma_n;
      gamma_tag = std::string(RobustnessProfile::method_name(profile.method)) +
                  ": " + profile.family;
    }
    double second = release_error_bound(0.0, T.range_length(), gamma, n,
                                        params, eta);
    std::size_t covered = 0;
    std::vector<double> priv_errs, nonpriv_errs;
    priv_errs.reserve(trials);
    nonpriv_errs.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng stream(Rng::mix(root_seed, {n, detail::draw_salt, t}));
      SampleData sample = draw_sample(F, n, stream);
      std::uint64_t seed = Rng::mix(root_seed, {n, detail::release_salt, t});
      double released =
          zero_noise
              ? smooth_sensitivity_release_with_noise(T, sample, params, 0.0, seed)
                    .value
              : smooth_sensitivity_release(T, sample, params, seed).value;
      double nonpriv = evaluate(T, sample);
      priv_errs.push_back(std::fabs(released - target));
      nonpriv_errs.push_back(std::fabs(nonpriv - target));
      if (priv_errs.back() <= nonpriv_errs.back() + second) ++covered;
    }
    double coverage = static_cast<double>(covered) / static_cast<double>(trials);
    bool ok = coverage >= p0 - slack;
    all = all && ok;
    report.rows.push_back(ReportRow{
        "", static_cast<double>(n), detail::mean_se(priv_errs).mean,
        detail::mean_se(nonpriv_errs).mean, coverage,
        detail::binom_se(coverage, trials), p0, ok});
    report.notes += (report.notes.empty() ? "" : "; ") +
                    ("gamma_n(" + format_count(n) + ") = " + format_real(gamma) +
                     " [" + gamma_tag + "], bound second term = " +
                     format_real(second));
  }
  report.verdict =
      all ? ExperimentReport::Verdict::pass : ExperimentReport::Verdict::fail;
  return report;
}

// Coverage of the exponential-mechanism accuracy guarantee at a given n:
// |A(F_n) - T_psi(F)| <= |T_psi(F_n) - T_psi(F)| + eps with probability
// >= 1 - 3 eta.
inline ExperimentReport exp_mech_coverage_check(
    const PsiSpec& psi, const Distribution& F, const PriorSpec& prior,
    double eps, double eta, double alpha, const MEstimationContext& ctx,
    std::size_t n, std::size_t trials, std::uint64_t root_seed,
    std::size_t grid_size = 16384) {
  detail::validate_trials(trials, 100);
  if (!(eta > 0.0 && eta < 1.0 / 3.0))
    throw EtaOutOfRangeError("exp_mech_coverage_check: eta must lie in (0, 1/3)");
  if (n == 0) throw ValidationError("n", "must be positive");
  PrivacyParams params(alpha, 0.0);
  double target = ctx.root;
  double tol = 1e-9 * (1.0 + F.domain().length());

  ExperimentReport report;
  report.experiment_id = "coverage-expmech";
  report.root_seed = root_seed;
  report.trials = trials;
  detail::echo(report.config_echo, "mechanism", "exponential");
  detail::echo(report.config_echo, "privacy.alpha", format_real(alpha));
  detail::echo(report.config_echo, "privacy.delta", "0");
  detail::echo(report.config_echo, "psi", psi.describe());
  detail::echo(report.config_echo, "prior", prior.describe());
  detail::echo(report.config_echo, "model", F.describe());
  detail::echo(report.config_echo, "eps", format_real(eps));
  detail::echo(report.config_echo, "eta", format_real(eta));
  detail::echo(report.config_echo, "n", format_count(n));
  detail::echo(report.config_echo, "grid_size", format_count(grid_size));

  std::size_t covered = 0;
  std::vector<double> priv_errs, nonpriv_errs;
  priv_errs.reserve(trials);
  nonpriv_errs.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng stream(Rng::mix(root_seed, {detail::draw_salt, t}));
    SampleData sample = draw_sample(F, n, stream);
    double released = exp_mech_sample(psi, sample, params, prior,
                                      Rng::mix(root_seed, {detail::release_salt, t}),
                                      grid_size)
                          .value;
    double nonpriv = solve_m_estimator(psi, sample, tol);
    priv_errs.push_back(std::fabs(released - target));
    nonpriv_errs.push_back(std::fabs(nonpriv - target));
    if (priv_errs.back() <= nonpriv_errs.back() + eps) ++covered;
  }
  double coverage = static_cast<double>(covered) / static_cast<double>(trials);
  double p0 = 1.0 - 3.0 * eta;
  bool ok = coverage >= p0 - 3.0 * detail::binom_se(p0, trials);
  report.rows.push_back(ReportRow{
      "", static_cast<double>(n), detail::mean_se(priv_errs).mean,
      detail::mean_se(nonpriv_errs).mean, coverage,
      detail::binom_se(coverage, trials), p0, ok});
  report.verdict =
      ok ? ExperimentReport::Verdict::pass : ExperimentReport::Verdict::fail;
  return report;
}

// Non-private rate sanity: the log-log slope of the plug-in's median error
// against n should sit near -1/2.
inline ExperimentReport rate_check(const Functional& T, const Distribution& F,
                                   const std::vector<std::size_t>& n_list,
                                   std::size_t trials, std::uint64_t root_seed,
                                   double expected_slope = -0.5,
                                   double tolerance = 0.15) {
  detail::validate_trials(trials, 100);
  if (n_list.size() < 2)
    throw ValidationError("n_list", "needs at least two sizes for a slope");

  ExperimentReport report;
  report.experiment_id = "rate";
  report.root_seed = root_seed;
  report.trials = trials;
  detail::echo(report.config_echo, "mechanism", "plugin");
  detail::echo(report.config_echo, "functional", T.describe());
  detail::echo(report.config_echo, "model", F.describe());

  double target = evaluate(T, F);
  std::vector<double> log_n, log_err;
  for (std::size_t n : n_list) {
    std::vector<double> errs;
    errs.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng stream(Rng::mix(root_seed, {detail::draw_salt, n, t}));
      SampleData sample = draw_sample(F, n, stream);
      errs.push_back(std::fabs(evaluate(T, sample) - target));
    }
    double med = detail::median_of(errs);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_err.push_back(std::log(med));
    report.rows.push_back(ReportRow{"", static_cast<double>(n), detail::knan,
                                    med, med, detail::knan, detail::knan,
                                    true});
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mx += log_n[i];
    my += log_err[i];
  }
  mx /= static_cast<double>(log_n.size());
  my /= static_cast<double>(log_n.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sxy += (log_n[i] - mx) * (log_err[i] - my);
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
  }
  double slope = sxy / sxx;
  bool ok = std::fabs(slope - expected_slope) <= tolerance;
  report.rows.push_back(ReportRow{"slope", detail::knan, detail::knan,
                                  detail::knan, slope, detail::knan,
                                  expected_slope, ok});
  report.verdict =
      ok ? ExperimentReport::Verdict::pass : ExperimentReport::Verdict::fail;
  report.notes = "median |T(F_n) - T(F)| per n; slope tolerance " +
                 format_real(tolerance);
  return report;
}

// Binned empirical audit of the privacy inequality
// Pr[A(D) in S] <= e^alpha Pr[A(D') in S] + delta over a partition S.
// A pass means no violation was detected; it is not a privacy proof.
inline ExperimentReport dp_audit(const Mechanism& mech, const SampleData& D,
                                 const SampleData& D_prime, std::size_t bins,
                                 std::size_t trials, const PrivacyParams& params,
                                 std::uint64_t root_seed) {
  if (bins < 8) throw ValidationError("bins", "must be >= 8");
  detail::validate_trials(trials, 100);
  std::size_t dist = D.hamming_distance(D_prime);
  if (dist > 1)
    throw NotNeighborsError("dp_audit: datasets differ in more than one entry");

  ExperimentReport report;
  report.experiment_id = "audit";
  report.root_seed = root_seed;
  report.trials = trials;
  detail::echo_mechanism(report.config_echo, mech);
  detail::echo(report.config_echo, "claimed.alpha", format_real(params.alpha()));
  detail::echo(report.config_echo, "claimed.delta", format_real(params.delta()));
  detail::echo(report.config_echo, "bins", format_count(bins));
  detail::echo(report.config_echo, "hamming_distance", format_count(dist));

  std::vector<double> outs[2];
  const SampleData* data[2] = {&D, &D_prime};
  for (std::size_t side = 0; side < 2; ++side) {
    auto release = mech.bind(*data[side]);
    outs[side].reserve(trials);
    for (std::size_t t = 0; t < trials; ++t)
      outs[side].push_back(release(Rng::mix(root_seed, {side, t})));
  }

  // Equal-probability bin edges under the pooled outputs, so no bin starves.
  std::vector<double> pooled = outs[0];
  pooled.insert(pooled.end(), outs[1].begin(), outs[1].end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> edges;
  for (std::size_t i = 1; i < bins; ++i)
    edges.push_back(pooled[i * pooled.size() / bins]);

  auto histogram = [&](const std::vector<double>& values) {
    std::vector<double> p(bins, 0.0);
    for (double v : values) {
      std::size_t b = static_cast<std::size_t>(
          std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
      p[b] += 1.0;
    }
    for (double& x : p) x /= static_cast<double>(values.size());
    return p;
  };
  std::vector<double> p0 = histogram(outs[0]);
  std::vector<double> p1 = histogram(outs[1]);

  double ealpha = std::exp(params.alpha());
  bool violated = false;
  const char* tags[2] = {"D->D'", "D'->D"};
  for (std::size_t dir = 0; dir < 2; ++dir) {
    const std::vector<double>& a = dir == 0 ? p0 : p1;
    const std::vector<double>& b = dir == 0 ? p1 : p0;
    for (std::size_t i = 0; i < bins; ++i) {
      double se = std::sqrt(a[i] * (1.0 - a[i]) / static_cast<double>(trials) +
                            ealpha * ealpha * b[i] * (1.0 - b[i]) /
                                static_cast<double>(trials));
      double limit = ealpha * b[i] + params.delta() + 3.0 * se;
      bool ok = a[i] <= limit;
      violated = violated || !ok;
      report.rows.push_back(ReportRow{tags[dir], static_cast<double>(i),
                                      detail::knan, detail::knan, a[i], se,
                                      limit, ok});
    }
  }
  report.verdict = violated ? ExperimentReport::Verdict::fail
                            : ExperimentReport::Verdict::pass;
  report.notes =
      "empirical smoke test over a finite partition; a pass is not a privacy "
      "proof";
  return report;
}

}  // namespace dpstat
