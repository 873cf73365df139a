#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dpstat/config.hpp"
#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/experiments.hpp"
#include "dpstat/format.hpp"
#include "dpstat/functionals.hpp"
#include "dpstat/mechanisms.hpp"
#include "dpstat/mestimation.hpp"
#include "dpstat/report.hpp"
#include "dpstat/rng.hpp"
#include "dpstat/sensitivity.hpp"

namespace dpstat {

// Everything a run produces, before any I/O happens.  `primary` is the
// artifact in the requested format; `summary_json` is the JSON sibling
// written next to CSV experiment artifacts.
struct RunOutcome {
  int exit_code = 0;
  std::string primary;
  std::string summary_json;
  std::string summary_line;
};

namespace detail {

// The resolved config leads; per-run derived entries (model descriptions,
// intermediate quantities) follow under keys the config does not own.
inline std::vector<std::pair<std::string, std::string>> merge_echo(
    const std::vector<std::pair<std::string, std::string>>& cfg_echo,
    const std::vector<std::pair<std::string, std::string>>& derived) {
  std::vector<std::pair<std::string, std::string>> out = cfg_echo;
  for (const auto& [k, v] : derived) {
    bool present = false;
    for (const auto& [ck, cv] : out) present = present || ck == k;
    if (!present) out.emplace_back(k, v);
  }
  return out;
}

template <typename Report>
void render(const RunConfig& cfg, const Report& report, RunOutcome& out,
            bool json_sibling) {
  std::string format = cfg.get("format");
  if (format == "csv") {
    out.primary = to_csv_string(report);
    if (json_sibling) out.summary_json = to_json(report).dump(2) + "\n";
  } else if (format == "json") {
    out.primary = to_json(report).dump(2) + "\n";
  } else {
    throw ValidationError("format", "must be csv or json, got '" + format + "'");
  }
}

inline void finish_experiment(const RunConfig& cfg, ExperimentReport report,
                              RunOutcome& out) {
  report.config_echo = merge_echo(cfg.echo(), report.config_echo);
  render(cfg, report, out, true);
  out.exit_code =
      report.verdict == ExperimentReport::Verdict::fail ? 2 : 0;
  out.summary_line = report.experiment_id + ": verdict=" +
                     ExperimentReport::verdict_name(report.verdict) + " (" +
                     format_count(report.rows.size()) + " rows, trials=" +
                     format_count(report.trials) + ", seed=" +
                     format_count(report.root_seed) + ")";
}

inline Mechanism build_mechanism(const RunConfig& cfg, const Distribution& F) {
  std::string m = cfg.get("mechanism");
  if (m == "smooth-laplace") {
    if (cfg.real("privacy.delta") == 0.0)
      throw ValidationError("privacy.delta",
                            "beta(alpha, delta) undefined at delta = 0");
    return make_smooth_laplace(cfg.functional(F), cfg.privacy());
  }
  if (m == "exponential")
    return make_exp_mech(cfg.psi(), cfg.privacy(), cfg.prior(),
                         cfg.count("grid_size"));
  if (m == "plugin") return make_plugin(cfg.functional(F));
  throw ValidationError("mechanism", "unknown mechanism: " + m);
}

inline SampleData draw_command_sample(const RunConfig& cfg,
                                      const Distribution& F,
                                      std::uint64_t root_seed) {
  std::size_t n = cfg.count("n");
  if (n == 0) throw ValidationError("n", "must be positive");
  Rng stream(Rng::mix(root_seed, {draw_salt}));
  return draw_sample(F, n, stream);
}

inline RunOutcome cmd_estimate(const RunConfig& cfg) {
  Distribution F = cfg.distribution();
  std::uint64_t root_seed = cfg.count("seed");
  SampleData sample = draw_command_sample(cfg, F, root_seed);
  std::uint64_t release_seed = Rng::mix(root_seed, {release_salt});
  std::string m = cfg.get("mechanism");

  RecordReport rec;
  if (m == "plugin") {
    double v = evaluate(cfg.functional(F), sample);
    rec.id = "estimate";
    rec.fields = {{"value", format_real(v)},
                  {"nonprivate_value", format_real(v)},
                  {"noise_scale", ""},
                  {"noise_draw", ""},
                  {"mechanism", "plugin"},
                  {"alpha", ""},
                  {"delta", ""},
                  {"seed", format_count(root_seed)}};
  } else if (m == "smooth-laplace") {
    if (cfg.real("privacy.delta") == 0.0)
      throw ValidationError("privacy.delta",
                            "beta(alpha, delta) undefined at delta = 0");
    rec = estimate_record(smooth_sensitivity_release(
        cfg.functional(F), sample, cfg.privacy(), release_seed));
  } else if (m == "exponential") {
    rec = estimate_record(exp_mech_sample(cfg.psi(), sample, cfg.privacy(),
                                          cfg.prior(), release_seed,
                                          cfg.count("grid_size")));
  } else {
    throw ValidationError("mechanism", "unknown mechanism: " + m);
  }
  rec.config_echo = cfg.echo();

  RunOutcome out;
  render(cfg, rec, out, false);
  out.summary_line =
      "estimate: value = " + rec.fields[0].second + " (" + m + ")";
  return out;
}

inline RunOutcome cmd_sensitivity(const RunConfig& cfg) {
  Distribution F = cfg.distribution();
  Functional T = cfg.functional(F);
  std::uint64_t root_seed = cfg.count("seed");
  SampleData sample = draw_command_sample(cfg, F, root_seed);
  double beta =
      cfg.has("beta") ? cfg.real("beta") : cfg.privacy().beta();
  SensitivityResult ss = smooth_sensitivity(T, sample, beta);

  RecordReport rec;
  rec.id = "sensitivity";
  rec.config_echo = cfg.echo();
  rec.fields = {
      {"n", format_count(sample.size())},
      {"beta", format_real(beta)},
      {"local", format_real(ss.local)},
      {"smooth", format_real(ss.smooth)},
      {"method", SensitivityResult::method_name(ss.method)},
      {"k_star", ss.method == SensitivityResult::Method::exact
                     ? format_count(ss.k_star)
                     : std::string()},
      {"capped_at_range", format_bool(ss.capped_at_range)},
      {"range_length", format_real(T.range_length())},
      {"value", format_real(evaluate(T, sample))},
  };
  if (cfg.has("privacy.alpha"))
    rec.fields.emplace_back(
        "noise_scale",
        format_real(ss.smooth * 2.0 / cfg.real("privacy.alpha")));

  RunOutcome out;
  render(cfg, rec, out, false);
  out.summary_line = "sensitivity: smooth = " + format_real(ss.smooth) + " (" +
                     SensitivityResult::method_name(ss.method) + ")";
  return out;
}

inline RunOutcome cmd_bounds(const RunConfig& cfg) {
  std::size_t n = cfg.count("n");
  double eta = cfg.real("eta");
  Distribution F = cfg.distribution();

  RecordReport rec;
  rec.id = "bounds";
  rec.config_echo = cfg.echo();
  rec.fields.emplace_back("n", format_count(n));
  rec.fields.emplace_back("eta", format_real(eta));

  if (cfg.has("functional.kind")) {
    Functional T = cfg.functional(F);
    PrivacyParams params = cfg.privacy();
    RobustnessProfile profile = gamma_n(T, F, n, eta);
    rec.fields.emplace_back("gamma_n", format_real(profile.gamma_n));
    rec.fields.emplace_back(
        "gamma_n_method",
        std::string(RobustnessProfile::method_name(profile.method)) + ": " +
            profile.family);
    rec.fields.emplace_back(
        "smooth_sensitivity_bound",
        format_real(smooth_sensitivity_bound(T.range_length(), profile.gamma_n,
                                             n, params.beta(), eta)));
    rec.fields.emplace_back(
        "release_error_bound_second_term",
        format_real(release_error_bound(0.0, T.range_length(), profile.gamma_n,
                                        n, params, eta)));
  }

  if (cfg.has("psi.kind")) {
    PsiSpec psi = cfg.psi();
    MEstimationContext ctx = analyze_m_estimator(psi, F);
    rec.fields.emplace_back("root", format_real(ctx.root));
    rec.fields.emplace_back("psi_prime_at_root",
                            format_real(ctx.psi_prime_at_root));
    rec.fields.emplace_back("ges_bound", format_real(ctx.ges_bound));
    if (cfg.has("smoothness.r1")) {
      ctx = with_smoothness(ctx, cfg.smoothness());
      rec.fields.emplace_back("eps1", format_real(ctx.eps1));
      rec.fields.emplace_back("eps2", format_real(ctx.eps2));
      if (cfg.has("eps") && cfg.has("prior.kind")) {
        PriorSpec prior = cfg.prior();
        double eps = cfg.real("eps");
        double alpha = cfg.real("privacy.alpha");
        Rng rng(Rng::mix(cfg.count("seed"), {draw_salt}));
        SampleSizeResult mc = estimate_sample_size(
            psi, F, ctx.eps2, eta, cfg.count("trials"), rng);
        rec.fields.emplace_back("n_eps2_eta", format_count(mc.n));
        double prior_term =
            prior.is_uniform()
                ? uniform_prior_sample_term(prior.range_length(), eps, eta,
                                            alpha, ctx.ges_bound)
                : cauchy_prior_sample_term(std::fabs(ctx.root), ctx.eps2, eps,
                                           eta, alpha, ctx.ges_bound);
        rec.fields.emplace_back("prior_sample_term", format_real(prior_term));
        rec.fields.emplace_back(
            "exp_mech_sample_size",
            format_count(exp_mech_sample_size(ctx, prior, eps, eta, alpha,
                                              mc.n)));
      }
    }
  }

  if (cfg.has("privacy.alpha")) {
    double alpha = cfg.real("privacy.alpha");
    if (alpha > 0.0 && alpha < std::log(2.0) / 2.0)
      rec.fields.emplace_back("contamination_radius",
                              format_real(contamination_radius(n, alpha)));
  }

  RunOutcome out;
  render(cfg, rec, out, false);
  out.summary_line =
      "bounds: " + format_count(rec.fields.size()) + " fields computed";
  return out;
}

inline RunOutcome cmd_audit(const RunConfig& cfg) {
  Distribution F = cfg.distribution();
  std::uint64_t root_seed = cfg.count("seed");
  SampleData D = draw_command_sample(cfg, F, root_seed);
  std::size_t index = cfg.count("audit.replace_index");
  if (index >= D.size())
    throw ValidationError("audit.replace_index", "outside the sample");
  SampleData D_prime = D.with_replaced(index, cfg.real("audit.replace_value"));
  Mechanism mech = build_mechanism(cfg, F);
  ExperimentReport report =
      dp_audit(mech, D, D_prime, cfg.count("bins"), cfg.count("trials"),
               cfg.privacy(), root_seed);

  RunOutcome out;
  finish_experiment(cfg, std::move(report), out);
  return out;
}

inline RunOutcome cmd_experiment(const RunConfig& cfg) {
  const std::string& name = cfg.experiment;
  std::uint64_t root_seed = cfg.count("seed");
  std::size_t trials = cfg.count("trials");
  ExperimentReport report;

  if (name == "convergence") {
    Distribution F = cfg.distribution();
    Mechanism mech = build_mechanism(cfg, F);
    double target =
        cfg.get("mechanism") == "exponential"
            ? solve_m_estimator(cfg.psi(), F, 1e-9 * (1.0 + F.domain().length()))
            : evaluate(cfg.functional(F), F);
    report = convergence_curve(mech, F, target, cfg.counts("n_list"), trials,
                               root_seed);
  } else if (name == "lower-bound-contamination") {
    Distribution F = cfg.distribution();
    Mechanism mech = build_mechanism(cfg, F);
    report = contamination_lower_bound_check(
        cfg.functional(F), F, mech, cfg.count("n"), cfg.real("privacy.alpha"),
        trials, root_seed);
  } else if (name == "lower-bound-range") {
    double R = cfg.real("family.R");
    Distribution domain_model =
        Distribution::uniform_shift(0.0, Interval(-R - 1.0, R + 1.0));
    Mechanism mech = build_mechanism(cfg, domain_model);
    report = range_lower_bound_check(R, mech, cfg.count("n"),
                                     cfg.real("privacy.alpha"),
                                     cfg.reals("gamma_grid"), trials, root_seed);
  } else if (name == "coverage-laplace") {
    Distribution F = cfg.distribution();
    report = laplace_coverage_check(cfg.functional(F), F, cfg.counts("n_list"),
                                    cfg.privacy(), cfg.real("eta"), trials,
                                    root_seed);
  } else if (name == "coverage-expmech") {
    Distribution F = cfg.distribution();
    if (cfg.real("privacy.delta") != 0.0)
      throw ValidationError("privacy.delta",
                            "exponential mechanism requires delta = 0");
    PsiSpec psi = cfg.psi();
    MEstimationContext ctx = analyze_m_estimator(psi, F);
    report = exp_mech_coverage_check(psi, F, cfg.prior(), cfg.real("eps"),
                                     cfg.real("eta"), cfg.real("privacy.alpha"),
                                     ctx, cfg.count("n"), trials, root_seed,
                                     cfg.count("grid_size"));
  } else if (name == "rate") {
    Distribution F = cfg.distribution();
    report = rate_check(cfg.functional(F), F, cfg.counts("n_list"), trials,
                        root_seed, cfg.real("rate.slope"),
                        cfg.real("rate.tolerance"));
  } else {
    throw ValidationError("experiment", "unknown experiment: " + name);
  }

  RunOutcome out;
  finish_experiment(cfg, std::move(report), out);
  return out;
}

}  // namespace detail

// Pure dispatch: config in, artifact text and exit code out.  Deterministic
// for a fixed config (all randomness derives from the seed key).
inline RunOutcome run_config(const RunConfig& cfg) {
  if (cfg.count("threads") == 0)
    throw ValidationError("threads", "must be >= 1");
  if (cfg.command == "estimate") return detail::cmd_estimate(cfg);
  if (cfg.command == "sensitivity") return detail::cmd_sensitivity(cfg);
  if (cfg.command == "bounds") return detail::cmd_bounds(cfg);
  if (cfg.command == "audit") return detail::cmd_audit(cfg);
  if (cfg.command == "experiment") return detail::cmd_experiment(cfg);
  throw ValidationError("command", "unknown command: " + cfg.command);
}

// CLI shell around run_config: writes the artifact (file or stdout), puts a
// one-line summary on err, and maps any library error to exit 1 with a
// machine-readable record on err.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    RunOutcome result = run_config(cfg);
    if (cfg.has("out")) {
      const std::string& path = cfg.get("out");
      write_file_atomic(path, result.primary);
      if (!result.summary_json.empty())
        write_file_atomic(path + ".summary.json", result.summary_json);
    } else {
      out << result.primary;
    }
    err << result.summary_line << "\n";
    return result.exit_code;
  } catch (const Error& e) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["error"] = e.what();
    j["command"] = cfg.experiment.empty()
                       ? cfg.command
                       : cfg.command + " " + cfg.experiment;
    err << j.dump() << "\n";
    return 1;
  }
}

}  // namespace dpstat
