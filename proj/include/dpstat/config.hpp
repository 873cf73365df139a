#pragma once

#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/functionals.hpp"
#include "dpstat/interval.hpp"
#include "dpstat/mestimation.hpp"
#include "dpstat/sensitivity.hpp"

namespace dpstat {

struct ConfigKey {
  const char* key;
  const char* default_value;  // nullptr when there is no default
  const char* help;
};

// Every accepted config key with its default; the single source of truth for
// strict parsing and for --help.
inline const std::vector<ConfigKey>& config_key_table() {
  static const std::vector<ConfigKey> table = {
      {"distribution.kind", nullptr,
       "uniform-shift | bounded-discrete | point-mass | contaminated"},
      {"distribution.gamma", nullptr, "center of the uniform-shift model"},
      {"distribution.points", nullptr, "comma-separated atom locations"},
      {"distribution.weights", nullptr,
       "comma-separated atom weights, summing to 1"},
      {"distribution.x", nullptr,
       "atom location (point-mass) or contamination point"},
      {"distribution.rho", nullptr, "contamination fraction in [0, 1]"},
      {"distribution.base.kind", nullptr,
       "base model of a contaminated mixture"},
      {"distribution.base.gamma", nullptr, "base uniform-shift center"},
      {"distribution.base.points", nullptr, "base atom locations"},
      {"distribution.base.weights", nullptr, "base atom weights"},
      {"distribution.base.x", nullptr, "base point-mass location"},
      {"distribution.domain.lo", nullptr, "domain lower endpoint override"},
      {"distribution.domain.hi", nullptr, "domain upper endpoint override"},
      {"functional.kind", nullptr,
       "mean | median | quantile | trimmed-mean | linear"},
      {"functional.p", nullptr, "quantile level in (0, 1)"},
      {"functional.trim", nullptr, "trimming fraction in [0, 0.5)"},
      {"functional.knots", nullptr, "piecewise-linear g as x:y,x:y,..."},
      {"functional.range.lo", nullptr,
       "declared range lower endpoint (default: derived from the domain)"},
      {"functional.range.hi", nullptr, "declared range upper endpoint"},
      {"psi.kind", nullptr, "sign-median | clipped-shift"},
      {"psi.clip", nullptr, "clipping half-width of clipped-shift"},
      {"psi.scale", "1", "multiplier applied to psi and K together"},
      {"prior.kind", nullptr, "uniform | cauchy"},
      {"prior.lo", nullptr, "uniform prior lower endpoint"},
      {"prior.hi", nullptr, "uniform prior upper endpoint"},
      {"privacy.alpha", nullptr, "privacy parameter alpha > 0"},
      {"privacy.delta", nullptr, "privacy parameter delta in [0, 1]"},
      {"mechanism", nullptr, "smooth-laplace | exponential | plugin"},
      {"n", nullptr, "sample size"},
      {"n_list", nullptr, "comma-separated sample sizes"},
      {"trials", "1000", "Monte Carlo trials per cell"},
      {"eta", nullptr, "tail probability"},
      {"eps", nullptr, "accuracy target"},
      {"grid_size", "1024", "density grid size for the exponential mechanism"},
      {"bins", "16", "audit partition size"},
      {"gamma_grid", nullptr, "comma-separated family centers"},
      {"family.R", nullptr, "half-width of the location family"},
      {"threads", "1",
       "worker count; results are independent of the thread count"},
      {"seed", "0", "root seed"},
      {"beta", nullptr,
       "smoothing rate override for the sensitivity command (default: "
       "beta(alpha, delta))"},
      {"smoothness.r1", nullptr, "smoothness radius r1"},
      {"smoothness.r2", nullptr, "smoothness radius r2"},
      {"smoothness.lambda1", nullptr, "smoothness constant Lambda1"},
      {"smoothness.lambda2", nullptr, "smoothness constant Lambda2"},
      {"rate.slope", "-0.5", "expected log-log error slope"},
      {"rate.tolerance", "0.15", "slope tolerance"},
      {"audit.replace_index", "0", "origin index replaced to form D'"},
      {"audit.replace_value", nullptr, "replacement value defining D'"},
      {"out", nullptr, "output path (default: stdout)"},
      {"format", "csv", "csv | json"},
  };
  return table;
}

inline std::string config_keys_help() {
  std::string out = "Config keys (key = value per line, '#' comments):\n";
  for (const ConfigKey& k : config_key_table()) {
    out += "  " + std::string(k.key);
    if (k.default_value)
      out += " (default: " + std::string(k.default_value) + ")";
    out += "\n      " + std::string(k.help) + "\n";
  }
  return out;
}

class RunConfig {
 public:
  std::string command;
  std::string experiment;  // set for `experiment <name>`

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError(key, "missing required key");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double real(const std::string& key) const { return parse_real(key, get(key)); }

  std::uint64_t count(const std::string& key) const {
    return parse_count(key, get(key));
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& piece : split_commas(get(key)))
      out.push_back(parse_real(key, piece));
    if (out.empty()) throw ValidationError(key, "empty list");
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const std::string& piece : split_commas(get(key)))
      out.push_back(parse_count(key, piece));
    if (out.empty()) throw ValidationError(key, "empty list");
    return out;
  }

  void set(const std::string& key, const std::string& value, bool defaulted) {
    values_[key] = value;
    if (defaulted)
      defaulted_.insert(key);
    else
      defaulted_.erase(key);
  }

  // Resolved configuration, privacy-relevant keys first, defaults noted in a
  // trailing synthetic entry.
  std::vector<std::pair<std::string, std::string>> echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    const char* first[] = {"mechanism", "privacy.alpha", "privacy.delta"};
    for (const char* k : first)
      if (has(k)) out.emplace_back(k, values_.at(k));
    out.emplace_back("command",
                     experiment.empty() ? command : command + " " + experiment);
    for (const auto& [k, v] : values_) {
      bool skip = false;
      for (const char* f : first) skip = skip || k == f;
      if (!skip) out.emplace_back(k, v);
    }
    std::string defaults;
    for (const std::string& k : defaulted_)
      defaults += (defaults.empty() ? "" : " ") + k;
    out.emplace_back("defaulted_keys", defaults.empty() ? "none" : defaults);
    return out;
  }

  Distribution distribution() const {
    return build_distribution("distribution");
  }

  // The declared range defaults to the data domain (for linear functionals,
  // to the range of g over the domain).
  Functional functional(const Distribution& F) const {
    std::string kind = get("functional.kind");
    Interval domain = F.domain();
    auto range_of = [&](const Interval& natural) {
      if (has("functional.range.lo") || has("functional.range.hi"))
        return Interval(real("functional.range.lo"), real("functional.range.hi"));
      return natural;
    };
    if (kind == "mean") return Functional::mean(range_of(domain));
    if (kind == "median") return Functional::median(range_of(domain));
    if (kind == "quantile")
      return Functional::quantile(real("functional.p"), range_of(domain));
    if (kind == "trimmed-mean")
      return Functional::trimmed_mean(real("functional.trim"), range_of(domain));
    if (kind == "linear") {
      PiecewiseLinear g = parse_knots(get("functional.knots"));
      Interval natural(g.inf_on(domain), g.sup_on(domain));
      return Functional::linear(std::move(g), range_of(natural));
    }
    throw ValidationError("functional.kind", "unknown functional: " + kind);
  }

  PsiSpec psi() const {
    std::string kind = get("psi.kind");
    PsiSpec base = [&] {
      if (kind == "sign-median") return PsiSpec::sign_median();
      if (kind == "clipped-shift") return PsiSpec::clipped_shift(real("psi.clip"));
      throw ValidationError("psi.kind", "unknown psi: " + kind);
    }();
    double scale = real("psi.scale");
    return scale == 1.0 ? base : base.scaled(scale);
  }

  PriorSpec prior() const {
    std::string kind = get("prior.kind");
    if (kind == "uniform")
      return PriorSpec::uniform(real("prior.lo"), real("prior.hi"));
    if (kind == "cauchy") return PriorSpec::cauchy();
    throw ValidationError("prior.kind", "unknown prior: " + kind);
  }

  PrivacyParams privacy() const {
    return PrivacyParams(real("privacy.alpha"), real("privacy.delta"));
  }

  SmoothnessSpec smoothness() const {
    return SmoothnessSpec(real("smoothness.r1"), real("smoothness.r2"),
                          real("smoothness.lambda1"), real("smoothness.lambda2"));
  }

 private:
  static double parse_real(const std::string& key, const std::string& text) {
    const char* s = text.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
      throw ValidationError(key, "not a number: '" + text + "'");
    return v;
  }

  static std::uint64_t parse_count(const std::string& key,
                                   const std::string& text) {
    const char* s = text.c_str();
    if (!text.empty() && text[0] == '-')
      throw ValidationError(key, "must be nonnegative: '" + text + "'");
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0')
      throw ValidationError(key, "not a count: '" + text + "'");
    return static_cast<std::uint64_t>(v);
  }

  static std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
      if (c == ',') {
        out.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(trim(cur));
    return out;
  }

  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static PiecewiseLinear parse_knots(const std::string& text) {
    std::vector<std::pair<double, double>> knots;
    for (const std::string& piece : split_commas(text)) {
      std::size_t colon = piece.find(':');
      if (colon == std::string::npos)
        throw ValidationError("functional.knots", "expected x:y, got '" + piece + "'");
      knots.emplace_back(parse_real("functional.knots", trim(piece.substr(0, colon))),
                         parse_real("functional.knots", trim(piece.substr(colon + 1))));
    }
    return PiecewiseLinear(std::move(knots));
  }

  std::optional<Interval> domain_override(const std::string& prefix) const {
    bool lo = has(prefix + ".domain.lo"), hi = has(prefix + ".domain.hi");
    if (lo != hi)
      throw ValidationError(prefix + ".domain.lo",
                            "domain override needs both endpoints");
    if (!lo) return std::nullopt;
    return Interval(real(prefix + ".domain.lo"), real(prefix + ".domain.hi"));
  }

  Distribution build_distribution(const std::string& prefix) const {
    std::string kind = get(prefix + ".kind");
    auto domain = domain_override("distribution");  // override applies at top level
    bool top = prefix == "distribution";
    if (kind == "uniform-shift") {
      double gamma = real(prefix + ".gamma");
      if (top && domain) return Distribution::uniform_shift(gamma, *domain);
      return Distribution::uniform_shift(gamma);
    }
    if (kind == "bounded-discrete") {
      auto points = reals(prefix + ".points");
      auto weights = reals(prefix + ".weights");
      if (top && domain)
        return Distribution::bounded_discrete(points, weights, *domain);
      return Distribution::bounded_discrete(points, weights);
    }
    if (kind == "point-mass") {
      double x = real(prefix + ".x");
      if (top && domain) return Distribution::point_mass(x, *domain);
      return Distribution::point_mass(x);
    }
    if (kind == "contaminated") {
      if (!top)
        throw ValidationError(prefix + ".kind",
                              "contaminated base must be a simple model");
      Distribution base = build_distribution("distribution.base");
      return Distribution::contaminated(std::move(base), real("distribution.x"),
                                        real("distribution.rho"));
    }
    throw ValidationError(prefix + ".kind", "unknown distribution: " + kind);
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> defaulted_;
};

// Strict parser: key = value lines, '#' comments, unknown keys rejected,
// defaults filled and recorded.
inline RunConfig parse_config(const std::string& text,
                              const std::string& command) {
  static const std::set<std::string> known = [] {
    std::set<std::string> s;
    for (const ConfigKey& k : config_key_table()) s.insert(k.key);
    return s;
  }();

  RunConfig cfg;
  cfg.command = command;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](const std::string& s) {
      std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (!known.count(key)) throw ValidationError(key, "unknown key");
    if (seen.count(key)) throw ParseError(lineno, "duplicate key: " + key);
    seen.insert(key);
    cfg.set(key, value, false);
  }
  for (const ConfigKey& k : config_key_table())
    if (k.default_value && !cfg.has(k.key)) cfg.set(k.key, k.default_value, true);
  return cfg;
}

}  // namespace dpstat
