#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/format.hpp"
#include "dpstat/interval.hpp"

namespace dpstat {

// Bounded piecewise-linear function given by knots; constant beyond the
// first/last knot.  This is the tabulated form accepted for linear
// functionals T_g(F) = integral of g dF.
class PiecewiseLinear {
 public:
  explicit PiecewiseLinear(std::vector<std::pair<double, double>> knots) {
    if (knots.empty())
      throw ValidationError("linear.g_knots", "must be nonempty");
    std::sort(knots.begin(), knots.end());
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (knots[i].first == knots[i - 1].first)
        throw ValidationError("linear.g_knots", "duplicate knot x");
    for (const auto& [x, y] : knots) {
      xs_.push_back(x);
      ys_.push_back(y);
    }
  }

  static PiecewiseLinear identity(const Interval& domain) {
    return PiecewiseLinear({{domain.lo, domain.lo}, {domain.hi, domain.hi}});
  }

  static PiecewiseLinear constant(double y) {
    return PiecewiseLinear({{0.0, y}});
  }

  double operator()(double x) const {
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return ys_[i - 1] + w * (ys_[i] - ys_[i - 1]);
  }

  // Exact integral of g over [a, b] (trapezoids between knots, constants
  // outside the knot range).
  double integral(double a, double b) const {
    if (a > b) return -integral(b, a);
    double total = 0.0;
    std::vector<double> cuts{a, b};
    for (double x : xs_)
      if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double lo = cuts[i], hi = cuts[i + 1];
      total += 0.5 * ((*this)(lo) + (*this)(hi)) * (hi - lo);
    }
    return total;
  }

  double sup_on(const Interval& where) const { return extremum_on(where, true); }
  double inf_on(const Interval& where) const { return extremum_on(where, false); }

  const std::vector<double>& knot_xs() const { return xs_; }

  std::string describe() const {
    std::string s = "piecewise_linear[";
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (i) s += " ";
      s += format_real(xs_[i]) + ":" + format_real(ys_[i]);
    }
    return s + "]";
  }

  friend bool operator==(const PiecewiseLinear& a, const PiecewiseLinear& b) {
    return a.xs_ == b.xs_ && a.ys_ == b.ys_;
  }

 private:
  double extremum_on(const Interval& where, bool maximize) const {
    double best = (*this)(where.lo);
    auto consider = [&](double y) {
      best = maximize ? std::max(best, y) : std::min(best, y);
    };
    consider((*this)(where.hi));
    for (std::size_t i = 0; i < xs_.size(); ++i)
      if (where.contains(xs_[i])) consider(ys_[i]);
    return best;
  }

  std::vector<double> xs_;
  std::vector<double> ys_;
};

// Statistical functional T with a declared range [lambda, lambda'] that
// contains every value T can take on in-domain data.
class Functional {
 public:
  enum class Kind { mean, median, quantile, trimmed_mean, linear };

  static Functional mean(Interval range_hint) {
    return Functional(Kind::mean, range_hint);
  }

  static Functional median(Interval range_hint) {
    Functional f(Kind::quantile, range_hint);
    f.kind_ = Kind::median;
    f.p_ = 0.5;
    return f;
  }

  static Functional quantile(double p, Interval range_hint) {
    if (!(p > 0.0 && p < 1.0))
      throw ValidationError("functional.p", "must lie in (0, 1)");
    Functional f(Kind::quantile, range_hint);
    f.p_ = p;
    return f;
  }

  static Functional trimmed_mean(double trim, Interval range_hint) {
    if (!(trim >= 0.0 && trim < 0.5))
      throw ValidationError("functional.trim", "must lie in [0, 0.5)");
    Functional f(Kind::trimmed_mean, range_hint);
    f.trim_ = trim;
    return f;
  }

  static Functional linear(PiecewiseLinear g, Interval range_hint) {
    Functional f(Kind::linear, range_hint);
    f.g_ = std::move(g);
    return f;
  }

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  double trim() const { return trim_; }
  const PiecewiseLinear& g() const {
    if (!g_) throw Error("functional has no g");
    return *g_;
  }
  const Interval& range_hint() const { return range_hint_; }
  double range_length() const { return range_hint_.length(); }

  bool is_order_statistic() const {
    return kind_ == Kind::median || kind_ == Kind::quantile;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::mean: return "mean";
      case Kind::median: return "median";
      case Kind::quantile: return "quantile(p=" + format_real(p_) + ")";
      case Kind::trimmed_mean: return "trimmed_mean(trim=" + format_real(trim_) + ")";
      case Kind::linear: return "linear(g=" + g_->describe() + ")";
    }
    return "?";
  }

 private:
  Functional(Kind kind, Interval range_hint) : kind_(kind), range_hint_(range_hint) {}

  Kind kind_;
  Interval range_hint_;
  double p_ = 0.5;
  double trim_ = 0.0;
  std::optional<PiecewiseLinear> g_;
};

namespace detail {

// 1-based plug-in index of the p-quantile order statistic.  The small slack
// absorbs floating error in n * p without moving genuinely fractional values;
// ceil(n p) with the lower-median convention at p = 1/2.
inline std::size_t order_stat_index(std::size_t n, double p) {
  double np = static_cast<double>(n) * p;
  auto idx = static_cast<long long>(std::ceil(np - 1e-9));
  if (idx < 1) idx = 1;
  if (idx > static_cast<long long>(n)) idx = static_cast<long long>(n);
  return static_cast<std::size_t>(idx);
}

inline std::size_t trim_count(std::size_t n, double trim) {
  return static_cast<std::size_t>(std::floor(trim * static_cast<double>(n) + 1e-9));
}

}  // namespace detail

// Evaluates T on already-sorted values (the cheap path the oracles use).
inline double evaluate_sorted(const Functional& T, std::span<const double> sorted,
                              const Interval& /*domain*/) {
  std::size_t n = sorted.size();
  if (n == 0) throw ValidationError("sample", "must be nonempty");
  switch (T.kind()) {
    case Functional::Kind::mean: {
      double s = 0.0;
      for (double v : sorted) s += v;
      return s / static_cast<double>(n);
    }
    case Functional::Kind::median:
    case Functional::Kind::quantile:
      return sorted[detail::order_stat_index(n, T.p()) - 1];
    case Functional::Kind::trimmed_mean: {
      std::size_t k = detail::trim_count(n, T.trim());
      double s = 0.0;
      for (std::size_t i = k; i < n - k; ++i) s += sorted[i];
      return s / static_cast<double>(n - 2 * k);
    }
    case Functional::Kind::linear: {
      double s = 0.0;
      for (double v : sorted) s += T.g()(v);
      return s / static_cast<double>(n);
    }
  }
  throw Error("unreachable");
}

inline double evaluate(const Functional& T, const SampleData& sample) {
  return evaluate_sorted(T, sample.sorted(), sample.domain());
}

namespace detail {

inline double expect_g(const PiecewiseLinear& g, const Distribution& F) {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Distribution::UniformShift>) {
          return g.integral(n.gamma - 1.0, n.gamma + 1.0) / 2.0;
        } else if constexpr (std::is_same_v<T, Distribution::BoundedDiscrete>) {
          double s = 0.0;
          for (std::size_t i = 0; i < n.points.size(); ++i)
            s += n.weights[i] * g(n.points[i]);
          return s;
        } else if constexpr (std::is_same_v<T, Distribution::PointMass>) {
          return g(n.x);
        } else {
          return (1.0 - n.rho) * expect_g(g, *n.base) + n.rho * g(n.x);
        }
      },
      F.node());
}

// Exact integral of the quantile function over [p_lo, p_hi].  Q is affine (or
// constant) between CDF levels taken at the distribution's breakpoints, so
// the midpoint rule on those cells is exact.
inline double quantile_integral(const Distribution& F, double p_lo, double p_hi) {
  std::vector<double> levels{p_lo, p_hi};
  for (double t : F.breakpoints()) {
    for (double p : {F.cdf_left(t), F.cdf(t)})
      if (p > p_lo && p < p_hi) levels.push_back(p);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    double width = levels[i + 1] - levels[i];
    if (width <= 0.0) continue;
    total += width * F.quantile(0.5 * (levels[i] + levels[i + 1]));
  }
  return total;
}

}  // namespace detail

inline double evaluate(const Functional& T, const Distribution& F) {
  switch (T.kind()) {
    case Functional::Kind::mean:
      return F.mean();
    case Functional::Kind::median:
    case Functional::Kind::quantile:
      return F.quantile(T.p());
    case Functional::Kind::trimmed_mean: {
      double a = T.trim(), b = 1.0 - T.trim();
      return detail::quantile_integral(F, a, b) / (b - a);
    }
    case Functional::Kind::linear:
      return detail::expect_g(T.g(), F);
  }
  throw Error("unreachable");
}

// Influence at contamination scale rho:
//   IF_rho(x) = (T((1 - rho) F + rho delta_x) - T(F)) / rho.
inline double influence_rho(const Functional& T, const Distribution& F, double x,
                            double rho) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw ValidationError("influence.rho", "must lie in (0, 1]");
  if (!F.domain().contains(x))
    throw ValidationError("influence.x", "must lie in the domain");
  Distribution G = Distribution::contaminated(F, x, rho);
  return (evaluate(T, G) - evaluate(T, F)) / rho;
}

namespace detail {

// Candidate contamination points where |IF_rho| attains its supremum: the
// domain endpoints for monotone functionals, plus the knots for linear T.
inline std::vector<double> ges_candidates(const Functional& T, const Distribution& F) {
  std::vector<double> xs{F.domain().lo, F.domain().hi};
  if (T.kind() == Functional::Kind::linear) {
    for (double x : T.g().knot_xs())
      if (F.domain().contains(x)) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace detail

// Gross error sensitivity sup_x |IF_rho(x)|.
//
// T((1 - rho) F + rho delta_x) is monotone in x for every supported order
// functional and mean, so the supremum sits at a domain endpoint; for linear
// T it sits at a knot or endpoint of g.  Exact on the candidate set.
inline double ges_rho(const Functional& T, const Distribution& F, double rho) {
  double best = 0.0;
  for (double x : detail::ges_candidates(T, F))
    best = std::max(best, std::fabs(influence_rho(T, F, x, rho)));
  return best;
}

// Contamination point attaining ges_rho (first maximizer, ascending order).
inline double ges_argmax(const Functional& T, const Distribution& F, double rho) {
  double best = -1.0;
  double arg = F.domain().lo;
  for (double x : detail::ges_candidates(T, F)) {
    double v = std::fabs(influence_rho(T, F, x, rho));
    if (v > best) {
      best = v;
      arg = x;
    }
  }
  return arg;
}

// Grid-supremum fallback; kept as an independent check of ges_rho.
inline double ges_rho_grid(const Functional& T, const Distribution& F, double rho,
                           int grid_points) {
  int g = std::max(2, grid_points);
  double best = 0.0;
  const Interval& d = F.domain();
  for (int i = 0; i < g; ++i) {
    double x = d.lo + d.length() * static_cast<double>(i) / static_cast<double>(g - 1);
    best = std::max(best, std::fabs(influence_rho(T, F, x, rho)));
  }
  return best;
}

struct RobustnessProfile {
  double rho;        // contamination scale, 1/n
  double ges_rho;    // GES at the center distribution
  double gamma_n;    // supremum over the searched ball
  double eta;
  double radius;     // Kolmogorov-ball radius
  enum class Method { exact, grid, monte_carlo } method;
  std::string family;  // description of the searched perturbation family

  static const char* method_name(Method m) {
    switch (m) {
      case Method::exact: return "exact";
      case Method::grid: return "grid";
      case Method::monte_carlo: return "monte-carlo";
    }
    return "?";
  }
};

struct GammaOptions {
  int shift_steps = 8;              // shifted members per direction
  int contamination_locations = 17; // atom positions across the domain
  std::vector<double> mass_fractions{1.0, 0.5};
};

// Supremum of GES_{1/n} over a Kolmogorov ball of the given radius around F.
//
// For the median on a uniform-shift model the supremum over the model family
// itself is exact: GES is translation invariant, so every member of the ball
// shares the center's value.  Otherwise the ball is searched over a recorded
// perturbation family: shifted members (when F is a uniform shift) and CDF
// bumps, i.e. contaminations (1 - q) F + q delta_x whose Kolmogorov distance
// q * max(F(x-), 1 - F(x)) stays within the radius.
inline RobustnessProfile gamma_n_with_radius(const Functional& T,
                                             const Distribution& F,
                                             std::size_t n, double eta,
                                             double radius,
                                             const GammaOptions& options = GammaOptions{}) {
  if (n == 0) throw ValidationError("gamma_n.n", "must be positive");
  double rho = 1.0 / static_cast<double>(n);
  double center = ges_rho(T, F, rho);

  bool median_on_uniform =
      T.kind() == Functional::Kind::median &&
      std::holds_alternative<Distribution::UniformShift>(F.node());
  if (median_on_uniform) {
    return RobustnessProfile{
        rho, center, center, eta, radius, RobustnessProfile::Method::exact,
        "uniform_shift translations within the ball (GES is translation "
        "invariant, so the supremum equals the center value)"};
  }

  double best = center;
  int candidates = 1;
  if (const auto* u = std::get_if<Distribution::UniformShift>(&F.node())) {
    // d_GC(U_gamma, U_gamma') = min(|gamma - gamma'| / 2, 1)
    for (int i = 1; i <= options.shift_steps; ++i) {
      double s = 2.0 * radius * static_cast<double>(i) /
                 static_cast<double>(options.shift_steps);
      for (double shift : {s, -s}) {
        Distribution g = Distribution::uniform_shift(u->gamma + shift);
        best = std::max(best, ges_rho(T, g, rho));
        ++candidates;
      }
    }
  }
  const Interval& d = F.domain();
  int locs = std::max(2, options.contamination_locations);
  for (int i = 0; i < locs; ++i) {
    double x = d.lo + d.length() * static_cast<double>(i) / static_cast<double>(locs - 1);
    double cost = std::max(F.cdf_left(x), 1.0 - F.cdf(x));
    if (cost <= 0.0) continue;
    for (double frac : options.mass_fractions) {
      double q = std::min(radius / cost, 0.999) * frac;
      if (q <= 0.0) continue;
      Distribution g = Distribution::contaminated(F, x, q);
      best = std::max(best, ges_rho(T, g, rho));
      ++candidates;
    }
  }
  return RobustnessProfile{
      rho, center, best, eta, radius, RobustnessProfile::Method::monte_carlo,
      "shifted members and single-atom CDF bumps within the ball (" +
          std::to_string(candidates) + " candidates)"};
}

// Condition-2 profile: radius sqrt(2 ln(2/eta) / n).
inline RobustnessProfile gamma_n(const Functional& T, const Distribution& F,
                                 std::size_t n, double eta,
                                 const GammaOptions& options = GammaOptions{}) {
  if (!(eta > 0.0 && eta < 1.0))
    throw EtaOutOfRangeError("gamma_n: eta must lie in (0, 1)");
  double radius =
      std::sqrt(2.0 * std::log(2.0 / eta) / static_cast<double>(n));
  return gamma_n_with_radius(T, F, n, eta, radius, options);
}

}  // namespace dpstat
