#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dpstat/errors.hpp"
#include "dpstat/format.hpp"
#include "dpstat/interval.hpp"
#include "dpstat/rng.hpp"

namespace dpstat {

struct SeedProvenance {
  std::uint64_t seed;
  std::string model;
};

// Analytic distribution on a bounded domain [L, U].
//
// Four shapes are supported:
//   uniform_shift(gamma)            uniform on [gamma - 1, gamma + 1]
//   bounded_discrete(points, w)     finitely many atoms
//   point_mass(x)                   a single atom
//   contaminated(base, x, rho)      (1 - rho) * base + rho * delta_x
//
// The domain is carried explicitly; it must contain the support and bounds
// every contamination / sensitivity search performed downstream.
class Distribution {
 public:
  struct UniformShift {
    double gamma;
  };
  struct BoundedDiscrete {
    std::vector<double> points;   // ascending, no duplicates
    std::vector<double> weights;  // positive, summing to 1
    std::vector<double> cum;      // prefix sums of weights
  };
  struct PointMass {
    double x;
  };
  struct Contaminated {
    std::shared_ptr<const Distribution> base;
    double x;
    double rho;
  };
  using Node = std::variant<UniformShift, BoundedDiscrete, PointMass, Contaminated>;

  static Distribution uniform_shift(double gamma) {
    return uniform_shift(gamma, Interval(gamma - 1.0, gamma + 1.0));
  }

  static Distribution uniform_shift(double gamma, Interval domain) {
    if (!domain.contains(gamma - 1.0) || !domain.contains(gamma + 1.0))
      throw ValidationError("distribution.domain", "must contain the support");
    return Distribution(UniformShift{gamma}, domain);
  }

  static Distribution bounded_discrete(std::vector<double> points,
                                       std::vector<double> weights) {
    if (points.empty())
      throw ValidationError("distribution.points", "must be nonempty");
    Interval domain(*std::min_element(points.begin(), points.end()),
                    *std::max_element(points.begin(), points.end()));
    return bounded_discrete(std::move(points), std::move(weights), domain);
  }

  static Distribution bounded_discrete(std::vector<double> points,
                                       std::vector<double> weights,
                                       Interval domain) {
    if (points.size() != weights.size() || points.empty())
      throw ValidationError("distribution.points",
                            "points and weights must be nonempty and equal-length");
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    BoundedDiscrete d;
    for (std::size_t i : order) {
      if (weights[i] < 0.0)
        throw ValidationError("distribution.weights", "must be nonnegative");
      if (!domain.contains(points[i]))
        throw ValidationError("distribution.domain", "must contain the support");
      if (!d.points.empty() && d.points.back() == points[i]) {
        d.weights.back() += weights[i];  // merge duplicate atoms
      } else {
        d.points.push_back(points[i]);
        d.weights.push_back(weights[i]);
      }
    }
    double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
    if (std::fabs(total - 1.0) > 1e-12)
      throw ValidationError("distribution.weights", "must sum to 1");
    d.cum.resize(d.weights.size());
    std::partial_sum(d.weights.begin(), d.weights.end(), d.cum.begin());
    d.cum.back() = 1.0;
    return Distribution(std::move(d), domain);
  }

  static Distribution point_mass(double x) { return point_mass(x, Interval(x, x)); }

  static Distribution point_mass(double x, Interval domain) {
    if (!domain.contains(x))
      throw ValidationError("distribution.domain", "must contain the support");
    return Distribution(PointMass{x}, domain);
  }

  static Distribution contaminated(Distribution base, double x, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0))
      throw ValidationError("distribution.rho", "must lie in [0, 1]");
    Interval domain = base.domain().hull(x);
    Contaminated c{std::make_shared<const Distribution>(std::move(base)), x, rho};
    return Distribution(std::move(c), domain);
  }

  const Interval& domain() const { return domain_; }
  const Node& node() const { return node_; }

  const UniformShift* as_uniform_shift() const {
    return std::get_if<UniformShift>(&node_);
  }
  const Contaminated* as_contaminated() const {
    return std::get_if<Contaminated>(&node_);
  }

  // F(t) = Pr[X <= t], right-continuous.
  double cdf(double t) const {
    return std::visit(
        [&](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) {
            if (t <= n.gamma - 1.0) return 0.0;
            if (t >= n.gamma + 1.0) return 1.0;
            return (t - n.gamma + 1.0) / 2.0;
          } else if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            auto it = std::upper_bound(n.points.begin(), n.points.end(), t);
            std::size_t k = static_cast<std::size_t>(it - n.points.begin());
            return k == 0 ? 0.0 : n.cum[k - 1];
          } else if constexpr (std::is_same_v<T, PointMass>) {
            return t >= n.x ? 1.0 : 0.0;
          } else {
            return (1.0 - n.rho) * n.base->cdf(t) + (t >= n.x ? n.rho : 0.0);
          }
        },
        node_);
  }

  // Left limit F(t-) = Pr[X < t].
  double cdf_left(double t) const {
    return std::visit(
        [&](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) {
            return cdf(t);
          } else if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            auto it = std::lower_bound(n.points.begin(), n.points.end(), t);
            std::size_t k = static_cast<std::size_t>(it - n.points.begin());
            return k == 0 ? 0.0 : n.cum[k - 1];
          } else if constexpr (std::is_same_v<T, PointMass>) {
            return t > n.x ? 1.0 : 0.0;
          } else {
            return (1.0 - n.rho) * n.base->cdf_left(t) + (t > n.x ? n.rho : 0.0);
          }
        },
        node_);
  }

  // Generalized inverse Q(p) = inf{t : F(t) >= p}, for p in (0, 1].
  double quantile(double p) const {
    if (!(p > 0.0 && p <= 1.0))
      throw ValidationError("quantile.p", "must lie in (0, 1]");
    return std::visit(
        [&](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) {
            return n.gamma - 1.0 + 2.0 * p;
          } else if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            auto it = std::lower_bound(n.cum.begin(), n.cum.end(), p);
            std::size_t k = static_cast<std::size_t>(it - n.cum.begin());
            if (k >= n.points.size()) k = n.points.size() - 1;
            return n.points[k];
          } else if constexpr (std::is_same_v<T, PointMass>) {
            return n.x;
          } else {
            if (n.rho >= 1.0) return n.x;
            double keep = 1.0 - n.rho;
            double below = keep * n.base->cdf_left(n.x);
            if (p <= below) return n.base->quantile(p / keep);
            double at = keep * n.base->cdf(n.x) + n.rho;
            if (p <= at) return n.x;
            return n.base->quantile((p - n.rho) / keep);
          }
        },
        node_);
  }

  double mean() const {
    return std::visit(
        [&](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) {
            return n.gamma;
          } else if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            double s = 0.0;
            for (std::size_t i = 0; i < n.points.size(); ++i)
              s += n.points[i] * n.weights[i];
            return s;
          } else if constexpr (std::is_same_v<T, PointMass>) {
            return n.x;
          } else {
            return (1.0 - n.rho) * n.base->mean() + n.rho * n.x;
          }
        },
        node_);
  }

  // Density of the absolutely continuous part (atoms excluded).  Support
  // endpoints are treated as inside.
  double density(double t) const {
    return std::visit(
        [&](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) {
            return (t >= n.gamma - 1.0 && t <= n.gamma + 1.0) ? 0.5 : 0.0;
          } else if constexpr (std::is_same_v<T, Contaminated>) {
            return (1.0 - n.rho) * n.base->density(t);
          } else {
            return 0.0;
          }
        },
        node_);
  }

  // Probability of the atom at exactly t (0 if none).
  double atom_mass(double t) const {
    return std::visit(
        [&](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            auto it = std::lower_bound(n.points.begin(), n.points.end(), t);
            if (it != n.points.end() && *it == t)
              return n.weights[static_cast<std::size_t>(it - n.points.begin())];
            return 0.0;
          } else if constexpr (std::is_same_v<T, PointMass>) {
            return t == n.x ? 1.0 : 0.0;
          } else if constexpr (std::is_same_v<T, Contaminated>) {
            return (1.0 - n.rho) * n.base->atom_mass(t) + (t == n.x ? n.rho : 0.0);
          } else {
            return 0.0;
          }
        },
        node_);
  }

  bool is_discrete() const {
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) return false;
          else if constexpr (std::is_same_v<T, Contaminated>)
            return n.rho >= 1.0 || n.base->is_discrete();
          else return true;
        },
        node_);
  }

  // Flattens a purely atomic distribution to (point, weight) pairs, ascending.
  std::vector<std::pair<double, double>> atoms() const {
    if (!is_discrete())
      throw UnsupportedPairError("atoms(): distribution has a continuous part");
    std::vector<std::pair<double, double>> out;
    collect_atoms(1.0, out);
    std::sort(out.begin(), out.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& a : out) {
      if (!merged.empty() && merged.back().first == a.first)
        merged.back().second += a.second;
      else
        merged.push_back(a);
    }
    return merged;
  }

  // Points where the CDF jumps or changes slope, plus the domain endpoints.
  std::vector<double> breakpoints() const {
    std::vector<double> out{domain_.lo, domain_.hi};
    collect_breakpoints(out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::string describe() const {
    std::string body = std::visit(
        [&](const auto& n) -> std::string {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) {
            return "uniform_shift(gamma=" + format_real(n.gamma) + ")";
          } else if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            std::string s = "bounded_discrete(points=[";
            for (std::size_t i = 0; i < n.points.size(); ++i) {
              if (i) s += " ";
              s += format_real(n.points[i]);
            }
            s += "] weights=[";
            for (std::size_t i = 0; i < n.weights.size(); ++i) {
              if (i) s += " ";
              s += format_real(n.weights[i]);
            }
            return s + "])";
          } else if constexpr (std::is_same_v<T, PointMass>) {
            return "point_mass(x=" + format_real(n.x) + ")";
          } else {
            return "contaminated(base=" + n.base->describe() +
                   " x=" + format_real(n.x) + " rho=" + format_real(n.rho) + ")";
          }
        },
        node_);
    return body + " domain=[" + format_real(domain_.lo) + "," +
           format_real(domain_.hi) + "]";
  }

  friend bool operator==(const Distribution& a, const Distribution& b) {
    if (!(a.domain_ == b.domain_)) return false;
    if (a.node_.index() != b.node_.index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
          using T = std::decay_t<decltype(na)>;
          const auto& nb = std::get<T>(b.node_);
          if constexpr (std::is_same_v<T, UniformShift>) {
            return na.gamma == nb.gamma;
          } else if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            return na.points == nb.points && na.weights == nb.weights;
          } else if constexpr (std::is_same_v<T, PointMass>) {
            return na.x == nb.x;
          } else {
            return na.x == nb.x && na.rho == nb.rho && *na.base == *nb.base;
          }
        },
        a.node_);
  }

 private:
  Distribution(Node node, Interval domain)
      : node_(std::move(node)), domain_(domain) {}

  void collect_atoms(double scale,
                     std::vector<std::pair<double, double>>& out) const {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            for (std::size_t i = 0; i < n.points.size(); ++i)
              out.emplace_back(n.points[i], scale * n.weights[i]);
          } else if constexpr (std::is_same_v<T, PointMass>) {
            out.emplace_back(n.x, scale);
          } else if constexpr (std::is_same_v<T, Contaminated>) {
            if (n.rho < 1.0) n.base->collect_atoms(scale * (1.0 - n.rho), out);
            if (n.rho > 0.0) out.emplace_back(n.x, scale * n.rho);
          }
        },
        node_);
  }

  void collect_breakpoints(std::vector<double>& out) const {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, UniformShift>) {
            out.push_back(n.gamma - 1.0);
            out.push_back(n.gamma + 1.0);
          } else if constexpr (std::is_same_v<T, BoundedDiscrete>) {
            out.insert(out.end(), n.points.begin(), n.points.end());
          } else if constexpr (std::is_same_v<T, PointMass>) {
            out.push_back(n.x);
          } else {
            n.base->collect_breakpoints(out);
            out.push_back(n.x);
          }
        },
        node_);
  }

  Node node_;
  Interval domain_;
};

// A dataset of n real values in a fixed domain.
//
// Values are kept both in draw ("origin") order and sorted.  Origin order is
// what defines neighboring datasets: replacing entry i produces a dataset at
// Hamming distance one, and hamming_distance() counts differing origin slots.
class SampleData {
 public:
  SampleData(std::vector<double> values, Interval domain,
             std::optional<SeedProvenance> provenance = std::nullopt)
      : origin_(std::move(values)),
        sorted_(origin_),
        domain_(domain),
        provenance_(std::move(provenance)) {
    if (origin_.empty())
      throw ValidationError("sample", "must be nonempty");
    for (double v : origin_)
      if (!domain_.contains(v))
        throw ValidationError("sample", "value outside domain");
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const { return origin_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }
  const std::vector<double>& origin() const { return origin_; }
  const Interval& domain() const { return domain_; }
  const std::optional<SeedProvenance>& provenance() const { return provenance_; }

  // 1-based order statistic, padded with the domain endpoints:
  // i <= 0 yields L and i >= n + 1 yields U.
  double padded_order_stat(long long i) const {
    if (i < 1) return domain_.lo;
    if (i > static_cast<long long>(size())) return domain_.hi;
    return sorted_[static_cast<std::size_t>(i - 1)];
  }

  double empirical_cdf(double t) const {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(size());
  }

  double empirical_cdf_left(double t) const {
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(size());
  }

  SampleData with_replaced(std::size_t origin_index, double value) const {
    if (origin_index >= size())
      throw ValidationError("sample.replace_index", "out of range");
    std::vector<double> values = origin_;
    values[origin_index] = value;
    return SampleData(std::move(values), domain_);
  }

  std::size_t hamming_distance(const SampleData& other) const {
    if (size() != other.size())
      throw NotNeighborsError("hamming distance requires equal-length samples");
    std::size_t d = 0;
    for (std::size_t i = 0; i < size(); ++i)
      if (origin_[i] != other.origin_[i]) ++d;
    return d;
  }

 private:
  std::vector<double> origin_;
  std::vector<double> sorted_;
  Interval domain_;
  std::optional<SeedProvenance> provenance_;
};

// n i.i.d. draws by inverse CDF on a shared uniform stream.
inline SampleData draw_sample(const Distribution& model, std::size_t n, Rng& rng) {
  if (n == 0) throw ValidationError("sample.n", "must be positive");
  std::vector<double> values;
  values.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    values.push_back(model.quantile(rng.uniform()));
  return SampleData(std::move(values), model.domain());
}

// Same, from a fresh seed; the seed is recorded in the sample's provenance.
inline SampleData draw_sample(const Distribution& model, std::size_t n,
                              std::uint64_t seed) {
  Rng rng(seed);
  if (n == 0) throw ValidationError("sample.n", "must be positive");
  std::vector<double> values;
  values.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    values.push_back(model.quantile(rng.uniform()));
  return SampleData(std::move(values), model.domain(),
                    SeedProvenance{seed, model.describe()});
}

namespace detail {

// Uniform view over the two CDF-bearing types.
class CdfView {
 public:
  CdfView(const Distribution& d) : dist_(&d) {}  // NOLINT(implicit)
  CdfView(const SampleData& s) : sample_(&s) {}  // NOLINT(implicit)

  double cdf(double t) const {
    return dist_ ? dist_->cdf(t) : sample_->empirical_cdf(t);
  }
  double cdf_left(double t) const {
    return dist_ ? dist_->cdf_left(t) : sample_->empirical_cdf_left(t);
  }
  std::vector<double> breakpoints() const {
    if (dist_) return dist_->breakpoints();
    std::vector<double> out(sample_->sorted());
    out.push_back(sample_->domain().lo);
    out.push_back(sample_->domain().hi);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  Interval domain() const { return dist_ ? dist_->domain() : sample_->domain(); }

 private:
  const Distribution* dist_ = nullptr;
  const SampleData* sample_ = nullptr;
};

}  // namespace detail

struct GcResult {
  double value;
  enum class Method { exact, grid } method;
};

struct GcOptions {
  bool force_grid = false;
  int grid_points = 10000;
};

// Kolmogorov (sup) distance between two CDFs.
//
// Every distribution in this library is piecewise linear between its
// breakpoints and empirical CDFs are step functions, so the supremum is
// attained at a breakpoint (approaching from the left or the right); the
// default path evaluates exactly there.  The grid path exists as an
// independent oracle and for callers that want it explicitly.
inline GcResult gc_distance(detail::CdfView a, detail::CdfView b,
                            const GcOptions& options = GcOptions{}) {
  if (options.force_grid) {
    Interval hull = a.domain().hull(b.domain());
    int g = std::max(2, options.grid_points);
    double best = 0.0;
    for (int i = 0; i < g; ++i) {
      double t = hull.lo + (hull.hi - hull.lo) * static_cast<double>(i) /
                               static_cast<double>(g - 1);
      best = std::max(best, std::fabs(a.cdf(t) - b.cdf(t)));
    }
    return GcResult{best, GcResult::Method::grid};
  }
  std::vector<double> ts = a.breakpoints();
  std::vector<double> tb = b.breakpoints();
  ts.insert(ts.end(), tb.begin(), tb.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  double best = 0.0;
  for (double t : ts) {
    best = std::max(best, std::fabs(a.cdf(t) - b.cdf(t)));
    best = std::max(best, std::fabs(a.cdf_left(t) - b.cdf_left(t)));
  }
  return GcResult{best, GcResult::Method::exact};
}

// Total variation distance.  Supported pairs: structurally equal models,
// two purely atomic models, and a model versus its own contamination.
inline double tv_distance(const Distribution& a, const Distribution& b) {
  if (a == b) return 0.0;
  if (a.is_discrete() && b.is_discrete()) {
    auto atoms_a = a.atoms();
    auto atoms_b = b.atoms();
    double l1 = 0.0;
    std::size_t i = 0, j = 0;
    while (i < atoms_a.size() || j < atoms_b.size()) {
      if (j >= atoms_b.size() ||
          (i < atoms_a.size() && atoms_a[i].first < atoms_b[j].first)) {
        l1 += atoms_a[i++].second;
      } else if (i >= atoms_a.size() || atoms_b[j].first < atoms_a[i].first) {
        l1 += atoms_b[j++].second;
      } else {
        l1 += std::fabs(atoms_a[i].second - atoms_b[j].second);
        ++i;
        ++j;
      }
    }
    return l1 / 2.0;
  }
  // Contamination of F against F itself: rho * (1 - F({x})).
  auto contamination_of = [](const Distribution& mix,
                             const Distribution& base) -> std::optional<double> {
    if (const auto* c = std::get_if<Distribution::Contaminated>(&mix.node())) {
      if (*c->base == base) return c->rho * (1.0 - base.atom_mass(c->x));
    }
    return std::nullopt;
  };
  if (auto tv = contamination_of(a, b)) return *tv;
  if (auto tv = contamination_of(b, a)) return *tv;
  throw UnsupportedPairError(
      "tv_distance: no closed form for this pair (supported: discrete pairs, "
      "a model vs its own contamination, identical models)");
}

}  // namespace dpstat
