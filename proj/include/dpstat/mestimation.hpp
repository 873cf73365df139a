#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/format.hpp"
#include "dpstat/rng.hpp"

namespace dpstat {

// Bounded monotone psi function.  scale multiplies psi and K together, which
// the estimator is invariant to; it exists so that invariance is testable.
class PsiSpec {
 public:
  enum class Kind { sign_median, clipped_shift };

  static PsiSpec sign_median() { return PsiSpec(Kind::sign_median, 0.0, 1.0); }

  static PsiSpec clipped_shift(double clip) {
    if (!(clip > 0.0)) throw ValidationError("psi.clip", "must be positive");
    return PsiSpec(Kind::clipped_shift, clip, 1.0);
  }

  PsiSpec scaled(double factor) const {
    if (!(factor > 0.0)) throw ValidationError("psi.scale", "must be positive");
    return PsiSpec(kind_, clip_, scale_ * factor);
  }

  Kind kind() const { return kind_; }
  double clip() const { return clip_; }
  double scale() const { return scale_; }

  // Range bound: |psi| <= K everywhere.
  double K() const {
    return scale_ * (kind_ == Kind::sign_median ? 1.0 : clip_);
  }

  double operator()(double x, double theta) const {
    switch (kind_) {
      case Kind::sign_median:
        return scale_ * (theta > x ? 1.0 : theta < x ? -1.0 : 0.0);
      case Kind::clipped_shift:
        return scale_ * std::clamp(theta - x, -clip_, clip_);
    }
    return 0.0;
  }

  std::string describe() const {
    std::string s = kind_ == Kind::sign_median
                        ? "SignMedian"
                        : "ClippedShift(" + format_real(clip_) + ")";
    if (scale_ != 1.0) s += " x " + format_real(scale_);
    return s;
  }

 private:
  PsiSpec(Kind kind, double clip, double scale)
      : kind_(kind), clip_(clip), scale_(scale) {}

  Kind kind_;
  double clip_;
  double scale_;
};

// Smoothness constants (r1, r2, Lambda1, Lambda2) around the root, supplied
// per (psi, model) pair.
struct SmoothnessSpec {
  double r1;
  double r2;
  double lambda1;
  double lambda2;

  SmoothnessSpec(double r1_, double r2_, double lambda1_, double lambda2_)
      : r1(r1_), r2(r2_), lambda1(lambda1_), lambda2(lambda2_) {
    if (!(r1 > 0.0)) throw ValidationError("smoothness.r1", "must be positive");
    if (!(r2 > 0.0)) throw ValidationError("smoothness.r2", "must be positive");
    if (!(lambda1 > 0.0))
      throw ValidationError("smoothness.lambda1", "must be positive");
    if (!(lambda2 > 0.0))
      throw ValidationError("smoothness.lambda2", "must be positive");
  }
};

// Prior density for the exponential-mechanism estimator.
class PriorSpec {
 public:
  static PriorSpec uniform(double lo, double hi) {
    if (!(lo < hi)) throw ValidationError("prior", "requires lo < hi");
    return PriorSpec(true, lo, hi);
  }

  static PriorSpec cauchy() { return PriorSpec(false, 0.0, 0.0); }

  bool is_uniform() const { return uniform_; }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double range_length() const {
    if (!uniform_) throw ValidationError("prior", "Cauchy prior has no finite range");
    return hi_ - lo_;
  }

  double density(double theta) const {
    if (uniform_)
      return (theta >= lo_ && theta <= hi_) ? 1.0 / (hi_ - lo_) : 0.0;
    constexpr double pi = 3.14159265358979323846;
    return 1.0 / (pi * (1.0 + theta * theta));
  }

  std::string describe() const {
    if (uniform_)
      return "Uniform[" + format_real(lo_) + ", " + format_real(hi_) + "]";
    return "StandardCauchy";
  }

 private:
  PriorSpec(bool uniform, double lo, double hi)
      : uniform_(uniform), lo_(lo), hi_(hi) {}

  bool uniform_;
  double lo_;
  double hi_;
};

namespace detail {

// Integral of clamp(u, -c, c): even, = t^2/2 inside, c|t| - c^2/2 outside.
inline double clamp_antiderivative(double t, double c) {
  double a = std::fabs(t);
  return a <= c ? t * t / 2.0 : c * a - c * c / 2.0;
}

inline double big_psi_model(const PsiSpec& psi, const Distribution& F,
                            double theta) {
  if (psi.kind() == PsiSpec::Kind::sign_median)
    return psi.scale() * (F.cdf_left(theta) + F.cdf(theta) - 1.0);
  // ClippedShift: E[clamp(theta - x, -c, c)], exact per model variant.
  double c = psi.clip();
  if (F.is_discrete()) {
    double total = 0.0;
    for (const auto& [x, w] : F.atoms()) total += w * psi(x, theta);
    return total;
  }
  if (auto u = F.as_uniform_shift()) {
    double a = theta - u->gamma - 1.0, b = theta - u->gamma + 1.0;
    return psi.scale() *
           (clamp_antiderivative(b, c) - clamp_antiderivative(a, c)) / 2.0;
  }
  if (auto mix = F.as_contaminated()) {
    return (1.0 - mix->rho) * big_psi_model(psi, *mix->base, theta) +
           mix->rho * psi(mix->x, theta);
  }
  throw UnsupportedPairError("big_psi: no exact form for this model");
}

}  // namespace detail

// Psi(G, theta) = integral of psi(x, theta) dG(x).  Exact for every model
// variant (closed form for the uniform piece, sums for atoms, recursion for
// mixtures), so no quadrature fallback is needed.
inline double big_psi(const PsiSpec& psi, const Distribution& F, double theta) {
  return detail::big_psi_model(psi, F, theta);
}

inline double big_psi(const PsiSpec& psi, const SampleData& sample, double theta) {
  const std::vector<double>& xs = sample.sorted();
  auto n = static_cast<double>(xs.size());
  if (psi.kind() == PsiSpec::Kind::sign_median) {
    auto below = std::lower_bound(xs.begin(), xs.end(), theta) - xs.begin();
    auto not_above = std::upper_bound(xs.begin(), xs.end(), theta) - xs.begin();
    auto above = static_cast<long long>(xs.size()) - not_above;
    return psi.scale() * static_cast<double>(below - above) / n;
  }
  double total = 0.0;
  for (double x : xs) total += psi(x, theta);
  return total / n;
}

// Derivative of Psi in theta.  SignMedian: 2 f(theta), rejecting atoms at
// theta; ClippedShift: mass of the open interval (theta - c, theta + c).
inline double big_psi_prime(const PsiSpec& psi, const Distribution& F,
                            double theta) {
  if (psi.kind() == PsiSpec::Kind::sign_median) {
    if (F.atom_mass(theta) > 0.0)
      throw NonDifferentiableError("big_psi_prime: atom at theta");
    return psi.scale() * 2.0 * F.density(theta);
  }
  double c = psi.clip();
  return psi.scale() * (F.cdf_left(theta + c) - F.cdf(theta - c));
}

// Central finite difference with step h = 1e-5 (1 + |theta|); oracle for the
// analytic derivative.
inline double big_psi_prime_fd(const PsiSpec& psi, const Distribution& F,
                               double theta) {
  double h = 1e-5 * (1.0 + std::fabs(theta));
  return (big_psi(psi, F, theta + h) - big_psi(psi, F, theta - h)) / (2.0 * h);
}

namespace detail {

// Bisection for the nondecreasing Psi: converges to inf{theta : Psi >= 0},
// which is the left endpoint of any flat zero stretch (lower-median
// convention).  Requires a sign change over the bracket.
template <typename PsiEval>
double bisect_root(PsiEval&& eval, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw ValidationError("solve.tol", "must be positive");
  if (!(eval(lo) < 0.0) || eval(hi) < 0.0)
    throw NoSignChangeError("solve_m_estimator: Psi does not change sign on the bracket");
  while (hi - lo > tol) {
    double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    (eval(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace detail

inline double solve_m_estimator(const PsiSpec& psi, const Distribution& F,
                                double tol) {
  double L = F.domain().lo, U = F.domain().hi;
  double pad = psi.K() / psi.scale() * (U - L);
  return detail::bisect_root(
      [&](double t) { return big_psi(psi, F, t); }, L - pad, U + pad, tol);
}

inline double solve_m_estimator(const PsiSpec& psi, const SampleData& sample,
                                double tol) {
  if (!(tol > 0.0)) throw ValidationError("solve.tol", "must be positive");
  // The sign-psi root on a sample is exactly the lower median.
  if (psi.kind() == PsiSpec::Kind::sign_median) {
    std::size_t n = sample.size();
    return sample.sorted()[(n + 1) / 2 - 1];
  }
  double L = sample.domain().lo, U = sample.domain().hi;
  double pad = psi.K() / psi.scale() * (U - L);
  return detail::bisect_root(
      [&](double t) { return big_psi(psi, sample, t); }, L - pad, U + pad, tol);
}

// Root, derivative there, and the GES bound K / |Psi'|; smoothness constants
// and the induced (eps1, eps2) are attached separately.
struct MEstimationContext {
  PsiSpec psi;
  Distribution model;
  double root;
  double psi_prime_at_root;
  double ges_bound;
  std::optional<SmoothnessSpec> smoothness;
  double eps1 = std::numeric_limits<double>::quiet_NaN();
  double eps2 = std::numeric_limits<double>::quiet_NaN();
};

inline MEstimationContext analyze_m_estimator(const PsiSpec& psi,
                                              const Distribution& F,
                                              double tol = 1e-12) {
  double span = F.domain().length();
  double root = solve_m_estimator(psi, F, tol * (1.0 + span));
  double prime = big_psi_prime(psi, F, root);
  if (std::fabs(prime) < 1e-12)
    throw DegenerateDerivativeError(
        "analyze_m_estimator: |Psi'| < 1e-12 at the root");
  return MEstimationContext{psi, F, root, prime, psi.K() / std::fabs(prime),
                            std::nullopt};
}

inline MEstimationContext with_smoothness(MEstimationContext ctx,
                                          const SmoothnessSpec& spec) {
  double prime = std::fabs(ctx.psi_prime_at_root);
  ctx.smoothness = spec;
  ctx.eps1 = std::min(spec.r1, prime / (6.0 * spec.lambda1));
  ctx.eps2 = std::min(spec.r2 / 2.0, prime / (6.0 * spec.lambda2));
  return ctx;
}

// Monte Carlo estimate of N_{eps, eta}: the smallest tested n whose empirical
// exceedance probability, plus one binomial standard error, is <= eta.
struct SampleSizeResult {
  std::size_t n;
  double p_hat;
  double std_err;
  std::size_t trials;
};

inline SampleSizeResult estimate_sample_size(const PsiSpec& psi,
                                             const Distribution& F, double eps,
                                             double eta, std::size_t trials,
                                             Rng& rng) {
  if (trials < 1000) throw ValidationError("sample_size.trials", "must be >= 1000");
  if (!(eps > 0.0)) throw ValidationError("sample_size.eps", "must be positive");
  if (!(eta > 0.0 && eta < 1.0))
    throw EtaOutOfRangeError("estimate_sample_size: eta must lie in (0, 1)");
  double span = F.domain().length();
  double target = solve_m_estimator(psi, F, 1e-12 * (1.0 + span));
  double tol = 1e-10 * (1.0 + span);
  std::uint64_t root_seed = rng.next_u64();

  auto probe = [&](std::size_t n) {
    std::size_t exceed = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      Rng stream(Rng::mix(root_seed, {n, t}));
      SampleData sample = draw_sample(F, n, stream);
      double est = solve_m_estimator(psi, sample, tol);
      if (std::fabs(est - target) > eps) ++exceed;
    }
    double p = static_cast<double>(exceed) / static_cast<double>(trials);
    double se = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    return std::pair{p, se};
  };
  auto passes = [&](std::pair<double, double> pr) {
    return pr.first + pr.second <= eta;
  };

  constexpr std::size_t cap = std::size_t{1} << 24;
  std::size_t lo = 0, hi = 1;
  auto hi_probe = probe(hi);
  while (!passes(hi_probe)) {
    lo = hi;
    if (hi >= cap)
      throw UnboundedError("estimate_sample_size: not reached by n = 2^24");
    hi = std::min(hi * 2, cap);
    hi_probe = probe(hi);
  }
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    auto mid_probe = probe(mid);
    if (passes(mid_probe)) {
      hi = mid;
      hi_probe = mid_probe;
    } else {
      lo = mid;
    }
  }
  return SampleSizeResult{hi, hi_probe.first, hi_probe.second, trials};
}

// Prior-case sample-size terms.
inline double uniform_prior_sample_term(double prior_range, double eps,
                                        double eta, double alpha,
                                        double ges_bound) {
  return 8.0 * std::log(6.0 * prior_range / (eps * eta)) / (alpha * eps) *
         ges_bound;
}

inline double cauchy_prior_sample_term(double root_abs, double eps2, double eps,
                                       double eta, double alpha,
                                       double ges_bound) {
  constexpr double pi = 3.14159265358979323846;
  double q = 2.0 * (root_abs + eps2) * (root_abs + eps2) + 1.0;
  return 8.0 / (alpha * eps) *
         std::log(pi / eta * (q / (eps / 3.0) + eps / 6.0)) * ges_bound;
}

// Sample size sufficient for eps-accuracy at confidence 1 - 3 eta: the max of
// the ln(2/eta)/(2 eps1^2) baseline, N_{eps2, eta}, and the prior-case term.
inline std::size_t exp_mech_sample_size(const MEstimationContext& ctx,
                                        const PriorSpec& prior, double eps,
                                        double eta, double alpha,
                                        std::size_t n_eps2_eta) {
  if (!ctx.smoothness)
    throw ValidationError("ctx.smoothness",
                          "exp_mech_sample_size requires smoothness constants");
  if (!(eta > 0.0 && eta < 1.0))
    throw EtaOutOfRangeError("exp_mech_sample_size: eta must lie in (0, 1)");
  if (!(alpha > 0.0)) throw ValidationError("alpha", "must be positive");
  if (!(eps > 0.0)) throw ValidationError("eps", "must be positive");
  if (eps >= ctx.eps2)
    throw EpsTooLargeError("exp_mech_sample_size: requires eps < eps2");
  double baseline = std::log(2.0 / eta) / (2.0 * ctx.eps1 * ctx.eps1);
  double prior_term =
      prior.is_uniform()
          ? uniform_prior_sample_term(prior.range_length(), eps, eta, alpha,
                                      ctx.ges_bound)
          : cauchy_prior_sample_term(std::fabs(ctx.root), ctx.eps2, eps, eta,
                                     alpha, ctx.ges_bound);
  double needed = std::max({baseline, static_cast<double>(n_eps2_eta), prior_term});
  return static_cast<std::size_t>(std::ceil(needed));
}

}  // namespace dpstat
