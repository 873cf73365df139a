#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/functionals.hpp"

namespace dpstat {

// Privacy level (alpha, delta).  delta = 0 means pure alpha-privacy.
class PrivacyParams {
 public:
  PrivacyParams(double alpha, double delta) : alpha_(alpha), delta_(delta) {
    if (!(alpha > 0.0))
      throw ValidationError("privacy.alpha", "must be positive");
    if (!(delta >= 0.0 && delta <= 1.0))
      throw ValidationError("privacy.delta", "must lie in [0, 1]");
  }

  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  bool pure() const { return delta_ == 0.0; }

  // Smoothing rate beta(alpha, delta) = alpha / (2 ln(1/delta)).
  double beta() const {
    if (!(delta_ > 0.0 && delta_ < 1.0))
      throw DeltaZeroError("beta(alpha, delta) undefined unless delta in (0, 1)");
    return alpha_ / (2.0 * std::log(1.0 / delta_));
  }

 private:
  double alpha_;
  double delta_;
};

struct SensitivityResult {
  double local;
  double smooth;
  double beta;
  enum class Method { exact, global_bound, oracle } method;
  std::size_t k_star;    // Hamming distance attaining the supremum (exact path)
  bool capped_at_range;  // true when the range cap R was the binding value

  static const char* method_name(Method m) {
    switch (m) {
      case Method::exact: return "exact";
      case Method::global_bound: return "global-bound";
      case Method::oracle: return "oracle";
    }
    return "?";
  }
};

// Worst-case change of T under one entry replacement, values confined to the
// sample's domain [L, U].
inline double local_sensitivity(const Functional& T, const SampleData& sample) {
  std::size_t n = sample.size();
  double L = sample.domain().lo, U = sample.domain().hi;
  switch (T.kind()) {
    case Functional::Kind::mean:
      return std::max(sample.sorted().back() - L, U - sample.sorted().front()) /
             static_cast<double>(n);
    case Functional::Kind::median:
    case Functional::Kind::quantile: {
      auto m = static_cast<long long>(detail::order_stat_index(n, T.p()));
      return std::max(
          sample.padded_order_stat(m) - sample.padded_order_stat(m - 1),
          sample.padded_order_stat(m + 1) - sample.padded_order_stat(m));
    }
    case Functional::Kind::trimmed_mean: {
      auto k = static_cast<long long>(detail::trim_count(n, T.trim()));
      auto nn = static_cast<long long>(n);
      double denom = static_cast<double>(nn - 2 * k);
      if (k == 0)
        return std::max(sample.sorted().back() - L, U - sample.sorted().front()) / denom;
      // Replacing by U swaps x_(k+1) out of the window for x_(n-k+1);
      // replacing by L swaps x_(n-k) for x_(k).
      double up = sample.padded_order_stat(nn - k + 1) - sample.padded_order_stat(k + 1);
      double down = sample.padded_order_stat(nn - k) - sample.padded_order_stat(k);
      return std::max(up, down) / denom;
    }
    case Functional::Kind::linear:
      return (T.g().sup_on(sample.domain()) - T.g().inf_on(sample.domain())) /
             static_cast<double>(n);
  }
  throw Error("unreachable");
}

// beta-smooth sensitivity sup_{D'} e^{-beta d(D, D')} LS(D').
//
// Order statistics admit the exact closed form
//   max_{k = 0..n} e^{-beta k} max_{t = 0..k+1} (x_{m+t} - x_{m+t-k-1})
// with x_i = L for i < 1 and x_i = U for i > n.  Mean, trimmed mean and
// linear functionals get their (already beta-smooth) global bounds.  The
// result is capped at the functional's declared range length R.
inline SensitivityResult smooth_sensitivity(const Functional& T,
                                            const SampleData& sample, double beta) {
  if (beta < 0.0) throw BetaNegativeError("smooth_sensitivity: beta must be >= 0");
  std::size_t n = sample.size();
  double local = local_sensitivity(T, sample);
  double smooth = 0.0;
  std::size_t k_star = 0;
  auto method = SensitivityResult::Method::exact;

  switch (T.kind()) {
    case Functional::Kind::median:
    case Functional::Kind::quantile: {
      auto m = static_cast<long long>(detail::order_stat_index(n, T.p()));
      double span = sample.domain().length();
      for (std::size_t k = 0; k <= n; ++k) {
        double decay = std::exp(-beta * static_cast<double>(k));
        if (decay * span <= smooth) break;  // no later k can win
        double widest = 0.0;
        for (std::size_t t = 0; t <= k + 1; ++t) {
          auto hi = m + static_cast<long long>(t);
          auto lo = hi - static_cast<long long>(k) - 1;
          widest = std::max(widest, sample.padded_order_stat(hi) -
                                        sample.padded_order_stat(lo));
        }
        if (decay * widest > smooth) {
          smooth = decay * widest;
          k_star = k;
        }
      }
      break;
    }
    case Functional::Kind::mean:
      smooth = sample.domain().length() / static_cast<double>(n);
      method = SensitivityResult::Method::global_bound;
      break;
    case Functional::Kind::trimmed_mean: {
      std::size_t k = detail::trim_count(n, T.trim());
      smooth = sample.domain().length() / static_cast<double>(n - 2 * k);
      method = SensitivityResult::Method::global_bound;
      break;
    }
    case Functional::Kind::linear:
      smooth = (T.g().sup_on(sample.domain()) - T.g().inf_on(sample.domain())) /
               static_cast<double>(n);
      method = SensitivityResult::Method::global_bound;
      break;
  }

  double cap = T.range_length();
  bool capped = smooth > cap;
  if (capped) smooth = cap;
  local = std::min(local, cap);
  return SensitivityResult{local, smooth, beta, method, k_star, capped};
}

// Grid-restricted local sensitivity profile by brute force: entry k holds the
// largest LS among datasets at Hamming distance exactly k from the sample,
// where modified entries take values from `grid` and LS itself is evaluated
// over single-entry grid replacements.  Exponential cost; n <= 7 and
// |grid| <= 12 enforced.
inline std::vector<double> oracle_local_sensitivity_profile(
    const Functional& T, const SampleData& sample, const std::vector<double>& grid) {
  std::size_t n = sample.size();
  if (n > 7 || grid.size() > 12)
    throw TooLargeError("oracle: supports n <= 7 and |grid| <= 12");
  if (grid.empty()) throw ValidationError("oracle.grid", "must be nonempty");
  for (double v : grid)
    if (!sample.domain().contains(v))
      throw ValidationError("oracle.grid", "grid value outside domain");

  std::vector<double> profile(n + 1, 0.0);
  std::vector<double> work = sample.origin();
  std::array<double, 8> buf{};

  auto eval_current = [&](std::size_t j, double v) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = work[i];
    buf[j] = v;
    std::sort(buf.begin(), buf.begin() + static_cast<long>(n));
    return evaluate_sorted(T, std::span<const double>(buf.data(), n),
                           sample.domain());
  };

  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t pos,
                                                           std::size_t dist) {
    if (pos == n) {
      double base = eval_current(0, work[0]);
      double ls = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        for (double v : grid)
          if (v != work[j])
            ls = std::max(ls, std::fabs(eval_current(j, v) - base));
      profile[dist] = std::max(profile[dist], ls);
      return;
    }
    double original = sample.origin()[pos];
    walk(pos + 1, dist);
    for (double v : grid) {
      if (v == original) continue;
      work[pos] = v;
      walk(pos + 1, dist + 1);
    }
    work[pos] = original;
  };
  walk(0, 0);
  return profile;
}

// Brute-force smooth sensitivity over the grid-restricted neighborhood.
inline double smooth_sensitivity_oracle(const Functional& T,
                                        const SampleData& sample, double beta,
                                        const std::vector<double>& grid) {
  if (beta < 0.0) throw BetaNegativeError("oracle: beta must be >= 0");
  std::vector<double> profile = oracle_local_sensitivity_profile(T, sample, grid);
  double best = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k)
    best = std::max(best,
                    std::exp(-beta * static_cast<double>(k)) * profile[k]);
  return best;
}

// High-probability smooth-sensitivity bound:
//   max{ 2 Gamma_n / n,  R exp(-beta (sqrt(n ln(2/eta) / 2) - 1)) }.
inline double smooth_sensitivity_bound(double range_len, double gamma_n,
                                       std::size_t n, double beta, double eta) {
  if (!(eta > 0.0 && eta < 1.0))
    throw EtaOutOfRangeError("smooth_sensitivity_bound: eta must lie in (0, 1)");
  if (beta < 0.0)
    throw BetaNegativeError("smooth_sensitivity_bound: beta must be >= 0");
  if (n == 0) throw ValidationError("bound.n", "must be positive");
  double nn = static_cast<double>(n);
  double term1 = 2.0 * gamma_n / nn;
  double term2 =
      range_len * std::exp(-beta * (std::sqrt(nn * std::log(2.0 / eta) / 2.0) - 1.0));
  return std::max(term1, term2);
}

// High-probability error bound for the smoothed-noise release:
//   |T(F_n) - T(F)|  +  (2 ln(1/eta) / alpha) *
//       max{ 2 Gamma_n / n,  R exp(-alpha sqrt(n ln(2/eta)) / (74 ln(1/delta))) }.
inline double release_error_bound(double nonprivate_err, double range_len,
                                  double gamma_n, std::size_t n,
                                  const PrivacyParams& params, double eta) {
  if (!(eta > 0.0 && eta < 0.25))
    throw EtaOutOfRangeError("release_error_bound: eta must lie in (0, 1/4)");
  if (!(params.delta() > 0.0 && params.delta() < 1.0))
    throw DeltaZeroError("release_error_bound: requires delta in (0, 1)");
  if (n == 0) throw ValidationError("bound.n", "must be positive");
  double nn = static_cast<double>(n);
  double term1 = 2.0 * gamma_n / nn;
  double term2 = range_len * std::exp(-params.alpha() * std::sqrt(nn * std::log(2.0 / eta)) /
                                      (74.0 * std::log(1.0 / params.delta())));
  double factor = 2.0 * std::log(1.0 / eta) / params.alpha();
  return nonprivate_err + factor * std::max(term1, term2);
}

// Contamination scale rho(n) = ceil(ln 2 / (2 alpha)) / n used by the
// two-point lower-bound construction; requires alpha in (0, ln 2 / 2].  The
// right endpoint is admitted so the degenerate ceiling-equals-1 case (rho =
// 1/n) is reachable.
inline double contamination_radius(std::size_t n, double alpha) {
  double limit = std::log(2.0) / 2.0;
  if (!(alpha > 0.0 && alpha <= limit))
    throw AlphaOutOfRangeError("contamination_radius: alpha must lie in (0, ln2/2]");
  if (n == 0) throw ValidationError("bound.n", "must be positive");
  double k = std::ceil(std::log(2.0) / (2.0 * alpha));
  return k / static_cast<double>(n);
}

}  // namespace dpstat
