#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/functionals.hpp"
#include "dpstat/mestimation.hpp"
#include "dpstat/rng.hpp"
#include "dpstat/sensitivity.hpp"

namespace dpstat {

// One standard-Laplace draw by inverse CDF (density 0.5 e^{-|z|}).
inline double laplace_draw(Rng& rng) {
  double s = rng.uniform() - 0.5;
  return s < 0.0 ? std::log(1.0 + 2.0 * s) : -std::log(1.0 - 2.0 * s);
}

struct PrivateEstimate {
  double value;
  double nonprivate_value;
  double noise_scale;  // NaN on the exponential path
  double noise_draw;   // recorded standard-Laplace z; NaN on the exponential path
  enum class Mechanism { smooth_laplace, exponential } mechanism;
  PrivacyParams params;
  std::uint64_t seed;

  static const char* mechanism_name(Mechanism m) {
    return m == Mechanism::smooth_laplace ? "smooth-laplace" : "exponential";
  }
};

// Release T(F_n) + SS_{beta(alpha, delta)} * (2 / alpha) * z with an injected
// noise value; the testing seam for zero-noise stubs.
inline PrivateEstimate smooth_sensitivity_release_with_noise(
    const Functional& T, const SampleData& sample, const PrivacyParams& params,
    double z, std::uint64_t seed) {
  SensitivityResult ss = smooth_sensitivity(T, sample, params.beta());
  double scale = ss.smooth * 2.0 / params.alpha();
  double nonprivate = evaluate(T, sample);
  return PrivateEstimate{nonprivate + scale * z,
                         nonprivate,
                         scale,
                         z,
                         PrivateEstimate::Mechanism::smooth_laplace,
                         params,
                         seed};
}

inline PrivateEstimate smooth_sensitivity_release(const Functional& T,
                                                  const SampleData& sample,
                                                  const PrivacyParams& params,
                                                  std::uint64_t seed) {
  Rng rng(seed);
  double z = laplace_draw(rng);
  return smooth_sensitivity_release_with_noise(T, sample, params, z, seed);
}

// Unnormalized mu(theta) * exp(-(n alpha / 2K) |Psi(F_n, theta)|).
inline double exp_mech_density(const PsiSpec& psi, const SampleData& sample,
                               const PrivacyParams& params,
                               const PriorSpec& prior, double theta) {
  double c = static_cast<double>(sample.size()) * params.alpha() / (2.0 * psi.K());
  return prior.density(theta) *
         std::exp(-c * std::fabs(big_psi(psi, sample, theta)));
}

// Tabulated density with a trapezoid CDF; inverse-CDF sampling interpolates
// linearly within cells.  The uniform prior is gridded over its interval; the
// Cauchy prior is gridded uniformly in u with theta = tan(u), under which
// prior times Jacobian is the constant 1/pi, so no mass is truncated.
class ExpMechTable {
 public:
  ExpMechTable(const PsiSpec& psi, const SampleData& sample,
               const PrivacyParams& params, const PriorSpec& prior,
               std::size_t grid_size) {
    if (!params.pure())
      throw ValidationError("privacy.delta",
                            "exponential mechanism requires delta = 0");
    if (grid_size < 64)
      throw ValidationError("grid_size", "must be >= 64");
    constexpr double pi = 3.14159265358979323846;
    double c =
        static_cast<double>(sample.size()) * params.alpha() / (2.0 * psi.K());
    tan_space_ = !prior.is_uniform();
    pos_.resize(grid_size);
    dens_.resize(grid_size);
    double lo = tan_space_ ? -pi / 2.0 : prior.lo();
    double hi = tan_space_ ? pi / 2.0 : prior.hi();
    for (std::size_t i = 0; i < grid_size; ++i) {
      double p = lo + (hi - lo) * static_cast<double>(i) /
                          static_cast<double>(grid_size - 1);
      double theta = tan_space_ ? std::tan(p) : p;
      double base = tan_space_ ? 1.0 / pi : 1.0 / prior.range_length();
      pos_[i] = p;
      dens_[i] = base * std::exp(-c * std::fabs(big_psi(psi, sample, theta)));
    }
    cum_.resize(grid_size, 0.0);
    for (std::size_t i = 0; i + 1 < grid_size; ++i)
      cum_[i + 1] = cum_[i] + (dens_[i] + dens_[i + 1]) / 2.0 * (pos_[i + 1] - pos_[i]);
    total_ = cum_.back();
    for (std::size_t i = 0; i + 1 < grid_size; ++i)
      if (cum_[i + 1] - cum_[i] > 0.5 * total_)
        throw GridTooCoarseError(
            "exponential mechanism: one grid cell holds more than half the "
            "mass; increase grid_size");
  }

  double total_mass() const { return total_; }

  // Normalized density at grid index i, in theta space.
  double normalized_density(std::size_t i) const {
    double d = dens_[i] / total_;
    if (!tan_space_) return d;
    double t = std::tan(pos_[i]);
    return d / (1.0 + t * t);  // du/dtheta
  }

  double grid_theta(std::size_t i) const {
    return tan_space_ ? std::tan(pos_[i]) : pos_[i];
  }

  std::size_t size() const { return pos_.size(); }

  double sample_value(double u01) const {
    double target = u01 * total_;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    std::size_t cell = static_cast<std::size_t>(it - cum_.begin());
    if (cell == 0) cell = 1;
    if (cell >= cum_.size()) cell = cum_.size() - 1;
    double mass = cum_[cell] - cum_[cell - 1];
    double t = mass > 0.0 ? (target - cum_[cell - 1]) / mass : 0.5;
    double p = pos_[cell - 1] + t * (pos_[cell] - pos_[cell - 1]);
    return tan_space_ ? std::tan(p) : p;
  }

 private:
  bool tan_space_;
  std::vector<double> pos_;   // u for the Cauchy prior, theta otherwise
  std::vector<double> dens_;  // integrand at pos_
  std::vector<double> cum_;   // cumulative mass up to pos_[i]
  double total_;
};

inline PrivateEstimate exp_mech_sample(const PsiSpec& psi,
                                       const SampleData& sample,
                                       const PrivacyParams& params,
                                       const PriorSpec& prior,
                                       std::uint64_t seed,
                                       std::size_t grid_size = 1024) {
  ExpMechTable table(psi, sample, params, prior, grid_size);
  Rng rng(seed);
  double value = table.sample_value(rng.uniform());
  double tol = 1e-9 * (1.0 + sample.domain().length());
  double nonprivate = solve_m_estimator(psi, sample, tol);
  double nan = std::numeric_limits<double>::quiet_NaN();
  return PrivateEstimate{value,
                         nonprivate,
                         nan,
                         nan,
                         PrivateEstimate::Mechanism::exponential,
                         params,
                         seed};
}

// Guarantee for datasets at Hamming distance k: (k alpha, k e^{(k-1) alpha}
// delta), with the vacuous delta >= 1 case clamped to 1.
inline PrivacyParams group_privacy_factor(const PrivacyParams& params,
                                          std::size_t k) {
  if (k < 1) throw ValidationError("group.k", "must be >= 1");
  double kd = static_cast<double>(k);
  double delta =
      std::min(1.0, kd * std::exp((kd - 1.0) * params.alpha()) * params.delta());
  return PrivacyParams(kd * params.alpha(), delta);
}

// A named release procedure paired with its non-private counterpart.  bind()
// precomputes per-dataset state (sensitivity, density table) so repeated
// releases on one dataset cost only the noise draw; the audit runs 1e5 of
// them per dataset.
struct Mechanism {
  std::string name;
  double alpha;  // NaN for the non-private plugin
  double delta;
  std::function<double(const SampleData&)> plugin;
  std::function<std::function<double(std::uint64_t)>(const SampleData&)> bind;

  double release(const SampleData& sample, std::uint64_t seed) const {
    return bind(sample)(seed);
  }
};

inline Mechanism make_smooth_laplace(const Functional& T,
                                     const PrivacyParams& params) {
  (void)params.beta();  // reject delta outside (0, 1) up front
  return Mechanism{
      "smooth-laplace(" + T.describe() + ")", params.alpha(), params.delta(),
      [T](const SampleData& s) { return evaluate(T, s); },
      [T, params](const SampleData& s) {
        SensitivityResult ss = smooth_sensitivity(T, s, params.beta());
        double scale = ss.smooth * 2.0 / params.alpha();
        double base = evaluate(T, s);
        return std::function<double(std::uint64_t)>(
            [base, scale](std::uint64_t seed) {
              Rng rng(seed);
              return base + scale * laplace_draw(rng);
            });
      }};
}

inline Mechanism make_exp_mech(const PsiSpec& psi, const PrivacyParams& params,
                               const PriorSpec& prior,
                               std::size_t grid_size = 1024) {
  if (!params.pure())
    throw ValidationError("privacy.delta",
                          "exponential mechanism requires delta = 0");
  return Mechanism{
      "exponential(" + psi.describe() + ", " + prior.describe() + ")",
      params.alpha(), 0.0,
      [psi](const SampleData& s) {
        return solve_m_estimator(psi, s, 1e-9 * (1.0 + s.domain().length()));
      },
      [psi, params, prior, grid_size](const SampleData& s) {
        auto table = std::make_shared<ExpMechTable>(psi, s, params, prior,
                                                    grid_size);
        return std::function<double(std::uint64_t)>(
            [table](std::uint64_t seed) {
              Rng rng(seed);
              return table->sample_value(rng.uniform());
            });
      }};
}

// Deliberately non-private identity release; the audit's counterexample and
// the harness null case.
inline Mechanism make_plugin(const Functional& T) {
  double nan = std::numeric_limits<double>::quiet_NaN();
  return Mechanism{
      "plugin(" + T.describe() + ")", nan, nan,
      [T](const SampleData& s) { return evaluate(T, s); },
      [T](const SampleData& s) {
        double v = evaluate(T, s);
        return std::function<double(std::uint64_t)>(
            [v](std::uint64_t) { return v; });
      }};
}

}  // namespace dpstat
