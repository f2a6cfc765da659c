// Running estimators over per-unit pseudo-outcomes, with fixed-time
// intervals, asymptotic confidence sequences, the plug-in estimator and
// arm-specific survival curves.
#pragma once

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "ase/nuisance.hpp"
#include "ase/survival_core.hpp"

namespace ase {

/// Streaming mean and 1/R variance per horizon (Welford).
class AseState {
 public:
  explicit AseState(std::size_t horizons = 0, bool keep_log = false)
      : sum_(horizons, 0.0), mean_(horizons, 0.0), m2_(horizons, 0.0), keep_log_(keep_log) {}

  void update(std::span<const double> phi) {
    if (sum_.empty()) {
      sum_.assign(phi.size(), 0.0);
      mean_.assign(phi.size(), 0.0);
      m2_.assign(phi.size(), 0.0);
    }
    if (phi.size() != sum_.size()) throw InvariantError("ase_update: pseudo-outcome length mismatch");
    for (double v : phi) {
      if (!std::isfinite(v)) throw std::domain_error("ase_update: non-finite pseudo-outcome");
    }
    ++count_;
    const double n = static_cast<double>(count_);
    for (std::size_t t = 0; t < phi.size(); ++t) {
      sum_[t] += phi[t];
      const double d = phi[t] - mean_[t];
      mean_[t] += d / n;
      m2_[t] += d * (phi[t] - mean_[t]);
    }
    if (keep_log_) log_.emplace_back(phi.begin(), phi.end());
  }

  long count() const noexcept { return count_; }
  std::size_t horizons() const noexcept { return sum_.size(); }

  /// sum / R per horizon.
  std::vector<double> estimate() const {
    if (count_ < 1) throw std::logic_error("estimate undefined before the first update");
    std::vector<double> out(sum_);
    for (auto& v : out) v /= static_cast<double>(count_);
    return out;
  }

  /// (1/R) sum (phi - mean)^2, floored at zero.
  std::vector<double> variance() const {
    if (count_ < 2) throw std::logic_error("variance_estimate requires at least two rounds");
    std::vector<double> out(m2_);
    for (auto& v : out) v = std::max(0.0, v / static_cast<double>(count_));
    return out;
  }

  const std::vector<std::vector<double>>& log() const noexcept { return log_; }

 private:
  std::vector<double> sum_;
  std::vector<double> mean_;
  std::vector<double> m2_;
  long count_ = 0;
  bool keep_log_;
  std::vector<std::vector<double>> log_;
};

inline void ase_update(AseState& state, std::span<const double> phi) { state.update(phi); }
inline std::vector<double> variance_estimate(const AseState& state) { return state.variance(); }

struct ConfidenceOutput {
  enum class Kind { FixedTime, AsympCs };
  std::vector<double> point;
  std::vector<double> half_width;
  Kind kind = Kind::FixedTime;
  double alpha = 0.05;
  double rho = std::numeric_limits<double>::quiet_NaN();

  double lower(std::size_t t) const { return point[t] - half_width[t]; }
  double upper(std::size_t t) const { return point[t] + half_width[t]; }
  bool covers(std::size_t t, double truth) const { return lower(t) <= truth && truth <= upper(t); }
};

/// Standard normal quantile.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double fixed_time_radius(long r, double v, double alpha) {
  return normal_quantile(1.0 - alpha / 2.0) * std::sqrt(v / static_cast<double>(r));
}

inline ConfidenceOutput fixed_time_ci(const AseState& state, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  ConfidenceOutput out;
  out.point = state.estimate();
  out.kind = ConfidenceOutput::Kind::FixedTime;
  out.alpha = alpha;
  const auto v = state.variance();
  const double z = normal_quantile(1.0 - alpha / 2.0);
  for (double vt : v) out.half_width.push_back(z * std::sqrt(vt / static_cast<double>(state.count())));
  return out;
}

/// sqrt( 2 (R V rho^2 + 1) / (R^2 rho^2) * log( sqrt(R V rho^2 + 1) / alpha ) ).
inline double cs_radius(long r, double v, double alpha, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("cs_radius: rho must be > 0");
  if (r < 1) throw std::invalid_argument("cs_radius: need R >= 1");
  const double rr = static_cast<double>(r);
  const double a = rr * v * rho * rho + 1.0;
  return std::sqrt(2.0 * a / (rr * rr * rho * rho) * std::log(std::sqrt(a) / alpha));
}

inline ConfidenceOutput asymp_cs(const AseState& state, double alpha, double rho) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  ConfidenceOutput out;
  out.point = state.estimate();
  out.kind = ConfidenceOutput::Kind::AsympCs;
  out.alpha = alpha;
  out.rho = rho;
  const auto v = state.count() >= 2 ? state.variance() : std::vector<double>(state.horizons(), 0.0);
  for (double vt : v) out.half_width.push_back(cs_radius(state.count(), vt, alpha, rho));
  return out;
}

/// sqrt( (-2 log alpha + log(-2 log alpha + 1)) / R ).
inline double rho_star(long r, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("rho_star: alpha must lie in (0,1)");
  if (r < 1) throw std::invalid_argument("rho_star: need R >= 1");
  const double m = -2.0 * std::log(alpha);
  return std::sqrt((m + std::log(m + 1.0)) / static_cast<double>(r));
}

/// Mean over the covariates of S_t(x,1) - S_t(x,0) under a fitted model.
inline std::vector<double> plugin_estimate(std::span<const std::vector<double>> covariates, const HazardModel& model,
                                           std::span<const double> weights = {}) {
  if (covariates.empty()) throw std::invalid_argument("plugin_estimate: empty history");
  if (!weights.empty() && weights.size() != covariates.size()) throw InvariantError("plugin_estimate: weight length");
  std::vector<double> out;
  double total = 0.0;
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    const double w = weights.empty() ? 1.0 : weights[k];
    const auto s1 = event_survival_path(model.predict(covariates[k], 1));
    const auto s0 = event_survival_path(model.predict(covariates[k], 0));
    if (out.empty()) out.assign(s1.size(), 0.0);
    for (std::size_t t = 0; t < s1.size(); ++t) out[t] += w * (s1[t] - s0[t]);
    total += w;
  }
  for (auto& v : out) v /= total;
  return out;
}

inline std::vector<double> plugin_estimate(std::span<const Observation> history, const FittedNuisance& fitted) {
  std::vector<std::vector<double>> xs;
  xs.reserve(history.size());
  for (const auto& o : history) xs.push_back(o.x);
  return plugin_estimate(xs, *fitted.model);
}

/// Arm-specific survival curves from the augmented pseudo-outcome of each arm.
class ApoCurveState {
 public:
  explicit ApoCurveState(std::size_t horizons = 0) : arm_{AseState(horizons), AseState(horizons)}, diff_(horizons) {}

  /// pi is the probability of arm 1 used for this unit.
  void update(const Observation& obs, double pi, const NuisanceAtArm& nu0, const NuisanceAtArm& nu1,
              TieConvention conv) {
    const auto p0 = apo_pseudo_outcome(obs, 0, 1.0 - pi, nu0, conv);
    const auto p1 = apo_pseudo_outcome(obs, 1, pi, nu1, conv);
    arm_[0].update(p0);
    arm_[1].update(p1);
    std::vector<double> d(p0.size());
    for (std::size_t t = 0; t < d.size(); ++t) d[t] = p1[t] - p0[t];
    diff_.update(d);
  }

  const AseState& arm(int a) const { return arm_[a]; }
  /// Running estimate of tau from the same decomposition.
  const AseState& difference() const { return diff_; }

 private:
  AseState arm_[2];
  AseState diff_;
};

struct BatchConfig {
  int batch_size = 100;
  long burn_in = 0;
  double initial_policy = 0.5;

  void check() const {
    if (batch_size < 1) throw InvariantError("batch size must be >= 1");
    if (burn_in < 0) throw InvariantError("burn-in must be >= 0");
    if (!(initial_policy > 0.0 && initial_policy < 1.0)) throw InvariantError("initial policy must lie in (0,1)");
  }
};

}  // namespace ase
