/**
 * Discrete-time survival algebra.
 *
 * Time runs over the grid {0, ..., t_max}. For one (covariate, arm) cell the
 * nuisance is a vector of observed hazard pairs (event, censoring). From it we
 * derive the event survival S_t, the censoring survival G_{t-1}, the
 * inverse-probability-of-censoring martingale term xi, the exact law of the
 * observed (time, indicator) pair, and the efficient-influence-function
 * pseudo-outcomes used by the estimators.
 *
 * All products are accumulated in linear probability space. Under the overlap
 * bound 1 - lambda >= c this stays well clear of underflow for t_max up to a
 * few hundred when c >= 0.1; the shipped workloads use t_max <= 20.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ase {

/// Whether the event indicator is 1(T <= C) (ties) or 1(T < C) (no ties).
///
/// Under Ties the censoring hazard is the observed (crude) hazard and
/// G_{t-1} = prod (1 - lambda_g / (1 - lambda_s)). Under NoTies the censoring
/// hazard is the net hazard P(C = t | C >= t) and G_{t-1} = prod (1 - lambda_g).
enum class TieConvention { Ties, NoTies };

/// Observed time for units still event- and censoring-free at t_max.
inline constexpr int kPastHorizon = std::numeric_limits<int>::max();

class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a survival or censoring product reaches zero where it is used
/// as a denominator. Carries the offending time index.
class OverlapError : public std::domain_error {
 public:
  OverlapError(const std::string& what, int time_index)
      : std::domain_error(what + " (time index " + std::to_string(time_index) + ")"),
        time_index_(time_index) {}
  int time_index() const noexcept { return time_index_; }

 private:
  int time_index_;
};

struct TimeHorizon {
  int t_max = 0;

  explicit TimeHorizon(int tm = 0) : t_max(tm) {
    if (tm < 0) throw InvariantError("t_max must be >= 0");
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(t_max) + 1; }
};

struct HazardPair {
  double event = 0.0;   // lambda^S_t
  double censor = 0.0;  // lambda^G_t
};

/// Hazards for one (covariate, arm) cell, indexed by time 0..t_max.
struct NuisanceAtArm {
  std::vector<HazardPair> hazards;

  NuisanceAtArm() = default;
  explicit NuisanceAtArm(std::vector<HazardPair> h) : hazards(std::move(h)) {}

  int t_max() const noexcept { return static_cast<int>(hazards.size()) - 1; }
  std::size_t size() const noexcept { return hazards.size(); }
  const HazardPair& operator[](int t) const { return hazards[static_cast<std::size_t>(t)]; }

  static NuisanceAtArm constant(int t_max, double event, double censor) {
    return NuisanceAtArm(std::vector<HazardPair>(static_cast<std::size_t>(t_max) + 1, {event, censor}));
  }
};

struct Observation {
  std::vector<double> x;
  int arm = 0;
  int t_tilde = kPastHorizon;
  bool event = false;  // meaningless when t_tilde == kPastHorizon
  long round = 1;

  bool past_horizon() const noexcept { return t_tilde == kPastHorizon; }
};

struct OutcomeAtom {
  int t_tilde = kPastHorizon;
  bool event = false;
  double prob = 0.0;
};

/// Per-horizon pseudo-outcome, index t in 0..t_max.
using EifVector = std::vector<double>;

namespace detail {

inline bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace detail

/// Checks the hazard-pair invariants. Under Ties the two hazards describe
/// disjoint observed events, so they must also sum to at most one.
inline void validate(const NuisanceAtArm& nu, TieConvention conv) {
  if (nu.hazards.empty()) throw InvariantError("nuisance has no time points");
  for (int t = 0; t <= nu.t_max(); ++t) {
    const auto& h = nu[t];
    if (!detail::is_probability(h.event) || !detail::is_probability(h.censor)) {
      throw InvariantError("hazard outside [0,1] at time " + std::to_string(t));
    }
    if (conv == TieConvention::Ties && h.event + h.censor > 1.0 + 1e-12) {
      throw InvariantError("event + censoring hazard exceeds 1 at time " + std::to_string(t));
    }
  }
}

/// S_t = prod_{i<=t} (1 - lambda^S_i), with S_{-1} = 1.
inline double event_survival(const NuisanceAtArm& nu, int t) {
  if (t < -1 || t > nu.t_max()) throw std::out_of_range("event_survival: time outside [-1, t_max]");
  double s = 1.0;
  for (int i = 0; i <= t; ++i) s *= 1.0 - nu[i].event;
  return s;
}

/// S_0..S_{t_max}.
inline std::vector<double> event_survival_path(const NuisanceAtArm& nu) {
  std::vector<double> out(nu.size());
  double s = 1.0;
  for (int i = 0; i <= nu.t_max(); ++i) {
    s *= 1.0 - nu[i].event;
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

/// One factor of the censoring-survival product at time i.
inline double censoring_factor(const HazardPair& h, TieConvention conv, int i) {
  if (conv == TieConvention::NoTies) return 1.0 - h.censor;
  if (!(h.event < 1.0)) throw OverlapError("censoring factor undefined: event hazard is 1", i);
  return 1.0 - h.censor / (1.0 - h.event);
}

/// G_{i-1} for i = 0..t_max, i.e. the probability of being uncensored through
/// i-1. Throws OverlapError naming the first non-positive factor.
inline std::vector<double> censoring_survival_path(const NuisanceAtArm& nu, TieConvention conv) {
  std::vector<double> out(nu.size());
  double g = 1.0;
  for (int i = 0; i <= nu.t_max(); ++i) {
    out[static_cast<std::size_t>(i)] = g;
    if (i < nu.t_max()) {
      const double f = censoring_factor(nu[i], conv, i);
      if (!(f > 0.0)) throw OverlapError("censoring overlap violated", i);
      g *= f;
    }
  }
  return out;
}

/// G_{t-1} = prod_{i<t} factor_i; equals 1 at t = 0.
inline double censoring_survival(const NuisanceAtArm& nu, int t, TieConvention conv) {
  if (t < 0 || t > nu.t_max()) throw std::out_of_range("censoring_survival: time outside [0, t_max]");
  double g = 1.0;
  for (int i = 0; i < t; ++i) {
    const double f = censoring_factor(nu[i], conv, i);
    if (!(f > 0.0)) throw OverlapError("censoring overlap violated", i);
    g *= f;
  }
  return g;
}

/// Running sums xi_0..xi_{t_max} of
///   [1(T~ = i, D = 1) - 1(T~ >= i) lambda^S_i] / (S_i G_{i-1}).
/// Units past the horizon are at risk at every i with no event.
inline std::vector<double> xi_path(const Observation& obs, const NuisanceAtArm& nu, TieConvention conv) {
  const auto g = censoring_survival_path(nu, conv);
  std::vector<double> out(nu.size());
  double s = 1.0;
  double acc = 0.0;
  for (int i = 0; i <= nu.t_max(); ++i) {
    s *= 1.0 - nu[i].event;
    const double denom = s * g[static_cast<std::size_t>(i)];
    if (!(denom > 0.0)) throw OverlapError("survival overlap violated in xi denominator", i);
    const bool at_risk = obs.t_tilde >= i;
    const bool fired = obs.t_tilde == i && obs.event;
    acc += ((fired ? 1.0 : 0.0) - (at_risk ? nu[i].event : 0.0)) / denom;
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

inline double xi(const Observation& obs, const NuisanceAtArm& nu, int t, TieConvention conv) {
  if (t < 0 || t > nu.t_max()) throw std::out_of_range("xi: time outside [0, t_max]");
  return xi_path(obs, nu, conv)[static_cast<std::size_t>(t)];
}

/// Exact law of (T~, D) for one cell: per time an event atom and a censoring
/// atom, then one past-horizon atom. Always 2(t_max+1)+1 atoms.
inline std::vector<OutcomeAtom> outcome_atoms(const NuisanceAtArm& nu, TieConvention conv) {
  validate(nu, conv);
  std::vector<OutcomeAtom> atoms;
  atoms.reserve(2 * nu.size() + 1);
  double at_risk = 1.0;
  for (int i = 0; i <= nu.t_max(); ++i) {
    const auto& h = nu[i];
    double p_event = 0.0;
    double p_censor = 0.0;
    if (conv == TieConvention::Ties) {
      p_event = h.event;
      p_censor = h.censor;
    } else {
      // Net hazards: a tie T = C = i is recorded as an event.
      p_event = h.event;
      p_censor = (1.0 - h.event) * h.censor;
    }
    atoms.push_back({i, true, at_risk * p_event});
    atoms.push_back({i, false, at_risk * p_censor});
    at_risk *= std::max(0.0, 1.0 - p_event - p_censor);
  }
  atoms.push_back({kPastHorizon, false, at_risk});
  return atoms;
}

/// Inverse-CDF draw from outcome_atoms given a uniform u in [0,1).
inline OutcomeAtom sample_outcome(const NuisanceAtArm& nu, TieConvention conv, double u) {
  const auto atoms = outcome_atoms(nu, conv);
  double cdf = 0.0;
  for (const auto& a : atoms) {
    cdf += a.prob;
    if (u < cdf) return a;
  }
  return atoms.back();
}

namespace detail {

inline void require_interior(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument(std::string(what) + " must lie strictly inside (0,1)");
}

}  // namespace detail

/// Non-centred EIF for tau_t at every horizon:
///   S_t(x,1) - S_t(x,0) - (a - pi) / (pi (1 - pi)) * xi_t * S_t(x,a).
inline EifVector eif_pseudo_outcome(const Observation& obs, double pi_x, const NuisanceAtArm& nu0,
                                    const NuisanceAtArm& nu1, TieConvention conv) {
  detail::require_interior(pi_x, "treatment probability");
  if (nu0.size() != nu1.size()) throw InvariantError("arm nuisances disagree on t_max");
  const auto s0 = event_survival_path(nu0);
  const auto s1 = event_survival_path(nu1);
  const auto& own = obs.arm == 1 ? nu1 : nu0;
  const auto& s_own = obs.arm == 1 ? s1 : s0;
  const auto xis = xi_path(obs, own, conv);
  const double weight = (static_cast<double>(obs.arm) - pi_x) / (pi_x * (1.0 - pi_x));
  EifVector phi(nu0.size());
  for (std::size_t t = 0; t < phi.size(); ++t) {
    phi[t] = s1[t] - s0[t] - weight * xis[t] * s_own[t];
  }
  return phi;
}

/// Non-centred EIF for the arm-a survival curve:
///   S_t(x,a) - 1(A = a) / pi_a * S_t(x,a) * xi_t.
/// Differencing the two arms reproduces eif_pseudo_outcome exactly.
inline EifVector apo_pseudo_outcome(const Observation& obs, int arm, double pi_a, const NuisanceAtArm& nu,
                                    TieConvention conv) {
  detail::require_interior(pi_a, "arm probability");
  const auto s = event_survival_path(nu);
  EifVector phi(s);
  if (obs.arm != arm) return phi;
  const auto xis = xi_path(obs, nu, conv);
  for (std::size_t t = 0; t < phi.size(); ++t) phi[t] -= s[t] * xis[t] / pi_a;
  return phi;
}

}  // namespace ase
