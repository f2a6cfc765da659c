// Variance targets and treatment-allocation policies.
//
// Per-unit rules (A-optimal, censoring-agnostic Neyman) work pointwise in x.
// The D- and E-optimal rules couple covariates through Sigma_eff and are
// solved as fixed points over a weighted covariate grid.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ase/survival_core.hpp"

namespace ase {

struct TruncationSchedule {
  enum class Mode { ConstantClip, Growing };
  Mode mode = Mode::ConstantClip;
  double alpha_clip = 0.05;
  double k0 = 2.0;
  double exponent = 0.2;
  double k_cap = 100.0;

  void check() const {
    if (mode == Mode::ConstantClip) {
      if (!(alpha_clip > 0.0 && alpha_clip < 0.5)) throw InvariantError("alpha_clip must lie in (0, 0.5)");
    } else {
      if (!(k0 >= 2.0)) throw InvariantError("k0 must be >= 2");
      if (!(exponent > 0.0 && exponent < 0.25)) throw InvariantError("growth exponent must lie in (0, 0.25)");
      if (!(k_cap >= k0)) throw InvariantError("k_cap must be >= k0");
    }
  }

  /// k_r; probabilities are clipped to [1/k_r, 1 - 1/k_r].
  double k(long r) const {
    if (mode == Mode::ConstantClip) return 1.0 / alpha_clip;
    return std::min(k_cap, k0 + std::pow(static_cast<double>(std::max(r, 1L)), exponent));
  }
};

struct PolicyEvaluation {
  double raw = 0.5;
  double truncated = 0.5;
  double k_r_used = 2.0;
};

enum class DesignCriterion { AOpt, DOpt, EOpt, NeymanNaive, Uniform };

inline std::string to_string(DesignCriterion c) {
  switch (c) {
    case DesignCriterion::AOpt: return "a";
    case DesignCriterion::DOpt: return "d";
    case DesignCriterion::EOpt: return "e";
    case DesignCriterion::NeymanNaive: return "neyman";
    case DesignCriterion::Uniform: return "uniform";
  }
  return "?";
}

inline DesignCriterion design_criterion_from_string(const std::string& s) {
  for (auto c : {DesignCriterion::AOpt, DesignCriterion::DOpt, DesignCriterion::EOpt, DesignCriterion::NeymanNaive,
                 DesignCriterion::Uniform}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown design criterion '" + s + "'");
}

/// V_a = sum_t S_t^2 sum_{i<=t} lambda^S_i / (S_i G_{i-1}).
inline double variance_target(const NuisanceAtArm& nu, TieConvention conv) {
  const auto g = censoring_survival_path(nu, conv);
  double s = 1.0;
  double inner = 0.0;
  double v = 0.0;
  for (int i = 0; i <= nu.t_max(); ++i) {
    s *= 1.0 - nu[i].event;
    const double denom = s * g[static_cast<std::size_t>(i)];
    if (nu[i].event > 0.0) {
      if (!(denom > 0.0)) throw OverlapError("survival overlap violated in variance target", i);
      inner += nu[i].event / denom;
    }
    v += s * s * inner;
  }
  return v;
}

struct VariancePair {
  double v0 = 0.0;
  double v1 = 0.0;
};

inline VariancePair variance_target(const NuisanceAtArm& nu0, const NuisanceAtArm& nu1, TieConvention conv) {
  return {variance_target(nu0, conv), variance_target(nu1, conv)};
}

/// sum_t S_t (1 - S_t): the target when censoring is ignored.
inline double neyman_naive_target(const NuisanceAtArm& nu) {
  double v = 0.0;
  for (double s : event_survival_path(nu)) v += s * (1.0 - s);
  return v;
}

/// sqrt(V1) / (sqrt(V1) + sqrt(V0)); 0.5 when both vanish.
inline double a_optimal_prob(double v0, double v1) {
  if (!(v0 >= 0.0 && v1 >= 0.0)) throw std::invalid_argument("a_optimal_prob: variances must be nonnegative");
  const double r1 = std::sqrt(v1);
  const double r0 = std::sqrt(v0);
  if (r0 + r1 == 0.0) return 0.5;
  return r1 / (r1 + r0);
}

inline PolicyEvaluation truncate(double raw, long r, const TruncationSchedule& sched) {
  if (!(raw >= 0.0 && raw <= 1.0)) throw std::invalid_argument("truncate: raw probability outside [0,1]");
  const double k = sched.k(r);
  const double lo = 1.0 / k;
  return {raw, std::clamp(raw, lo, 1.0 - lo), k};
}

/// Clip to [alpha, 1 - alpha].
inline double clip(double p, double alpha) { return std::clamp(p, alpha, 1.0 - alpha); }

/// Weighted covariate grid with per-point arm covariances Sigma_a(x) and the
/// between-x term E[b b^T].
struct PolicyProblem {
  std::vector<double> weights;
  std::vector<Eigen::MatrixXd> sigma0;
  std::vector<Eigen::MatrixXd> sigma1;
  Eigen::MatrixXd b_outer;

  std::size_t size() const noexcept { return weights.size(); }
  Eigen::Index dim() const noexcept { return b_outer.rows(); }

  void check() const {
    if (weights.empty()) throw InvariantError("policy problem has no grid points");
    if (sigma0.size() != weights.size() || sigma1.size() != weights.size()) {
      throw InvariantError("policy problem arrays disagree in length");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InvariantError("negative grid weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvariantError("grid weights must sum to 1");
  }
};

/// E[Sigma_1/pi + Sigma_0/(1-pi)] + E[b b^T].
inline Eigen::MatrixXd sigma_eff(std::span<const double> pi, const PolicyProblem& p) {
  if (pi.size() != p.size()) throw InvariantError("sigma_eff: policy length differs from grid");
  Eigen::MatrixXd out = p.b_outer;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(pi[k] > 0.0 && pi[k] < 1.0)) throw std::invalid_argument("sigma_eff: policy must lie in (0,1)");
    out.noalias() += p.weights[k] * (p.sigma1[k] / pi[k] + p.sigma0[k] / (1.0 - pi[k]));
  }
  return 0.5 * (out + out.transpose());
}

/// Pointwise clipped A-optimal policy on the grid (V_a = tr Sigma_a).
inline std::vector<double> a_optimal_policy(const PolicyProblem& p, double alpha) {
  std::vector<double> pi(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) pi[k] = clip(a_optimal_prob(p.sigma0[k].trace(), p.sigma1[k].trace()), alpha);
  return pi;
}

struct FixedPointResult {
  std::vector<double> policy;
  Eigen::MatrixXd weight;  // W with Q_a(x) = tr(W Sigma_a(x)) at the returned policy
  int iterations = 0;
  double residual = 0.0;  // ||T(pi) - pi||_inf at the returned policy
  bool converged = false;
  bool damped = false;
};

inline constexpr double kSigmaEffRidge = 1e-10;

/// Weight matrix for the D criterion: (Sigma_eff + ridge I)^-1.
inline Eigen::MatrixXd d_weight(const Eigen::MatrixXd& s_eff) {
  const Eigen::MatrixXd reg = s_eff + kSigmaEffRidge * Eigen::MatrixXd::Identity(s_eff.rows(), s_eff.cols());
  return reg.ldlt().solve(Eigen::MatrixXd::Identity(s_eff.rows(), s_eff.cols()));
}

/// Weight matrix for the E criterion: v v^T with v the leading unit eigenvector.
inline Eigen::MatrixXd e_weight(const Eigen::MatrixXd& s_eff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s_eff);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen decomposition of Sigma_eff failed");
  const Eigen::VectorXd v = es.eigenvectors().col(s_eff.rows() - 1);
  return v * v.transpose();
}

/// Policy implied by a weight matrix: clip(sqrt(Q1)/(sqrt(Q1)+sqrt(Q0))) with Q_a = tr(W Sigma_a).
inline double weighted_prob(const Eigen::MatrixXd& w, const Eigen::MatrixXd& s0, const Eigen::MatrixXd& s1,
                            double alpha) {
  const double q0 = std::max(0.0, (w * s0).trace());
  const double q1 = std::max(0.0, (w * s1).trace());
  return clip(a_optimal_prob(q0, q1), alpha);
}

namespace detail {

template <class WeightFn>
FixedPointResult solve_fixed_point(const PolicyProblem& p, double alpha, int max_iters, double tol, WeightFn weight_of) {
  p.check();
  FixedPointResult res;
  res.policy = a_optimal_policy(p, alpha);
  double prev_residual = std::numeric_limits<double>::infinity();
  int rises = 0;
  for (int it = 0; it <= max_iters; ++it) {
    res.weight = weight_of(sigma_eff(res.policy, p));
    std::vector<double> next(p.size());
    double r = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      next[k] = weighted_prob(res.weight, p.sigma0[k], p.sigma1[k], alpha);
      r = std::max(r, std::abs(next[k] - res.policy[k]));
    }
    res.residual = r;
    res.iterations = it;
    if (r <= tol) {
      res.converged = true;
      return res;
    }
    if (it == max_iters) break;
    // Switch on damping once the undamped map stops contracting.
    if (!res.damped && r >= prev_residual && ++rises >= 2) res.damped = true;
    prev_residual = r;
    for (std::size_t k = 0; k < p.size(); ++k) {
      res.policy[k] = res.damped ? 0.5 * res.policy[k] + 0.5 * next[k] : next[k];
    }
  }
  return res;
}

}  // namespace detail

/// Fixed point of pi(x) = clip(sqrt(Q1)/(sqrt(Q1)+sqrt(Q0))), Q_a = tr(Sigma_eff^-1 Sigma_a(x)),
/// started from the A-optimal policy.
inline FixedPointResult d_optimal_policy(const PolicyProblem& p, double alpha, int max_iters = 500,
                                         double tol = 1e-10) {
  return detail::solve_fixed_point(p, alpha, max_iters, tol, [](const Eigen::MatrixXd& s) { return d_weight(s); });
}

/// As d_optimal_policy with Q_a = v*^T Sigma_a(x) v*, v* the leading eigenvector of Sigma_eff.
inline FixedPointResult e_optimal_policy(const PolicyProblem& p, double alpha, int max_iters = 500,
                                         double tol = 1e-10) {
  return detail::solve_fixed_point(p, alpha, max_iters, tol, [](const Eigen::MatrixXd& s) { return e_weight(s); });
}

/// sqrt(g) / (sqrt(kappa) + sqrt(g)).
inline double censoring_ratio_closed_form(double kappa, double g) {
  if (!(kappa > 0.0 && g > 0.0)) throw std::invalid_argument("censoring_ratio_closed_form: kappa and g must be > 0");
  return std::sqrt(g) / (std::sqrt(kappa) + std::sqrt(g));
}

}  // namespace ase
