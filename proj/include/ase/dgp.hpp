/**
 * Data-generating processes with analytically known hazards.
 *
 * SyntheticDgp: X ~ Uniform(0,1), logistic event and censoring hazards with
 * time-varying intercepts calibrated to marginal survival targets.
 * TwinsDgp: binary covariate, time-homogeneous hazard table, t_max = 3.
 *
 * Both expose oracle hazards, a covariate sampler driven by supplied uniforms,
 * and a quadrature grid for ground-truth integrals over X.
 */
#pragma once

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ase/quadrature.hpp"
#include "ase/rng.hpp"
#include "ase/survival_core.hpp"

namespace ase {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// f(x) = intercept + slope (x - center) + low_shift 1(x <= low_cut) + high_shift 1(x >= high_cut)
struct CovariateEffect {
  double intercept = 0.0;
  double slope = 0.0;
  double center = 0.5;
  double low_cut = 0.35;
  double low_shift = 0.0;
  double high_cut = 0.75;
  double high_shift = 0.0;

  double operator()(double x) const {
    return intercept + slope * (x - center) + (x <= low_cut ? low_shift : 0.0) + (x >= high_cut ? high_shift : 0.0);
  }
};

struct SyntheticDgpParams {
  int t_max = 4;
  std::vector<double> alpha = std::vector<double>(5, 0.0);  // event intercepts
  std::vector<double> gamma = std::vector<double>(5, -3.0);  // censoring intercepts
  CovariateEffect eta{1.05, 0.12};
  CovariateEffect tau{-0.28, 0.0, 0.5, 0.35, 0.65, 0.75, -0.42};
  CovariateEffect phi{0.0, 0.06};
  CovariateEffect psi{0.14, 0.0, 0.5, 0.35, -0.26, 0.75, 0.20};
  TieConvention conv = TieConvention::Ties;

  void check() const {
    if (t_max < 0) throw InvariantError("t_max must be >= 0");
    const auto n = static_cast<std::size_t>(t_max) + 1;
    if (alpha.size() != n || gamma.size() != n) throw InvariantError("intercept arrays must have t_max+1 entries");
  }
};

/// lambda^S_t = sigmoid(alpha_t + eta(x) + tau(x) a),
/// lambda^G_t = sigmoid(gamma_t + phi(x) + psi(x) a).
inline NuisanceAtArm synthetic_hazards(const SyntheticDgpParams& p, double x, int a) {
  p.check();
  if (!(x >= 0.0 && x <= 1.0)) throw std::out_of_range("synthetic_hazards: x outside [0,1]");
  std::vector<HazardPair> h(static_cast<std::size_t>(p.t_max) + 1);
  const double ev = p.eta(x) + p.tau(x) * a;
  const double ce = p.phi(x) + p.psi(x) * a;
  for (int t = 0; t <= p.t_max; ++t) {
    const auto k = static_cast<std::size_t>(t);
    h[k] = {sigmoid(p.alpha[k] + ev), sigmoid(p.gamma[k] + ce)};
  }
  NuisanceAtArm nu(std::move(h));
  try {
    validate(nu, p.conv);
  } catch (const InvariantError& e) {
    throw CalibrationError(std::string("synthetic hazards invalid: ") + e.what());
  }
  return nu;
}

/// Gauss-Legendre rule for the synthetic covariate, split at the effect breakpoints.
inline std::pair<std::vector<double>, std::vector<double>> synthetic_quadrature(const SyntheticDgpParams& p,
                                                                                int nodes_per_piece = 64) {
  std::vector<double> cuts{0.0};
  for (double c : {p.tau.low_cut, p.tau.high_cut, p.psi.low_cut, p.psi.high_cut}) {
    if (c > 0.0 && c < 1.0) cuts.push_back(c);
  }
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return composite_gauss_legendre(nodes_per_piece, cuts);
}

/// E_X[S_t(X,0)] for t = 0..t_max.
inline std::vector<double> marginal_control_survival(const SyntheticDgpParams& p) {
  const auto [xs, ws] = synthetic_quadrature(p);
  std::vector<double> out(static_cast<std::size_t>(p.t_max) + 1, 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto s = event_survival_path(synthetic_hazards(p, xs[k], 0));
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += ws[k] * s[t];
  }
  return out;
}

/// E_X[G_t(X,0)] for t = 0..t_max, with G_t = prod_{i<=t} censoring factor
/// under the parameter set's tie convention.
inline std::vector<double> marginal_control_censoring_survival(const SyntheticDgpParams& p) {
  const auto [xs, ws] = synthetic_quadrature(p);
  std::vector<double> out(static_cast<std::size_t>(p.t_max) + 1, 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto nu = synthetic_hazards(p, xs[k], 0);
    double g = 1.0;
    for (int t = 0; t <= p.t_max; ++t) {
      g *= censoring_factor(nu[t], p.conv, t);
      out[static_cast<std::size_t>(t)] += ws[k] * g;
    }
  }
  return out;
}

struct CalibrationTargets {
  std::vector<double> survival;   // E_X[S_t(X,0)], strictly decreasing
  std::vector<double> censoring;  // E_X[G_t(X,0)], strictly decreasing

  /// Survival interpolated log-linearly, censoring linearly, between endpoints.
  static CalibrationTargets interpolate(int t_max, double s_first, double s_last, double g_first, double g_last) {
    CalibrationTargets out;
    for (int t = 0; t <= t_max; ++t) {
      const double f = t_max == 0 ? 0.0 : static_cast<double>(t) / t_max;
      out.survival.push_back(s_first * std::pow(s_last / s_first, f));
      out.censoring.push_back(g_first + (g_last - g_first) * f);
    }
    return out;
  }

  /// Endpoints 0.50 -> 0.02 (survival) and 0.84 -> 0.62 (censoring) over t = 0..4.
  static CalibrationTargets reference() { return interpolate(4, 0.50, 0.02, 0.84, 0.62); }
};

namespace detail {

template <class F>
double solve_intercept(F residual, const char* what, int t) {
  constexpr double lo = -40.0;
  constexpr double hi = 40.0;
  const double f_lo = residual(lo);
  const double f_hi = residual(hi);
  if (f_lo * f_hi > 0.0) {
    throw CalibrationError(std::string(what) + " target infeasible: root not bracketed at t=" + std::to_string(t));
  }
  std::uintmax_t max_iter = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, f_lo, f_hi, tol, max_iter);
  const double root = 0.5 * (a + b);
  if (std::abs(residual(root)) > 1e-8) {
    throw CalibrationError(std::string(what) + " calibration residual above 1e-8 at t=" + std::to_string(t));
  }
  return root;
}

}  // namespace detail

/// Sequential 1-D root finding over t: alpha_t matches the marginal control
/// survival target given alpha_0..alpha_{t-1}; gamma_t likewise for the
/// marginal control censoring survival (which under Ties also involves alpha).
inline SyntheticDgpParams calibrate_intercepts(const CalibrationTargets& targets, SyntheticDgpParams base = {}) {
  const auto n = targets.survival.size();
  if (n == 0 || targets.censoring.size() != n) throw CalibrationError("target paths must be nonempty and equal length");
  for (std::size_t t = 0; t < n; ++t) {
    for (double v : {targets.survival[t], targets.censoring[t]}) {
      if (!(v > 0.0 && v < 1.0)) throw CalibrationError("targets must lie in (0,1)");
    }
    if (t > 0 && !(targets.survival[t] < targets.survival[t - 1] && targets.censoring[t] < targets.censoring[t - 1])) {
      throw CalibrationError("targets must be strictly decreasing");
    }
  }
  base.t_max = static_cast<int>(n) - 1;
  base.alpha.assign(n, 0.0);
  base.gamma.assign(n, -40.0);
  const auto [xs, ws] = synthetic_quadrature(base);

  // Event intercepts: track each node's survival through t-1.
  std::vector<double> s_prev(xs.size(), 1.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto residual = [&](double a) {
      double m = 0.0;
      for (std::size_t k = 0; k < xs.size(); ++k) m += ws[k] * s_prev[k] * (1.0 - sigmoid(a + base.eta(xs[k])));
      return m - targets.survival[t];
    };
    base.alpha[t] = detail::solve_intercept(residual, "survival", static_cast<int>(t));
    for (std::size_t k = 0; k < xs.size(); ++k) s_prev[k] *= 1.0 - sigmoid(base.alpha[t] + base.eta(xs[k]));
  }

  std::vector<double> g_prev(xs.size(), 1.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto factor = [&](double g, std::size_t k) {
      const double lg = sigmoid(g + base.phi(xs[k]));
      if (base.conv == TieConvention::NoTies) return 1.0 - lg;
      const double ls = sigmoid(base.alpha[t] + base.eta(xs[k]));
      return 1.0 - lg / (1.0 - ls);
    };
    auto residual = [&](double g) {
      double m = 0.0;
      for (std::size_t k = 0; k < xs.size(); ++k) m += ws[k] * g_prev[k] * factor(g, k);
      return m - targets.censoring[t];
    };
    base.gamma[t] = detail::solve_intercept(residual, "censoring", static_cast<int>(t));
    for (std::size_t k = 0; k < xs.size(); ++k) g_prev[k] *= factor(base.gamma[t], k);
  }

  // Confirm every grid point yields valid hazards in both arms.
  for (double x : xs) {
    synthetic_hazards(base, x, 0);
    synthetic_hazards(base, x, 1);
  }
  return base;
}

struct TwinsDgpParams {
  double p1 = 0.5;  // P(X = 1)
  int t_max = 3;
  // event[x][a]
  std::array<std::array<double, 2>, 2> event{{{0.50, 0.40}, {0.50, 0.01}}};
  // censor[a]
  std::array<double, 2> censor{0.05, 0.108};
  TieConvention conv = TieConvention::Ties;
};

inline NuisanceAtArm twins_hazards(const TwinsDgpParams& p, int x, int a) {
  if ((x != 0 && x != 1) || (a != 0 && a != 1)) throw std::out_of_range("twins_hazards: x and a must be binary");
  auto nu = NuisanceAtArm::constant(p.t_max, p.event[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)],
                                    p.censor[static_cast<std::size_t>(a)]);
  validate(nu, p.conv);
  return nu;
}

struct CovariateGrid {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }
};

/// n-point midpoint grid on [0,1] with equal weights.
inline CovariateGrid midpoint_grid(int n) {
  if (n < 1) throw std::invalid_argument("grid needs at least one point");
  CovariateGrid g;
  for (int i = 0; i < n; ++i) {
    g.points.push_back({(i + 0.5) / n});
    g.weights.push_back(1.0 / n);
  }
  return g;
}

/// Evenly spaced points 0, 1/(n-1), ..., 1 with equal weights.
inline CovariateGrid lattice_grid(int n) {
  if (n < 2) throw std::invalid_argument("lattice grid needs at least two points");
  CovariateGrid g;
  for (int i = 0; i < n; ++i) {
    g.points.push_back({static_cast<double>(i) / (n - 1)});
    g.weights.push_back(1.0 / n);
  }
  return g;
}

class Dgp {
 public:
  virtual ~Dgp() = default;

  virtual std::string name() const = 0;
  virtual int t_max() const = 0;
  virtual TieConvention convention() const = 0;
  virtual std::size_t covariate_dim() const { return 1; }
  virtual NuisanceAtArm hazards(std::span<const double> x, int arm) const = 0;
  /// Maps covariate_dim() uniforms on [0,1) to a covariate draw.
  virtual std::vector<double> covariate_from_uniforms(std::span<const double> u) const = 0;
  /// Quadrature nodes and weights for E_X[.].
  virtual CovariateGrid quadrature() const = 0;

  std::vector<double> sample_covariate(SequentialRng& rng) const {
    std::vector<double> u(covariate_dim());
    for (auto& v : u) v = rng.uniform();
    return covariate_from_uniforms(u);
  }

  /// Covariate for a given round from the seed's covariate stream.
  std::vector<double> covariate_for_round(std::uint64_t seed, std::uint64_t round) const {
    std::vector<double> u(covariate_dim());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = CounterRng(seed, Stream::Covariate, j).uniform(round);
    return covariate_from_uniforms(u);
  }
};

class SyntheticDgp final : public Dgp {
 public:
  explicit SyntheticDgp(SyntheticDgpParams p) : p_(std::move(p)) {
    p_.check();
    const auto [x, w] = synthetic_quadrature(p_);
    for (std::size_t k = 0; k < x.size(); ++k) {
      grid_.points.push_back({x[k]});
      grid_.weights.push_back(w[k]);
    }
  }

  /// Calibrated against the reference marginal paths.
  static SyntheticDgp reference(TieConvention conv = TieConvention::Ties) {
    SyntheticDgpParams base;
    base.conv = conv;
    return SyntheticDgp(calibrate_intercepts(CalibrationTargets::reference(), base));
  }

  const SyntheticDgpParams& params() const noexcept { return p_; }
  std::string name() const override { return "synthetic"; }
  int t_max() const override { return p_.t_max; }
  TieConvention convention() const override { return p_.conv; }
  NuisanceAtArm hazards(std::span<const double> x, int arm) const override {
    return synthetic_hazards(p_, x[0], arm);
  }
  std::vector<double> covariate_from_uniforms(std::span<const double> u) const override { return {u[0]}; }
  CovariateGrid quadrature() const override { return grid_; }

 private:
  SyntheticDgpParams p_;
  CovariateGrid grid_;
};

class TwinsDgp final : public Dgp {
 public:
  explicit TwinsDgp(TwinsDgpParams p = {}) : p_(p) {
    if (!(p_.p1 >= 0.0 && p_.p1 <= 1.0)) throw InvariantError("p1 must be a probability");
    for (int x = 0; x < 2; ++x) {
      for (int a = 0; a < 2; ++a) twins_hazards(p_, x, a);
    }
  }

  const TwinsDgpParams& params() const noexcept { return p_; }
  std::string name() const override { return "twins"; }
  int t_max() const override { return p_.t_max; }
  TieConvention convention() const override { return p_.conv; }
  NuisanceAtArm hazards(std::span<const double> x, int arm) const override {
    return twins_hazards(p_, x[0] >= 0.5 ? 1 : 0, arm);
  }
  std::vector<double> covariate_from_uniforms(std::span<const double> u) const override {
    return {u[0] < p_.p1 ? 1.0 : 0.0};
  }
  CovariateGrid quadrature() const override {
    CovariateGrid g;
    g.points = {{0.0}, {1.0}};
    g.weights = {1.0 - p_.p1, p_.p1};
    return g;
  }

 private:
  TwinsDgpParams p_;
};

/// Cov(S_t xi_t, S_t' xi_t' | X, A = a) by exact enumeration of outcome_atoms.
inline Eigen::MatrixXd sigma_a_matrix(const NuisanceAtArm& nu, TieConvention conv) {
  const auto n = static_cast<Eigen::Index>(nu.size());
  const auto s = event_survival_path(nu);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Observation obs;
  for (const auto& atom : outcome_atoms(nu, conv)) {
    if (atom.prob == 0.0) continue;
    obs.t_tilde = atom.t_tilde;
    obs.event = atom.event;
    const auto xis = xi_path(obs, nu, conv);
    Eigen::VectorXd u(n);
    for (Eigen::Index t = 0; t < n; ++t) u[t] = s[static_cast<std::size_t>(t)] * xis[static_cast<std::size_t>(t)];
    second.noalias() += atom.prob * u * u.transpose();
    mean += atom.prob * u;
  }
  Eigen::MatrixXd cov = second - mean * mean.transpose();
  return 0.5 * (cov + cov.transpose());
}

/// Average over the grid of arm-a survival: E_X[S_t(X,a)].
inline std::vector<double> true_survival_curve(const Dgp& dgp, int arm) {
  const auto grid = dgp.quadrature();
  std::vector<double> out(static_cast<std::size_t>(dgp.t_max()) + 1, 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto s = event_survival_path(dgp.hazards(grid.points[k], arm));
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += grid.weights[k] * s[t];
  }
  return out;
}

/// tau_t = E_X[S_t(X,1) - S_t(X,0)].
inline std::vector<double> true_tau(const Dgp& dgp) {
  auto s1 = true_survival_curve(dgp, 1);
  const auto s0 = true_survival_curve(dgp, 0);
  for (std::size_t t = 0; t < s1.size(); ++t) s1[t] -= s0[t];
  return s1;
}

struct GroundTruth {
  CovariateGrid grid;
  std::vector<double> tau;
  std::vector<double> v0, v1;  // trace of Sigma_a per grid point
  std::vector<Eigen::MatrixXd> sigma0, sigma1;
  Eigen::MatrixXd b_outer;  // E[b b^T], b = S(X,1) - S(X,0) - tau
};

/// Oracle quantities over a grid. tau is always taken from the DGP's own
/// quadrature; b_outer uses the supplied grid's weights.
inline GroundTruth ground_truth(const Dgp& dgp, const CovariateGrid& grid) {
  GroundTruth g;
  g.grid = grid;
  g.tau = true_tau(dgp);
  const auto n = static_cast<Eigen::Index>(dgp.t_max() + 1);
  Eigen::Map<const Eigen::VectorXd> tau(g.tau.data(), n);
  g.b_outer = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto nu0 = dgp.hazards(grid.points[k], 0);
    const auto nu1 = dgp.hazards(grid.points[k], 1);
    g.sigma0.push_back(sigma_a_matrix(nu0, dgp.convention()));
    g.sigma1.push_back(sigma_a_matrix(nu1, dgp.convention()));
    g.v0.push_back(g.sigma0.back().trace());
    g.v1.push_back(g.sigma1.back().trace());
    const auto s0 = event_survival_path(nu0);
    const auto s1 = event_survival_path(nu1);
    Eigen::VectorXd b(n);
    for (Eigen::Index t = 0; t < n; ++t) b[t] = s1[static_cast<std::size_t>(t)] - s0[static_cast<std::size_t>(t)];
    b -= tau;
    g.b_outer.noalias() += grid.weights[k] * b * b.transpose();
  }
  return g;
}

inline GroundTruth ground_truth(const Dgp& dgp) { return ground_truth(dgp, dgp.quadrature()); }

}  // namespace ase
