/**
 * Hazard learners and two-fold sequential cross-fitting.
 *
 * Training data come from the person-period expansion of a history: a unit
 * with observed time t~ contributes one row for each i = 0..min(t~, t_max).
 * Every learner estimates two quantities per (x, a, i):
 *
 *   lambda^S_i  from all at-risk rows, label 1(T~ = i, D = 1);
 *   q_i         from at-risk rows without an event at i, label 1(T~ = i, D = 0).
 *
 * q is the censoring hazard among units still event-free at i. Under NoTies
 * it is the net censoring hazard itself; under Ties the observed censoring
 * hazard is q (1 - lambda^S). Either way the censoring factor of G is 1 - q,
 * which keeps fitted hazard pairs valid without post-hoc repair.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ase/dgp.hpp"
#include "ase/survival_core.hpp"

namespace ase {

enum class LearnerKind { Oracle, Binned, Logistic, ConstantCensoringMs, Corrupted };

inline std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Oracle: return "oracle";
    case LearnerKind::Binned: return "binned";
    case LearnerKind::Logistic: return "logistic";
    case LearnerKind::ConstantCensoringMs: return "constant_censoring_ms";
    case LearnerKind::Corrupted: return "corrupted";
  }
  return "?";
}

inline LearnerKind learner_kind_from_string(const std::string& s) {
  for (auto k : {LearnerKind::Oracle, LearnerKind::Binned, LearnerKind::Logistic, LearnerKind::ConstantCensoringMs,
                 LearnerKind::Corrupted}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown learner kind '" + s + "'");
}

struct HazardLearnerSpec {
  LearnerKind kind = LearnerKind::Logistic;
  int bins = 10;
  double smoothing = 0.5;  // Laplace pseudo-count s
  int degree = 2;          // polynomial degree per covariate (Logistic)
  double ridge = 1.0;      // L2 penalty on non-intercept coefficients (Logistic)
  LearnerKind base = LearnerKind::Logistic;  // event learner under ConstantCensoringMs
  double corruption_event = 0.0;   // logit shift on lambda^S (Corrupted)
  double corruption_censor = 0.0;  // logit shift on the censoring hazard (Corrupted)

  void check() const {
    if (bins < 1) throw InvariantError("bins must be >= 1");
    if (!(smoothing > 0.0)) throw InvariantError("smoothing must be > 0");
    if (degree < 1) throw InvariantError("degree must be >= 1");
    if (!(ridge >= 0.0)) throw InvariantError("ridge must be >= 0");
    if (kind == LearnerKind::ConstantCensoringMs &&
        (base == LearnerKind::ConstantCensoringMs || base == LearnerKind::Corrupted)) {
      throw InvariantError("constant_censoring_ms base must be oracle, binned or logistic");
    }
  }

  bool needs_data() const {
    return kind != LearnerKind::Oracle && kind != LearnerKind::Corrupted;
  }
  bool needs_oracle() const {
    return kind == LearnerKind::Oracle || kind == LearnerKind::Corrupted ||
           (kind == LearnerKind::ConstantCensoringMs && base == LearnerKind::Oracle);
  }
};

namespace detail {

inline constexpr double kRenormEps = 1e-6;

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// Builds a hazard pair from lambda^S and the event-free censoring hazard q,
/// then applies the joint renormalisation if the pair still exceeds one.
inline HazardPair make_pair_from_q(double ls, double q, TieConvention conv) {
  ls = std::clamp(ls, 0.0, 1.0);
  q = std::clamp(q, 0.0, 1.0);
  HazardPair h{ls, conv == TieConvention::Ties ? q * (1.0 - ls) : q};
  if (conv == TieConvention::Ties && h.event + h.censor > 1.0) {
    const double scale = (1.0 - kRenormEps) / (h.event + h.censor);
    h.event *= scale;
    h.censor *= scale;
  }
  return h;
}

/// Event-free censoring hazard implied by a hazard pair.
inline double q_from_pair(const HazardPair& h, TieConvention conv) {
  if (conv == TieConvention::NoTies) return h.censor;
  return h.event < 1.0 ? h.censor / (1.0 - h.event) : 0.0;
}

}  // namespace detail

class HazardModel {
 public:
  virtual ~HazardModel() = default;
  virtual NuisanceAtArm predict(std::span<const double> x, int arm) const = 0;
};

class OracleModel final : public HazardModel {
 public:
  explicit OracleModel(std::shared_ptr<const Dgp> dgp) : dgp_(std::move(dgp)) {
    if (!dgp_) throw std::invalid_argument("oracle learner needs a DGP");
  }
  NuisanceAtArm predict(std::span<const double> x, int arm) const override { return dgp_->hazards(x, arm); }

 private:
  std::shared_ptr<const Dgp> dgp_;
};

/// Oracle hazards with fixed logit shifts on the event hazard and on the
/// event-free censoring hazard.
class CorruptedModel final : public HazardModel {
 public:
  CorruptedModel(std::shared_ptr<const Dgp> dgp, double shift_event, double shift_censor)
      : dgp_(std::move(dgp)), de_(shift_event), dc_(shift_censor) {
    if (!dgp_) throw std::invalid_argument("corrupted learner needs a DGP");
  }
  NuisanceAtArm predict(std::span<const double> x, int arm) const override {
    const auto truth = dgp_->hazards(x, arm);
    const auto conv = dgp_->convention();
    std::vector<HazardPair> h(truth.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double ls = sigmoid(detail::logit(truth.hazards[i].event) + de_);
      const double q = sigmoid(detail::logit(detail::q_from_pair(truth.hazards[i], conv)) + dc_);
      h[i] = detail::make_pair_from_q(ls, q, conv);
    }
    return NuisanceAtArm(std::move(h));
  }

 private:
  std::shared_ptr<const Dgp> dgp_;
  double de_;
  double dc_;
};

/// Laplace-smoothed counts per (bin of x[0], arm, time). One bin gives the
/// smoothed marginal.
class CellTableModel final : public HazardModel {
 public:
  struct Counts {
    double at_risk = 0.0;
    double events = 0.0;
    double event_free = 0.0;
    double censored = 0.0;
  };

  CellTableModel(int bins, int t_max, double smoothing, TieConvention conv)
      : bins_(bins), t_max_(t_max), s_(smoothing), conv_(conv),
        counts_(static_cast<std::size_t>(bins) * 2 * (static_cast<std::size_t>(t_max) + 1)) {}

  int bin_of(std::span<const double> x) const {
    if (bins_ == 1 || x.empty()) return 0;
    const double v = std::clamp(x[0], 0.0, 1.0);
    return std::min(bins_ - 1, static_cast<int>(std::floor(v * bins_)));
  }

  void add(const Observation& o) {
    const int b = bin_of(o.x);
    const int last = o.past_horizon() ? t_max_ : std::min(o.t_tilde, t_max_);
    for (int i = 0; i <= last; ++i) {
      auto& c = cell(b, o.arm, i);
      const bool here = o.t_tilde == i;
      c.at_risk += 1.0;
      if (here && o.event) {
        c.events += 1.0;
      } else {
        c.event_free += 1.0;
        if (here) c.censored += 1.0;
      }
    }
  }

  const Counts& cell(int b, int a, int i) const { return counts_[index(b, a, i)]; }

  NuisanceAtArm predict(std::span<const double> x, int arm) const override {
    const int b = bin_of(x);
    std::vector<HazardPair> h(static_cast<std::size_t>(t_max_) + 1);
    for (int i = 0; i <= t_max_; ++i) {
      const auto& c = cell(b, arm, i);
      const double ls = (c.events + s_) / (c.at_risk + 2.0 * s_);
      const double q = (c.censored + s_) / (c.event_free + 2.0 * s_);
      h[static_cast<std::size_t>(i)] = detail::make_pair_from_q(ls, q, conv_);
    }
    return NuisanceAtArm(std::move(h));
  }

  /// Pooled over arms and bins: the event-free censoring hazard per time.
  std::vector<double> pooled_censoring() const {
    std::vector<double> q(static_cast<std::size_t>(t_max_) + 1);
    for (int i = 0; i <= t_max_; ++i) {
      double c = 0.0;
      double n = 0.0;
      for (int b = 0; b < bins_; ++b) {
        for (int a = 0; a < 2; ++a) {
          c += cell(b, a, i).censored;
          n += cell(b, a, i).event_free;
        }
      }
      q[static_cast<std::size_t>(i)] = (c + s_) / (n + 2.0 * s_);
    }
    return q;
  }

 private:
  std::size_t index(int b, int a, int i) const {
    return (static_cast<std::size_t>(b) * 2 + static_cast<std::size_t>(a)) * (static_cast<std::size_t>(t_max_) + 1) +
           static_cast<std::size_t>(i);
  }
  Counts& cell(int b, int a, int i) { return counts_[index(b, a, i)]; }

  int bins_;
  int t_max_;
  double s_;
  TieConvention conv_;
  std::vector<Counts> counts_;
};

namespace detail {

/// Polynomial features of the centred covariate: 1, z_j, z_j^2, ..., z_j^degree.
inline Eigen::VectorXd poly_features(std::span<const double> x, int degree) {
  Eigen::VectorXd f(1 + static_cast<Eigen::Index>(x.size()) * degree);
  f[0] = 1.0;
  Eigen::Index k = 1;
  for (double v : x) {
    const double z = v - 0.5;
    double p = 1.0;
    for (int d = 1; d <= degree; ++d) {
      p *= z;
      f[k++] = p;
    }
  }
  return f;
}

/// Penalised logistic regression by damped Newton. The intercept carries a
/// Beta(s, s) prior (s pseudo-successes and s pseudo-failures at z = 0), the
/// other coefficients an L2 penalty. Stops at gradient norm <= 1e-8.
inline Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double s, double ridge) {
  const Eigen::Index p = X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double n = static_cast<double>(X.rows());
  beta[0] = logit((y.sum() + s) / (n + 2.0 * s));

  auto softplus = [](double e) { return e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)); };
  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    double f = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) f += softplus(eta[r]) - y[r] * eta[r];
    f += 2.0 * s * softplus(b[0]) - s * b[0];
    return f + 0.5 * ridge * b.tail(p - 1).squaredNorm();
  };

  double f = objective(beta);
  Eigen::VectorXd w(X.rows());
  Eigen::VectorXd resid(X.rows());
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = X * beta;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double mu = sigmoid(eta[r]);
      resid[r] = mu - y[r];
      w[r] = mu * (1.0 - mu);
    }
    Eigen::VectorXd grad = X.transpose() * resid;
    Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X;
    const double m0 = sigmoid(beta[0]);
    grad[0] += 2.0 * s * m0 - s;
    hess(0, 0) += 2.0 * s * m0 * (1.0 - m0);
    grad.tail(p - 1) += ridge * beta.tail(p - 1);
    hess.diagonal().tail(p - 1).array() += ridge;
    if (grad.norm() <= 1e-8) break;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    // Backtrack only on a genuine increase; near the optimum the objective
    // is flat to rounding and the full Newton step is taken.
    const double slack = 1e-12 * (1.0 + std::abs(f));
    double t = 1.0;
    Eigen::VectorXd next = beta - step;
    double f_next = objective(next);
    while (f_next > f + slack && t > 1e-8) {
      t *= 0.5;
      next = beta - t * step;
      f_next = objective(next);
    }
    if (f_next > f + slack) break;
    beta = next;
    f = f_next;
  }
  return beta;
}

}  // namespace detail

/// Separate penalised logistic fits per (arm, time) for lambda^S and q.
class LogisticModel final : public HazardModel {
 public:
  LogisticModel(std::span<const Observation> history, int t_max, int degree, double smoothing, double ridge,
                TieConvention conv)
      : t_max_(t_max), degree_(degree), conv_(conv) {
    const std::size_t cells = 2 * (static_cast<std::size_t>(t_max) + 1);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(history.empty() ? 1 : history[0].x.size()) * degree;
    // (unit, label) pairs per cell, for the event and the censoring regressions.
    std::vector<std::vector<std::pair<std::size_t, double>>> ev(cells), cf(cells);
    std::vector<Eigen::VectorXd> feats;
    feats.reserve(history.size());
    for (std::size_t u = 0; u < history.size(); ++u) {
      const auto& o = history[u];
      feats.push_back(detail::poly_features(o.x, degree));
      if (feats.back().size() != p) throw std::invalid_argument("covariate dimension varies across history");
      const int last = o.past_horizon() ? t_max : std::min(o.t_tilde, t_max);
      for (int i = 0; i <= last; ++i) {
        const auto c = cell(o.arm, i);
        const bool here = o.t_tilde == i;
        ev[c].emplace_back(u, here && o.event ? 1.0 : 0.0);
        if (!(here && o.event)) cf[c].emplace_back(u, here ? 1.0 : 0.0);
      }
    }
    auto solve = [&](const std::vector<std::pair<std::size_t, double>>& rows) {
      Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), p);
      Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        X.row(static_cast<Eigen::Index>(r)) = feats[rows[r].first].transpose();
        y[static_cast<Eigen::Index>(r)] = rows[r].second;
      }
      return detail::fit_logistic(X, y, smoothing, ridge);
    };
    for (std::size_t c = 0; c < cells; ++c) {
      beta_event_.push_back(solve(ev[c]));
      beta_censor_.push_back(solve(cf[c]));
    }
  }

  NuisanceAtArm predict(std::span<const double> x, int arm) const override {
    const auto f = detail::poly_features(x, degree_);
    std::vector<HazardPair> h(static_cast<std::size_t>(t_max_) + 1);
    for (int i = 0; i <= t_max_; ++i) {
      const auto c = cell(arm, i);
      if (f.size() != beta_event_[c].size()) throw std::invalid_argument("covariate dimension mismatch");
      h[static_cast<std::size_t>(i)] =
          detail::make_pair_from_q(sigmoid(f.dot(beta_event_[c])), sigmoid(f.dot(beta_censor_[c])), conv_);
    }
    return NuisanceAtArm(std::move(h));
  }

 private:
  std::size_t cell(int a, int i) const {
    return static_cast<std::size_t>(a) * (static_cast<std::size_t>(t_max_) + 1) + static_cast<std::size_t>(i);
  }

  int t_max_;
  int degree_;
  TieConvention conv_;
  std::vector<Eigen::VectorXd> beta_event_;
  std::vector<Eigen::VectorXd> beta_censor_;
};

/// Event hazards from a base model; censoring replaced by a per-time constant
/// that ignores both x and the arm.
class ConstantCensoringModel final : public HazardModel {
 public:
  ConstantCensoringModel(std::shared_ptr<const HazardModel> base, std::vector<double> q, TieConvention conv)
      : base_(std::move(base)), q_(std::move(q)), conv_(conv) {}

  NuisanceAtArm predict(std::span<const double> x, int arm) const override {
    auto nu = base_->predict(x, arm);
    for (std::size_t i = 0; i < nu.size(); ++i) {
      nu.hazards[i] = detail::make_pair_from_q(nu.hazards[i].event, q_[i], conv_);
    }
    return nu;
  }

 private:
  std::shared_ptr<const HazardModel> base_;
  std::vector<double> q_;
  TieConvention conv_;
};

inline constexpr int kFullFold = -1;

struct FittedNuisance {
  std::shared_ptr<const HazardModel> model;
  int fold_id = kFullFold;  // 0, 1, or kFullFold
  long fitted_on_rounds = 0;

  NuisanceAtArm predict(std::span<const double> x, int arm) const { return model->predict(x, arm); }
};

namespace detail {

inline std::shared_ptr<const HazardModel> fit_base(LearnerKind kind, const HazardLearnerSpec& spec,
                                                   std::span<const Observation> history, int t_max,
                                                   TieConvention conv, const std::shared_ptr<const Dgp>& oracle) {
  switch (kind) {
    case LearnerKind::Oracle: return std::make_shared<OracleModel>(oracle);
    case LearnerKind::Corrupted:
      return std::make_shared<CorruptedModel>(oracle, spec.corruption_event, spec.corruption_censor);
    case LearnerKind::Binned: {
      auto m = std::make_shared<CellTableModel>(spec.bins, t_max, spec.smoothing, conv);
      for (const auto& o : history) m->add(o);
      return m;
    }
    case LearnerKind::Logistic:
      return std::make_shared<LogisticModel>(history, t_max, spec.degree, spec.smoothing, spec.ridge, conv);
    case LearnerKind::ConstantCensoringMs: break;
  }
  throw std::logic_error("fit_base: unsupported learner kind");
}

}  // namespace detail

/// Fits a learner on a history. Oracle and Corrupted ignore the data.
inline FittedNuisance fit(const HazardLearnerSpec& spec, std::span<const Observation> history, TimeHorizon horizon,
                          TieConvention conv, std::shared_ptr<const Dgp> oracle = nullptr, int fold_id = kFullFold) {
  spec.check();
  if (spec.needs_oracle() && !oracle) throw std::invalid_argument("learner requires the oracle DGP");
  if (oracle && oracle->t_max() != horizon.t_max) throw InvariantError("oracle DGP horizon mismatch");
  FittedNuisance out;
  out.fold_id = fold_id;
  out.fitted_on_rounds = static_cast<long>(history.size());
  if (spec.kind == LearnerKind::ConstantCensoringMs) {
    auto base = detail::fit_base(spec.base, spec, history, horizon.t_max, conv, oracle);
    CellTableModel counts(1, horizon.t_max, spec.smoothing, conv);
    for (const auto& o : history) counts.add(o);
    out.model = std::make_shared<ConstantCensoringModel>(std::move(base), counts.pooled_censoring(), conv);
  } else {
    out.model = detail::fit_base(spec.kind, spec, history, horizon.t_max, conv, oracle);
  }
  return out;
}

enum class RefitMode {
  PerFold,  // refit fold j once it has grown by m units since its last fit
  Batch,    // refit every model whenever the total count reaches a multiple of m
};

/// Two temporal folds J_r = r mod 2. Unit r is scored by the model trained on
/// fold 1 - J_r. Optionally also maintains a model on the full history.
class CrossFitState {
 public:
  CrossFitState(HazardLearnerSpec spec, int t_max, TieConvention conv, std::shared_ptr<const Dgp> oracle = nullptr,
                int refit_every = 100, RefitMode mode = RefitMode::Batch, bool track_full = false)
      : spec_(std::move(spec)), horizon_(t_max), conv_(conv), oracle_(std::move(oracle)), m_(refit_every),
        mode_(mode), track_full_(track_full),
        marginal_{CellTableModel(1, t_max, spec_.smoothing, conv), CellTableModel(1, t_max, spec_.smoothing, conv)},
        marginal_full_(1, t_max, spec_.smoothing, conv) {
    spec_.check();
    if (m_ < 1) throw InvariantError("refit batch size must be >= 1");
    if (spec_.needs_oracle() && !oracle_) throw std::invalid_argument("learner requires the oracle DGP");
    if (!spec_.needs_data()) {
      for (int j = 0; j < 2; ++j) {
        models_[j] = fit(spec_, {}, horizon_, conv_, oracle_, j);
        has_[j] = true;
      }
      full_ = fit(spec_, {}, horizon_, conv_, oracle_, kFullFold);
      has_full_ = true;
    }
  }

  static int fold_of(long r) { return static_cast<int>(r % 2); }

  void update(const Observation& obs) {
    if (obs.round != last_round_ + 1) {
      throw std::invalid_argument("crossfit_update: expected round " + std::to_string(last_round_ + 1) + ", got " +
                                  std::to_string(obs.round));
    }
    if (obs.arm != 0 && obs.arm != 1) throw std::invalid_argument("crossfit_update: arm must be 0 or 1");
    const int j = fold_of(obs.round);
    folds_[j].push_back(obs);
    marginal_[j].add(obs);
    marginal_full_.add(obs);
    last_round_ = obs.round;
    if (!spec_.needs_data()) return;

    const auto total = folds_[0].size() + folds_[1].size();
    if (mode_ == RefitMode::Batch) {
      if (total % static_cast<std::size_t>(m_) == 0) {
        refit(0);
        refit(1);
        if (track_full_) refit_full();
      }
    } else {
      if (folds_[j].size() - fitted_size_[j] >= static_cast<std::size_t>(m_)) refit(j);
      if (track_full_ && total % static_cast<std::size_t>(m_) == 0) refit_full();
    }
  }

  bool has_model_for(long r) const { return has_[1 - fold_of(r)]; }

  /// Opposite-fold predictions for unit r at x, both arms.
  std::pair<NuisanceAtArm, NuisanceAtArm> predict_for_unit(long r, std::span<const double> x) const {
    if (r <= last_round_) throw std::invalid_argument("predict_for_unit: round already incorporated");
    const int k = 1 - fold_of(r);
    if (!has_[k]) throw std::logic_error("predict_for_unit: no model fitted on fold " + std::to_string(k) + " yet");
    return {models_[k].predict(x, 0), models_[k].predict(x, 1)};
  }

  /// Smoothed marginal from the opposite fold's data so far, for rounds that
  /// arrive before any model exists.
  std::pair<NuisanceAtArm, NuisanceAtArm> predict_fallback(long r, std::span<const double> x) const {
    const auto& m = marginal_[1 - fold_of(r)];
    return {m.predict(x, 0), m.predict(x, 1)};
  }

  std::pair<NuisanceAtArm, NuisanceAtArm> predict_or_fallback(long r, std::span<const double> x) const {
    return has_model_for(r) ? predict_for_unit(r, x) : predict_fallback(r, x);
  }

  bool has_full() const noexcept { return has_full_; }
  const FittedNuisance& full_model() const {
    if (!has_full_) throw std::logic_error("no full-history model yet");
    return full_;
  }
  /// Full-history model, or the smoothed marginal of the full history before one exists.
  NuisanceAtArm predict_full(std::span<const double> x, int arm) const {
    return has_full_ ? full_.predict(x, arm) : marginal_full_.predict(x, arm);
  }

  const FittedNuisance* model(int fold) const { return has_[fold] ? &models_[fold] : nullptr; }
  const std::vector<Observation>& fold(int j) const { return folds_[j]; }
  long last_round() const noexcept { return last_round_; }
  /// Incremented whenever any model changes.
  long generation() const noexcept { return generation_; }
  const HazardLearnerSpec& spec() const noexcept { return spec_; }
  TieConvention convention() const noexcept { return conv_; }

 private:
  void refit(int j) {
    models_[j] = fit(spec_, folds_[j], horizon_, conv_, oracle_, j);
    has_[j] = true;
    fitted_size_[j] = folds_[j].size();
    ++generation_;
  }

  void refit_full() {
    std::vector<Observation> all;
    all.reserve(folds_[0].size() + folds_[1].size());
    // Restore round order so the fit is a function of the history alone.
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < folds_[0].size() || b < folds_[1].size()) {
      if (b == folds_[1].size() || (a < folds_[0].size() && folds_[0][a].round < folds_[1][b].round)) {
        all.push_back(folds_[0][a++]);
      } else {
        all.push_back(folds_[1][b++]);
      }
    }
    full_ = fit(spec_, all, horizon_, conv_, oracle_, kFullFold);
    has_full_ = true;
    ++generation_;
  }

  HazardLearnerSpec spec_;
  TimeHorizon horizon_;
  TieConvention conv_;
  std::shared_ptr<const Dgp> oracle_;
  int m_;
  RefitMode mode_;
  bool track_full_;

  std::vector<Observation> folds_[2];
  CellTableModel marginal_[2];
  CellTableModel marginal_full_;
  FittedNuisance models_[2];
  bool has_[2] = {false, false};
  std::size_t fitted_size_[2] = {0, 0};
  FittedNuisance full_;
  bool has_full_ = false;
  long last_round_ = 0;
  long generation_ = 0;
};

}  // namespace ase
