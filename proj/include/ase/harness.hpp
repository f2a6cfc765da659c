/**
 * Experiment orchestration: the adaptive round loop for every estimator
 * variant, per-run CSV output, seed-parallel replication and summaries.
 *
 * Randomness (see rng.hpp):
 *   covariate  (seed, coordinate)      at counter r  -- shared by all variants
 *   outcome    (seed, arm)             at counter r  -- shared by all variants
 *   assignment (seed, variant id)      at counter r  -- one stream per variant
 * Two variants that assign unit r to the same arm therefore observe the same
 * outcome for it.
 */
#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ase/allocation.hpp"
#include "ase/config.hpp"
#include "ase/dgp.hpp"
#include "ase/estimator.hpp"
#include "ase/nuisance.hpp"
#include "ase/rng.hpp"
#include "ase/survival_core.hpp"

namespace ase {

/// Raised for failures inside a run that are not configuration problems.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Estimation { Eif, Plugin, NaiveIpw };

struct VariantTraits {
  bool adaptive = true;
  bool oracle = false;
  bool misspecified_censoring = false;
  bool neyman_allocation = false;
  Estimation estimation = Estimation::Eif;
};

inline VariantTraits traits(Variant v) {
  switch (v) {
    case Variant::Ase: return {true, false, false, false, Estimation::Eif};
    case Variant::AseNa: return {false, false, false, false, Estimation::Eif};
    case Variant::AseMs: return {true, false, true, false, Estimation::Eif};
    case Variant::Plugin: return {true, false, false, false, Estimation::Plugin};
    case Variant::PluginNa: return {false, false, false, false, Estimation::Plugin};
    case Variant::A2ipwNaive: return {true, false, false, true, Estimation::NaiveIpw};
    case Variant::Oracle: return {true, true, false, false, Estimation::Eif};
    case Variant::OracleNa: return {false, true, false, false, Estimation::Eif};
  }
  return {};
}

/// The learner a variant actually uses given the configured one.
inline HazardLearnerSpec learner_for(Variant v, const HazardLearnerSpec& configured) {
  const auto t = traits(v);
  HazardLearnerSpec s = configured;
  if (t.oracle) {
    s.kind = LearnerKind::Oracle;
  } else if (t.misspecified_censoring && s.kind != LearnerKind::ConstantCensoringMs) {
    s.base = s.kind;
    s.kind = LearnerKind::ConstantCensoringMs;
  }
  return s;
}

/// Censoring-agnostic AIPW pseudo-outcome for 1(T > t):
///   S1 - S0 + A/pi (Y - S1) - (1-A)/(1-pi) (Y - S0),  Y = 1(T~ > t).
/// Units censored before t have no observed Y and contribute no residual.
inline EifVector naive_ipw_pseudo_outcome(const Observation& obs, double pi, const NuisanceAtArm& nu0,
                                          const NuisanceAtArm& nu1) {
  detail::require_interior(pi, "treatment probability");
  const auto s0 = event_survival_path(nu0);
  const auto s1 = event_survival_path(nu1);
  EifVector phi(s0.size());
  for (std::size_t t = 0; t < phi.size(); ++t) {
    phi[t] = s1[t] - s0[t];
    const int tt = static_cast<int>(t);
    const bool censored_before = !obs.past_horizon() && !obs.event && obs.t_tilde < tt;
    if (censored_before) continue;
    const double y = (obs.past_horizon() || obs.t_tilde > tt || (!obs.event && obs.t_tilde == tt)) ? 1.0 : 0.0;
    if (obs.arm == 1) {
      phi[t] += (y - s1[t]) / pi;
    } else {
      phi[t] -= (y - s0[t]) / (1.0 - pi);
    }
  }
  return phi;
}

/// Policy problem from model predictions at equally weighted covariates.
inline PolicyProblem problem_from_model(const HazardModel& model, std::span<const std::vector<double>> xs,
                                        TieConvention conv) {
  PolicyProblem p;
  const double w = 1.0 / static_cast<double>(xs.size());
  std::vector<Eigen::VectorXd> diffs;
  Eigen::VectorXd mean;
  for (const auto& x : xs) {
    const auto nu0 = model.predict(x, 0);
    const auto nu1 = model.predict(x, 1);
    p.weights.push_back(w);
    p.sigma0.push_back(sigma_a_matrix(nu0, conv));
    p.sigma1.push_back(sigma_a_matrix(nu1, conv));
    const auto s0 = event_survival_path(nu0);
    const auto s1 = event_survival_path(nu1);
    Eigen::VectorXd d(static_cast<Eigen::Index>(s0.size()));
    for (std::size_t t = 0; t < s0.size(); ++t) d[static_cast<Eigen::Index>(t)] = s1[t] - s0[t];
    if (mean.size() == 0) mean = Eigen::VectorXd::Zero(d.size());
    mean += w * d;
    diffs.push_back(std::move(d));
  }
  p.b_outer = Eigen::MatrixXd::Zero(mean.size(), mean.size());
  for (const auto& d : diffs) p.b_outer.noalias() += w * (d - mean) * (d - mean).transpose();
  return p;
}

inline PolicyProblem problem_from_truth(const GroundTruth& g) {
  PolicyProblem p;
  p.weights = g.grid.weights;
  p.sigma0 = g.sigma0;
  p.sigma1 = g.sigma1;
  p.b_outer = g.b_outer;
  return p;
}

struct RunOptions {
  bool keep_curves = true;  // per-round MSE and coverage
};

struct SeedVariantResult {
  Variant variant = Variant::Ase;
  std::vector<double> mse;       // per round
  std::vector<double> coverage;  // per round: fraction of horizons covered by the fixed-time CI
  std::vector<double> tau_final;
  double mse_final = 0.0;
  double coverage_final = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> cs_covered;  // per horizon: CS covered tau at every round in the window
  bool cs_never_narrower = true;
  long arm1 = 0;
  double pi_min = 1.0;
  double pi_max = 0.0;
  std::vector<double> apo[2];     // final arm survival curves (EIF variants)
  std::vector<double> apo_se[2];  // sqrt(V/R)
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<SeedVariantResult> variants;
};

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Allocation rule of one variant. D/E criteria use a weight matrix per fold
/// model, recomputed whenever the cross-fit models change.
class AllocationRule {
 public:
  AllocationRule(const ExperimentConfig& cfg, const VariantTraits& t, TieConvention conv)
      : cfg_(cfg), conv_(conv),
        criterion_(t.neyman_allocation ? DesignCriterion::NeymanNaive : cfg.criterion) {}

  bool needs_weights() const { return criterion_ == DesignCriterion::DOpt || criterion_ == DesignCriterion::EOpt; }

  void refresh(const CrossFitState& cf, const std::vector<std::vector<double>>& xs, long r) {
    if (!needs_weights() || xs.empty() || cf.generation() == seen_generation_) return;
    seen_generation_ = cf.generation();
    const std::size_t n = std::min<std::size_t>(xs.size(), static_cast<std::size_t>(cfg_.policy_grid));
    std::vector<std::vector<double>> grid;
    for (std::size_t k = 0; k < n; ++k) grid.push_back(xs[(k * xs.size()) / n]);
    const double alpha = 1.0 / cfg_.truncation.k(r);
    for (int j = 0; j < 2; ++j) {
      const auto* m = cf.model(j);
      if (m == nullptr) continue;
      const auto problem = problem_from_model(*m->model, grid, conv_);
      const auto fp = criterion_ == DesignCriterion::DOpt ? d_optimal_policy(problem, alpha, 200, 1e-8)
                                                          : e_optimal_policy(problem, alpha, 200, 1e-8);
      weight_[j] = fp.weight;
    }
  }

  double raw(long r, const NuisanceAtArm& nu0, const NuisanceAtArm& nu1) const {
    switch (criterion_) {
      case DesignCriterion::AOpt: {
        const auto v = variance_target(nu0, nu1, conv_);
        return a_optimal_prob(v.v0, v.v1);
      }
      case DesignCriterion::NeymanNaive: return a_optimal_prob(neyman_naive_target(nu0), neyman_naive_target(nu1));
      case DesignCriterion::Uniform: return 0.5;
      case DesignCriterion::DOpt:
      case DesignCriterion::EOpt: {
        const auto& w = weight_[1 - CrossFitState::fold_of(r)];
        if (w.size() == 0) return 0.5;
        const double q0 = std::max(0.0, (w * sigma_a_matrix(nu0, conv_)).trace());
        const double q1 = std::max(0.0, (w * sigma_a_matrix(nu1, conv_)).trace());
        return a_optimal_prob(q0, q1);
      }
    }
    return 0.5;
  }

 private:
  const ExperimentConfig& cfg_;
  TieConvention conv_;
  DesignCriterion criterion_;
  long seen_generation_ = -1;
  Eigen::MatrixXd weight_[2];
};

}  // namespace detail

class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    try {
      dgp_ = cfg_.dgp.build();
    } catch (const CalibrationError& e) {
      throw ConfigError(std::string("dgp calibration failed: ") + e.what());
    } catch (const InvariantError& e) {
      throw ConfigError(std::string("invalid dgp: ") + e.what());
    }
    tau_ = true_tau(*dgp_);
  }

  Experiment(ExperimentConfig cfg, std::shared_ptr<const Dgp> dgp) : cfg_(std::move(cfg)), dgp_(std::move(dgp)) {
    cfg_.validate();
    tau_ = true_tau(*dgp_);
  }

  const ExperimentConfig& config() const noexcept { return cfg_; }
  const Dgp& dgp() const noexcept { return *dgp_; }
  std::shared_ptr<const Dgp> dgp_ptr() const noexcept { return dgp_; }
  const std::vector<double>& tau() const noexcept { return tau_; }

  /// One variant, one seed. Writes the per-round CSV when csv is non-null.
  SeedVariantResult run_variant(Variant v, std::uint64_t seed, std::ostream* csv = nullptr,
                                const RunOptions& opt = {}) const {
    const auto tr = traits(v);
    const int t_max = dgp_->t_max();
    const auto h = static_cast<std::size_t>(t_max) + 1;
    const auto conv = dgp_->convention();
    const long rounds = cfg_.rounds;
    const long burn_in = cfg_.effective_burn_in();
    const double z = normal_quantile(1.0 - cfg_.alpha / 2.0);
    const double rho = cfg_.effective_rho();
    const long cs_start = cfg_.effective_cs_start();

    CrossFitState cf(learner_for(v, cfg_.learner), t_max, conv, dgp_, cfg_.batch_size, cfg_.refit_mode,
                     tr.estimation == Estimation::Plugin);
    detail::AllocationRule rule(cfg_, tr, conv);
    AseState state(h);
    ApoCurveState apo(h);
    const CounterRng assign(seed, Stream::Assignment, variant_id(v));
    const CounterRng outcome[2] = {CounterRng(seed, Stream::Outcome, 0), CounterRng(seed, Stream::Outcome, 1)};
    std::vector<std::vector<double>> xs;

    // Plug-in running sum of S(x,1) - S(x,0) under the current full model.
    std::vector<double> plug_sum(h, 0.0);
    long plug_generation = -1;
    auto plug_diff = [&](const std::vector<double>& x) {
      const auto s1 = event_survival_path(cf.predict_full(x, 1));
      const auto s0 = event_survival_path(cf.predict_full(x, 0));
      std::vector<double> d(h);
      for (std::size_t t = 0; t < h; ++t) d[t] = s1[t] - s0[t];
      return d;
    };

    SeedVariantResult res;
    res.variant = v;
    if (opt.keep_curves) {
      res.mse.reserve(static_cast<std::size_t>(rounds));
      if (tr.estimation != Estimation::Plugin) res.coverage.reserve(static_cast<std::size_t>(rounds));
    }
    res.cs_covered.assign(h, 1);

    if (csv) *csv << "round,horizon,tau_hat,ci_lo,ci_hi,cs_lo,cs_hi,pi_realized,arm\n";

    std::vector<double> tau_hat(h);
    for (long r = 1; r <= rounds; ++r) {
      auto x = dgp_->covariate_for_round(seed, static_cast<std::uint64_t>(r));
      const auto [nu0, nu1] = cf.predict_or_fallback(r, x);

      double pi = cfg_.initial_policy;
      if (tr.adaptive && r > burn_in && cf.has_model_for(r)) {
        rule.refresh(cf, xs, r);
        pi = truncate(rule.raw(r, nu0, nu1), r, cfg_.truncation).truncated;
      }
      if (tr.adaptive && r > burn_in) {
        res.pi_min = std::min(res.pi_min, pi);
        res.pi_max = std::max(res.pi_max, pi);
      }
      const int arm = assign.uniform(static_cast<std::uint64_t>(r)) < pi ? 1 : 0;
      res.arm1 += arm;
      const auto atom =
          sample_outcome(dgp_->hazards(x, arm), conv, outcome[arm].uniform(static_cast<std::uint64_t>(r)));
      Observation obs{x, arm, atom.t_tilde, atom.event, r};

      switch (tr.estimation) {
        case Estimation::Eif:
          state.update(eif_pseudo_outcome(obs, pi, nu0, nu1, conv));
          apo.update(obs, pi, nu0, nu1, conv);
          break;
        case Estimation::NaiveIpw: state.update(naive_ipw_pseudo_outcome(obs, pi, nu0, nu1)); break;
        case Estimation::Plugin: break;
      }
      cf.update(obs);
      xs.push_back(std::move(x));

      std::vector<double> lo(h, std::numeric_limits<double>::quiet_NaN()), hi = lo, cs_lo = lo, cs_hi = lo;
      if (tr.estimation == Estimation::Plugin) {
        if (!cf.has_full()) {
          tau_hat = plug_diff(xs.back());  // the marginal fallback does not depend on x
        } else {
          if (cf.generation() != plug_generation) {
            plug_generation = cf.generation();
            std::fill(plug_sum.begin(), plug_sum.end(), 0.0);
            for (const auto& xx : xs) {
              const auto d = plug_diff(xx);
              for (std::size_t t = 0; t < h; ++t) plug_sum[t] += d[t];
            }
          } else {
            const auto d = plug_diff(xs.back());
            for (std::size_t t = 0; t < h; ++t) plug_sum[t] += d[t];
          }
          for (std::size_t t = 0; t < h; ++t) tau_hat[t] = plug_sum[t] / static_cast<double>(xs.size());
        }
      } else {
        tau_hat = state.estimate();
        const std::vector<double> var = r >= 2 ? state.variance() : std::vector<double>(h, 0.0);
        double covered = 0.0;
        for (std::size_t t = 0; t < h; ++t) {
          const double csr = cs_radius(r, var[t], cfg_.alpha, rho);
          cs_lo[t] = tau_hat[t] - csr;
          cs_hi[t] = tau_hat[t] + csr;
          if (r >= cs_start && !(cs_lo[t] <= tau_[t] && tau_[t] <= cs_hi[t])) res.cs_covered[t] = 0;
          if (r >= 2) {
            const double ftr = z * std::sqrt(var[t] / static_cast<double>(r));
            lo[t] = tau_hat[t] - ftr;
            hi[t] = tau_hat[t] + ftr;
            if (csr < ftr) res.cs_never_narrower = false;
            if (lo[t] <= tau_[t] && tau_[t] <= hi[t]) covered += 1.0;
          }
        }
        const double cov = r >= 2 ? covered / static_cast<double>(h) : std::numeric_limits<double>::quiet_NaN();
        if (opt.keep_curves) res.coverage.push_back(cov);
        if (r == rounds) res.coverage_final = cov;
      }

      double mse = 0.0;
      for (std::size_t t = 0; t < h; ++t) mse += (tau_hat[t] - tau_[t]) * (tau_hat[t] - tau_[t]);
      mse /= static_cast<double>(h);
      if (!std::isfinite(mse)) throw NumericalError("non-finite estimate in " + to_string(v) + " at round " +
                                                    std::to_string(r));
      if (opt.keep_curves) res.mse.push_back(mse);
      if (r == rounds) res.mse_final = mse;

      if (csv) {
        for (std::size_t t = 0; t < h; ++t) {
          *csv << r << ',' << t << ',' << detail::fmt(tau_hat[t]) << ',' << detail::fmt(lo[t]) << ','
               << detail::fmt(hi[t]) << ',' << detail::fmt(cs_lo[t]) << ',' << detail::fmt(cs_hi[t]) << ','
               << detail::fmt(pi) << ',' << arm << '\n';
        }
      }
    }
    res.tau_final = tau_hat;
    if (tr.estimation == Estimation::Eif && rounds >= 2) {
      for (int a = 0; a < 2; ++a) {
        res.apo[a] = apo.arm(a).estimate();
        res.apo_se[a] = apo.arm(a).variance();
        for (auto& s : res.apo_se[a]) s = std::sqrt(s / static_cast<double>(rounds));
      }
    }
    return res;
  }

  /// All configured variants for one seed. With csv_dir set, writes
  /// <csv_dir>/seed_<seed>/<VARIANT>.csv.
  SeedResult run_single(std::uint64_t seed, const std::string& csv_dir = {}, const RunOptions& opt = {}) const {
    SeedResult out;
    out.seed = seed;
    std::filesystem::path dir;
    if (!csv_dir.empty()) {
      dir = std::filesystem::path(csv_dir) / ("seed_" + std::to_string(seed));
      std::filesystem::create_directories(dir);
    }
    for (auto v : cfg_.variants) {
      if (csv_dir.empty()) {
        out.variants.push_back(run_variant(v, seed, nullptr, opt));
      } else {
        std::ostringstream buf;
        out.variants.push_back(run_variant(v, seed, &buf, opt));
        std::ofstream f(dir / (to_string(v) + ".csv"), std::ios::binary);
        f << buf.str();
        if (!f) throw std::runtime_error("failed writing " + (dir / (to_string(v) + ".csv")).string());
      }
    }
    return out;
  }

  /// All seeds, in parallel over seeds; results are ordered like the seed list.
  std::vector<SeedResult> run_seeds(int threads = 1, const std::string& csv_dir = {}, const RunOptions& opt = {}) const {
    const auto n = cfg_.seeds.size();
    std::vector<SeedResult> results(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (;;) {
        const auto k = next.fetch_add(1);
        if (k >= n) return;
        try {
          results[k] = run_single(cfg_.seeds[k], csv_dir, opt);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    };
    const int t = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (t == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < t; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
  }

 private:
  ExperimentConfig cfg_;
  std::shared_ptr<const Dgp> dgp_;
  std::vector<double> tau_;
};

struct VariantSummary {
  Variant variant = Variant::Ase;
  std::vector<double> mse_mean, mse_se;  // per round
  std::vector<double> rel_mse, rel_mse_se;  // per round, relative to ORACLE (empty without it)
  std::vector<double> coverage;  // per round, mean over seeds and horizons
  double mse_final = 0.0;
  double mse_final_se = 0.0;
  double rel_mse_final = std::numeric_limits<double>::quiet_NaN();
  double coverage_final = std::numeric_limits<double>::quiet_NaN();
  double cs_uniform_coverage = std::numeric_limits<double>::quiet_NaN();  // mean over horizons and seeds
  std::vector<double> cs_uniform_coverage_by_horizon;
  double cs_never_narrower_fraction = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> bias, bias_se;  // final tau_hat - tau per horizon
  double arm1_fraction = 0.0;
  std::vector<double> final_mse_per_seed;
};

struct SummaryMetrics {
  std::vector<std::uint64_t> seeds;
  std::vector<double> tau;
  long rounds = 0;
  std::vector<VariantSummary> variants;

  bool has(Variant v) const {
    return std::any_of(variants.begin(), variants.end(), [&](const auto& s) { return s.variant == v; });
  }
  const VariantSummary& at(Variant v) const {
    for (const auto& s : variants) {
      if (s.variant == v) return s;
    }
    throw std::out_of_range("variant " + to_string(v) + " not in summary");
  }
};

namespace detail {

inline void mean_se(const std::vector<double>& xs, double& mean, double& se) {
  const double n = static_cast<double>(xs.size());
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace detail

/// Deterministic reduction over seed results (order of the input).
inline SummaryMetrics summarize(const std::vector<SeedResult>& results, const std::vector<double>& tau, long rounds) {
  if (results.empty()) throw std::invalid_argument("summarize: no seeds");
  SummaryMetrics out;
  out.tau = tau;
  out.rounds = rounds;
  for (const auto& r : results) out.seeds.push_back(r.seed);
  const auto nv = results.front().variants.size();
  const auto h = tau.size();
  for (std::size_t k = 0; k < nv; ++k) {
    VariantSummary s;
    s.variant = results.front().variants[k].variant;
    const bool curves = !results.front().variants[k].mse.empty();
    const bool has_cov = !results.front().variants[k].coverage.empty();
    if (curves) {
      s.mse_mean.resize(static_cast<std::size_t>(rounds));
      s.mse_se.resize(static_cast<std::size_t>(rounds));
      std::vector<double> col(results.size());
      for (std::size_t r = 0; r < static_cast<std::size_t>(rounds); ++r) {
        for (std::size_t j = 0; j < results.size(); ++j) col[j] = results[j].variants[k].mse[r];
        detail::mean_se(col, s.mse_mean[r], s.mse_se[r]);
      }
    }
    if (has_cov) {
      s.coverage.resize(static_cast<std::size_t>(rounds));
      for (std::size_t r = 0; r < static_cast<std::size_t>(rounds); ++r) {
        double acc = 0.0;
        for (const auto& res : results) acc += res.variants[k].coverage[r];
        s.coverage[r] = acc / static_cast<double>(results.size());
      }
    }
    for (const auto& res : results) s.final_mse_per_seed.push_back(res.variants[k].mse_final);
    detail::mean_se(s.final_mse_per_seed, s.mse_final, s.mse_final_se);

    const auto est = traits(s.variant).estimation;
    if (est != Estimation::Plugin) {
      double cov = 0.0;
      double never = 0.0;
      s.cs_uniform_coverage_by_horizon.assign(h, 0.0);
      for (const auto& res : results) {
        const auto& vr = res.variants[k];
        cov += vr.coverage_final;
        never += vr.cs_never_narrower ? 1.0 : 0.0;
        for (std::size_t t = 0; t < h; ++t) s.cs_uniform_coverage_by_horizon[t] += vr.cs_covered[t];
      }
      const double n = static_cast<double>(results.size());
      s.coverage_final = cov / n;
      s.cs_never_narrower_fraction = never / n;
      double avg = 0.0;
      for (auto& c : s.cs_uniform_coverage_by_horizon) {
        c /= n;
        avg += c;
      }
      s.cs_uniform_coverage = avg / static_cast<double>(h);
    }
    s.bias.assign(h, 0.0);
    s.bias_se.assign(h, 0.0);
    for (std::size_t t = 0; t < h; ++t) {
      std::vector<double> err;
      for (const auto& res : results) err.push_back(res.variants[k].tau_final[t] - tau[t]);
      detail::mean_se(err, s.bias[t], s.bias_se[t]);
    }
    double arm1 = 0.0;
    for (const auto& res : results) arm1 += static_cast<double>(res.variants[k].arm1);
    s.arm1_fraction = arm1 / (static_cast<double>(results.size()) * static_cast<double>(rounds));
    out.variants.push_back(std::move(s));
  }

  if (out.has(Variant::Oracle)) {
    const auto oracle = out.at(Variant::Oracle);
    for (auto& s : out.variants) {
      s.rel_mse_final = s.mse_final / oracle.mse_final;
      if (!s.mse_mean.empty() && !oracle.mse_mean.empty()) {
        s.rel_mse.resize(s.mse_mean.size());
        s.rel_mse_se.resize(s.mse_mean.size());
        for (std::size_t r = 0; r < s.mse_mean.size(); ++r) {
          const double rel = s.mse_mean[r] / oracle.mse_mean[r];
          s.rel_mse[r] = rel;
          const double a = s.mse_mean[r] > 0 ? s.mse_se[r] / s.mse_mean[r] : 0.0;
          const double b = oracle.mse_mean[r] > 0 ? oracle.mse_se[r] / oracle.mse_mean[r] : 0.0;
          s.rel_mse_se[r] = s.variant == Variant::Oracle ? 0.0 : rel * std::sqrt(a * a + b * b);
        }
      }
    }
  }
  return out;
}

/// Relative MSE of a variant at the final round; requires ORACLE in the roster.
inline double relative_mse(const SummaryMetrics& s, Variant v) {
  if (!s.has(Variant::Oracle)) throw ConfigError("relative MSE requires the ORACLE variant");
  return s.at(v).mse_final / s.at(Variant::Oracle).mse_final;
}

inline SummaryMetrics run_many(const Experiment& e, int threads = 1, const std::string& csv_dir = {},
                               const RunOptions& opt = {}) {
  return summarize(e.run_seeds(threads, csv_dir, opt), e.tau(), e.config().rounds);
}

inline nlohmann::json to_json(const SummaryMetrics& s) {
  nlohmann::json j;
  j["seeds"] = s.seeds;
  j["rounds"] = s.rounds;
  j["tau"] = s.tau;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const auto& v : s.variants) {
    nlohmann::json o;
    o["mse_final"] = num(v.mse_final);
    o["mse_final_se"] = num(v.mse_final_se);
    o["relative_mse_final"] = num(v.rel_mse_final);
    o["coverage_final"] = num(v.coverage_final);
    o["cs_uniform_coverage"] = num(v.cs_uniform_coverage);
    o["cs_never_narrower_fraction"] = num(v.cs_never_narrower_fraction);
    o["bias"] = v.bias;
    o["bias_se"] = v.bias_se;
    o["arm1_fraction"] = v.arm1_fraction;
    j["variants"][to_string(v.variant)] = o;
  }
  return j;
}

/// round, then per variant: mse, mse_se, rel_mse, rel_mse_se, coverage.
inline void write_curves_csv(const SummaryMetrics& s, std::ostream& out) {
  out << "round";
  for (const auto& v : s.variants) {
    const auto n = to_string(v.variant);
    out << ',' << n << "_mse," << n << "_mse_se," << n << "_rel_mse," << n << "_rel_mse_se," << n << "_coverage";
  }
  out << '\n';
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (long r = 1; r <= s.rounds; ++r) {
    const auto k = static_cast<std::size_t>(r - 1);
    out << r;
    for (const auto& v : s.variants) {
      auto at = [&](const std::vector<double>& xs) { return k < xs.size() ? xs[k] : nan; };
      out << ',' << detail::fmt(at(v.mse_mean)) << ',' << detail::fmt(at(v.mse_se)) << ','
          << detail::fmt(at(v.rel_mse)) << ',' << detail::fmt(at(v.rel_mse_se)) << ','
          << detail::fmt(at(v.coverage));
    }
    out << '\n';
  }
}

}  // namespace ase
