// Named presets that regenerate plot-ready CSV series.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ase/allocation.hpp"
#include "ase/harness.hpp"

namespace ase {

enum class Preset { SynFig3, TwinsFig7, PolicyFig2, RatioFig5, CurvesFig6 };

inline std::string to_string(Preset p) {
  switch (p) {
    case Preset::SynFig3: return "SYN_FIG3";
    case Preset::TwinsFig7: return "TWINS_FIG7";
    case Preset::PolicyFig2: return "POLICY_FIG2";
    case Preset::RatioFig5: return "RATIO_FIG5";
    case Preset::CurvesFig6: return "CURVES_FIG6";
  }
  return "?";
}

inline Preset preset_from_string(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto p : {Preset::SynFig3, Preset::TwinsFig7, Preset::PolicyFig2, Preset::RatioFig5, Preset::CurvesFig6}) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError("unknown preset '" + s + "'");
}

/// Desk-scale synthetic protocol: R = 2000, burn-in 1000, refits every 100
/// units, 50 seeds, every variant.
inline ExperimentConfig synthetic_preset_config() {
  ExperimentConfig c;
  c.dgp.kind = "synthetic";
  c.rounds = 2000;
  c.burn_in = 1000;
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 50; ++s) c.seeds.push_back(s);
  return c;
}

inline ExperimentConfig twins_preset_config() {
  auto c = synthetic_preset_config();
  c.dgp.kind = "twins";
  c.learner.kind = LearnerKind::Binned;
  c.learner.bins = 2;
  return c;
}

struct PolicySweepPoint {
  double lambda_g = 0.0;
  double pi_star = 0.5;
  double pi_neyman = 0.5;
};

/// A-optimal and Neyman allocation for constant arm event hazards as a shared
/// censoring hazard sweeps [lo, hi].
inline std::vector<PolicySweepPoint> policy_sweep(double event0 = 0.3, double event1 = 0.1, int t_max = 4,
                                                  int points = 20, double lo = 0.0, double hi = 0.4,
                                                  TieConvention conv = TieConvention::Ties) {
  std::vector<PolicySweepPoint> out;
  for (int k = 0; k < points; ++k) {
    const double g = points == 1 ? lo : lo + (hi - lo) * k / (points - 1);
    const auto nu0 = NuisanceAtArm::constant(t_max, event0, g);
    const auto nu1 = NuisanceAtArm::constant(t_max, event1, g);
    const auto v = variance_target(nu0, nu1, conv);
    out.push_back({g, a_optimal_prob(v.v0, v.v1), a_optimal_prob(neyman_naive_target(nu0), neyman_naive_target(nu1))});
  }
  return out;
}

struct RatioSweepPoint {
  double g = 1.0;
  double kappa = 1.0;
  double pi_enumeration = 0.5;
  double pi_closed_form = 0.5;
};

/// Hazards in which censoring happens only at time 0 and no events happen
/// at time 0, so that G_0(x,1) / G_0(x,0) = 1/g. Arm 1 is uncensored past 0
/// with probability 0.2, arm 0 with probability 0.2 g.
inline std::pair<NuisanceAtArm, NuisanceAtArm> ratio_censoring_arms(double g, double event0 = 0.3,
                                                                    double event1 = 0.15, int t_max = 4) {
  if (!(g > 0.0 && g <= 5.0)) throw std::invalid_argument("ratio_censoring_arms: g must lie in (0, 5]");
  auto nu0 = NuisanceAtArm::constant(t_max, event0, 0.0);
  auto nu1 = NuisanceAtArm::constant(t_max, event1, 0.0);
  nu0.hazards[0] = {0.0, 1.0 - 0.2 * g};
  nu1.hazards[0] = {0.0, 0.8};
  return {nu0, nu1};
}

inline std::vector<RatioSweepPoint> ratio_sweep(int points = 25, double lo = 0.25, double hi = 4.0,
                                                TieConvention conv = TieConvention::Ties) {
  std::vector<RatioSweepPoint> out;
  for (int k = 0; k < points; ++k) {
    const double g = points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / (points - 1));
    const auto [nu0, nu1] = ratio_censoring_arms(g);
    const double v0 = sigma_a_matrix(nu0, conv).trace();
    const double v1 = sigma_a_matrix(nu1, conv).trace();
    const double kappa = neyman_naive_target(nu0) / neyman_naive_target(nu1);
    out.push_back({g, kappa, a_optimal_prob(v0, v1), censoring_ratio_closed_form(kappa, g)});
  }
  return out;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

inline void write_run(const ExperimentConfig& cfg, const std::filesystem::path& dir, const std::string& stem,
                      int threads) {
  Experiment e(cfg);
  const auto s = run_many(e, threads);
  auto curves = open_out(dir / (stem + "_curves.csv"));
  write_curves_csv(s, curves);
  auto summary = open_out(dir / (stem + "_summary.json"));
  summary << to_json(s).dump(2) << '\n';
}

}  // namespace detail

/// Writes the preset's CSV series into out_dir and returns the files written.
inline std::vector<std::string> reproduce(Preset p, const std::string& out_dir, int threads = 1,
                                          std::optional<int> seed_count = std::nullopt) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto with_seeds = [&](ExperimentConfig c) {
    if (seed_count) {
      c.seeds.clear();
      for (int s = 1; s <= *seed_count; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    return c;
  };
  switch (p) {
    case Preset::SynFig3:
      detail::write_run(with_seeds(synthetic_preset_config()), dir, "syn_fig3", threads);
      files = {"syn_fig3_curves.csv", "syn_fig3_summary.json"};
      break;
    case Preset::TwinsFig7:
      detail::write_run(with_seeds(twins_preset_config()), dir, "twins_fig7", threads);
      files = {"twins_fig7_curves.csv", "twins_fig7_summary.json"};
      break;
    case Preset::PolicyFig2: {
      auto f = detail::open_out(dir / "policy_fig2.csv");
      f << "lambda_g,pi_star,pi_neyman\n";
      for (const auto& q : policy_sweep()) {
        f << detail::fmt(q.lambda_g) << ',' << detail::fmt(q.pi_star) << ',' << detail::fmt(q.pi_neyman) << '\n';
      }
      files = {"policy_fig2.csv"};
      break;
    }
    case Preset::RatioFig5: {
      auto f = detail::open_out(dir / "ratio_fig5.csv");
      f << "g,kappa,pi_enumeration,pi_closed_form\n";
      for (const auto& q : ratio_sweep()) {
        f << detail::fmt(q.g) << ',' << detail::fmt(q.kappa) << ',' << detail::fmt(q.pi_enumeration) << ','
          << detail::fmt(q.pi_closed_form) << '\n';
      }
      files = {"ratio_fig5.csv"};
      break;
    }
    case Preset::CurvesFig6: {
      auto cfg = synthetic_preset_config();
      cfg.variants = {Variant::Ase};
      cfg.seeds.clear();
      for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
      cfg = with_seeds(cfg);
      Experiment e(cfg);
      const auto runs = e.run_seeds(threads, {}, RunOptions{false});
      const auto h = static_cast<std::size_t>(e.dgp().t_max()) + 1;
      auto f = detail::open_out(dir / "curves_fig6.csv");
      f << "horizon,arm,estimate_mean,estimate_se,within_run_se,truth\n";
      for (int a = 0; a < 2; ++a) {
        const auto truth = true_survival_curve(e.dgp(), a);
        for (std::size_t t = 0; t < h; ++t) {
          std::vector<double> est;
          double within = 0.0;
          for (const auto& r : runs) {
            est.push_back(r.variants[0].apo[a][t]);
            within += r.variants[0].apo_se[a][t];
          }
          double m = 0.0;
          double se = 0.0;
          detail::mean_se(est, m, se);
          f << t << ',' << a << ',' << detail::fmt(m) << ',' << detail::fmt(se) << ','
            << detail::fmt(within / static_cast<double>(runs.size())) << ',' << detail::fmt(truth[t]) << '\n';
        }
      }
      files = {"curves_fig6.csv"};
      break;
    }
  }
  return files;
}

}  // namespace ase
