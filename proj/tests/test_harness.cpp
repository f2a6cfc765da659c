#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ase/ase.hpp"

using namespace ase;

namespace {

ExperimentConfig small_config(std::vector<Variant> variants, long rounds = 400, int seeds = 1) {
  ExperimentConfig c;
  c.rounds = rounds;
  c.burn_in = rounds / 4;
  c.batch_size = 50;
  c.variants = std::move(variants);
  c.seeds.clear();
  for (int s = 1; s <= seeds; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  return c;
}

std::vector<std::string> csv_column(const std::string& csv, std::size_t col) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    for (std::size_t k = 0; k <= col; ++k) std::getline(ls, cell, ',');
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
  const auto c = parse_config_text("{}");
  EXPECT_EQ(c.rounds, 2000);
  EXPECT_EQ(c.effective_burn_in(), 1000);
  EXPECT_EQ(c.variants.size(), 8u);
  const auto again = parse_config(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Config, ParsesNestedSections) {
  const auto c = parse_config_text(R"({
    "dgp": {"kind": "twins", "tie_convention": "no_ties", "p1": 0.3},
    "rounds": 500, "burn_in": 100,
    "batch": {"size": 25, "mode": "per_fold"},
    "learner": {"kind": "binned", "bins": 2},
    "criterion": "d",
    "truncation": {"mode": "growing", "k0": 2, "exponent": 0.2, "k_cap": 50},
    "variants": ["ASE", "ORACLE"],
    "seeds": {"count": 3, "base": 10}
  })");
  EXPECT_EQ(c.dgp.kind, "twins");
  EXPECT_EQ(c.dgp.conv, TieConvention::NoTies);
  EXPECT_EQ(c.dgp.horizon(), 3);
  EXPECT_EQ(c.refit_mode, RefitMode::PerFold);
  EXPECT_EQ(c.learner.kind, LearnerKind::Binned);
  EXPECT_EQ(c.criterion, DesignCriterion::DOpt);
  EXPECT_EQ(c.truncation.mode, TruncationSchedule::Mode::Growing);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  EXPECT_EQ(c.variants, (std::vector<Variant>{Variant::Ase, Variant::Oracle}));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config_text(R"({"roundz": 10})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"dgp": {"kind": "synthetic", "extra": 1}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"rounds": 0})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"rounds": "ten"})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"variants": ["ASE", "ASE"]})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"variants": ["NOPE"]})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"truncation": {"alpha": 0.7}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"learner": {"kind": "gbm"}})"), ConfigError);
  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Variants, TraitsAndLearners) {
  HazardLearnerSpec spec;
  spec.kind = LearnerKind::Binned;
  EXPECT_EQ(learner_for(Variant::Oracle, spec).kind, LearnerKind::Oracle);
  EXPECT_EQ(learner_for(Variant::OracleNa, spec).kind, LearnerKind::Oracle);
  const auto ms = learner_for(Variant::AseMs, spec);
  EXPECT_EQ(ms.kind, LearnerKind::ConstantCensoringMs);
  EXPECT_EQ(ms.base, LearnerKind::Binned);  // same event learner as ASE
  EXPECT_EQ(learner_for(Variant::Ase, spec).kind, LearnerKind::Binned);
  EXPECT_FALSE(traits(Variant::AseNa).adaptive);
  EXPECT_FALSE(traits(Variant::PluginNa).adaptive);
  EXPECT_TRUE(traits(Variant::A2ipwNaive).neyman_allocation);
}

TEST(RunSingle, OracleNaMatchesIndependentIpw) {
  TwinsDgpParams p;
  p.censor = {0.0, 0.0};
  auto dgp = std::make_shared<TwinsDgp>(p);
  auto cfg = small_config({Variant::OracleNa}, 1500);
  cfg.dgp.kind = "twins";
  const Experiment e(cfg, dgp);
  const std::uint64_t seed = 42;
  const auto res = e.run_variant(Variant::OracleNa, seed);

  // Difference-of-survival-indicator AIPW with the true curves, coded from scratch.
  const CounterRng assign(seed, Stream::Assignment, variant_id(Variant::OracleNa));
  const CounterRng outc[2] = {CounterRng(seed, Stream::Outcome, 0), CounterRng(seed, Stream::Outcome, 1)};
  std::vector<double> acc(4, 0.0);
  for (long r = 1; r <= cfg.rounds; ++r) {
    const auto u = static_cast<std::uint64_t>(r);
    const int cell = CounterRng(seed, Stream::Covariate, 0).uniform(u) < p.p1 ? 1 : 0;
    const int a = assign.uniform(u) < 0.5 ? 1 : 0;
    const double h[2] = {p.event[static_cast<std::size_t>(cell)][0], p.event[static_cast<std::size_t>(cell)][1]};
    // Inverse CDF of a geometric event time with no censoring.
    const double v = outc[a].uniform(u);
    int t_event = 4;  // past the horizon
    double cdf = 0.0;
    double surv = 1.0;
    for (int t = 0; t <= 3; ++t) {
      cdf += surv * h[a];
      surv *= 1.0 - h[a];
      if (v < cdf) {
        t_event = t;
        break;
      }
    }
    for (int t = 0; t <= 3; ++t) {
      const double s1 = std::pow(1.0 - h[1], t + 1);
      const double s0 = std::pow(1.0 - h[0], t + 1);
      const double y = t_event > t ? 1.0 : 0.0;
      acc[static_cast<std::size_t>(t)] += s1 - s0 + (a == 1 ? (y - s1) / 0.5 : -(y - s0) / 0.5);
    }
  }
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(res.tau_final[t], acc[t] / cfg.rounds, 1e-10) << "t=" << t;
}

TEST(RunSingle, ClipBoundsRespected) {
  auto cfg = small_config({Variant::Ase}, 600);
  cfg.learner.kind = LearnerKind::Oracle;
  const Experiment e(cfg);
  const auto r = e.run_variant(Variant::Ase, 3);
  EXPECT_GE(r.pi_min, 0.05);
  EXPECT_LE(r.pi_max, 0.95);
  EXPECT_LT(r.pi_min, r.pi_max);
}

TEST(RunSingle, NonAdaptiveVariantsStayAtHalf) {
  const Experiment e(small_config({Variant::AseNa, Variant::PluginNa}, 300));
  for (auto v : {Variant::AseNa, Variant::PluginNa}) {
    std::ostringstream csv;
    e.run_variant(v, 7, &csv);
    for (const auto& pi : csv_column(csv.str(), 7)) EXPECT_EQ(pi, "0.5");
  }
}

TEST(RunSingle, CsvHeaderAndShape) {
  const Experiment e(small_config({Variant::Ase}, 50));
  std::ostringstream csv;
  e.run_variant(Variant::Ase, 1, &csv);
  const auto text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "round,horizon,tau_hat,ci_lo,ci_hi,cs_lo,cs_hi,pi_realized,arm");
  EXPECT_EQ(csv_column(text, 0).size(), 50u * 5u);
}

TEST(RunSingle, DeterministicAndCommonRandomNumbers) {
  const Experiment e(small_config({Variant::Ase, Variant::AseNa, Variant::Oracle}, 300));
  std::ostringstream a;
  std::ostringstream b;
  e.run_variant(Variant::Ase, 5, &a);
  e.run_variant(Variant::Ase, 5, &b);
  EXPECT_EQ(a.str(), b.str());
  // The roster does not change a variant's realisation.
  const Experiment solo(small_config({Variant::Ase}, 300));
  std::ostringstream c;
  solo.run_variant(Variant::Ase, 5, &c);
  EXPECT_EQ(a.str(), c.str());
}

TEST(RunSingle, AseAllocatesMoreToHigherVarianceArm) {
  auto cfg = small_config({Variant::Ase, Variant::AseNa}, 2000, 50);
  cfg.burn_in = 1000;
  cfg.learner.kind = LearnerKind::Oracle;
  const Experiment e(cfg);
  const auto g = ground_truth(e.dgp());
  double v0 = 0.0;
  double v1 = 0.0;
  for (std::size_t k = 0; k < g.grid.size(); ++k) {
    v0 += g.grid.weights[k] * std::sqrt(g.v0[k]);
    v1 += g.grid.weights[k] * std::sqrt(g.v1[k]);
  }
  const auto s = run_many(e, 1, {}, RunOptions{false});
  const double ase = s.at(Variant::Ase).arm1_fraction;
  const double na = s.at(Variant::AseNa).arm1_fraction;
  if (v1 > v0) {
    EXPECT_GT(ase, na);
  } else {
    EXPECT_LT(ase, na);
  }
}

TEST(RunMany, SingleSeedSummaryEqualsSeed) {
  const Experiment e(small_config({Variant::Ase, Variant::Oracle}, 300));
  const auto seed = e.run_single(1);
  const auto s = summarize({seed}, e.tau(), 300);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(s.variants[k].mse_final, seed.variants[k].mse_final);
    EXPECT_EQ(s.variants[k].mse_mean, seed.variants[k].mse);
    EXPECT_EQ(s.variants[k].mse_final_se, 0.0);
  }
  EXPECT_EQ(relative_mse(s, Variant::Oracle), 1.0);
  for (double v : s.at(Variant::Oracle).rel_mse) EXPECT_EQ(v, 1.0);
}

TEST(RunMany, RelativeMseNeedsOracle) {
  const Experiment e(small_config({Variant::Ase}, 100));
  const auto s = run_many(e);
  EXPECT_THROW(relative_mse(s, Variant::Ase), ConfigError);
}

TEST(RunMany, StandardErrorScalesWithSeeds) {
  auto cfg = small_config({Variant::OracleNa}, 400, 400);
  const Experiment e(cfg);
  const auto all = e.run_seeds(1, {}, RunOptions{false});
  const std::vector<SeedResult> half(all.begin(), all.begin() + 200);
  const auto s_half = summarize(half, e.tau(), 400);
  const auto s_all = summarize(all, e.tau(), 400);
  const double ratio = s_half.variants[0].mse_final_se / s_all.variants[0].mse_final_se;
  EXPECT_NEAR(ratio / std::sqrt(2.0), 1.0, 0.3);
}

TEST(RunMany, ThreadCountDoesNotChangeResults) {
  const Experiment e(small_config({Variant::Ase, Variant::Oracle}, 200, 4));
  const auto a = to_json(run_many(e, 1));
  const auto b = to_json(run_many(e, 3));
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Reproduce, PolicyAndRatioPresets) {
  const auto dir = std::filesystem::temp_directory_path() / "ase_reproduce_test";
  std::filesystem::remove_all(dir);
  reproduce(Preset::PolicyFig2, dir.string());
  reproduce(Preset::RatioFig5, dir.string());
  std::ifstream pol(dir / "policy_fig2.csv");
  std::string line;
  std::getline(pol, line);
  EXPECT_EQ(line, "lambda_g,pi_star,pi_neyman");
  std::getline(pol, line);
  std::istringstream first(line);
  double lg = 0, star = 0, ney = 0;
  char comma = 0;
  first >> lg >> comma >> star >> comma >> ney;
  EXPECT_EQ(lg, 0.0);
  EXPECT_NEAR(star, ney, 1e-10);
  std::ifstream ratio(dir / "ratio_fig5.csv");
  std::getline(ratio, line);
  int rows = 0;
  while (std::getline(ratio, line)) {
    std::istringstream ls(line);
    double g = 0, kappa = 0, en = 0, cf = 0;
    ls >> g >> comma >> kappa >> comma >> en >> comma >> cf;
    EXPECT_NEAR(en, cf, 1e-8);
    EXPECT_NEAR(cf, censoring_ratio_closed_form(kappa, g), 1e-10);
    ++rows;
  }
  EXPECT_EQ(rows, 25);
  EXPECT_THROW(preset_from_string("FIG99"), ConfigError);
  EXPECT_EQ(preset_from_string("syn_fig3"), Preset::SynFig3);
  std::filesystem::remove_all(dir);
}
