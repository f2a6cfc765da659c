// Command-line front end: simulate, policy, reproduce.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ase/ase.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

int cmd_simulate(const std::string& config_path, std::optional<int> seeds, const std::string& out, int threads) {
  auto cfg = ase::load_config(config_path);
  if (seeds) {
    if (*seeds < 1) throw ase::ConfigError("--seeds must be >= 1");
    const auto base = cfg.seeds.front();
    cfg.seeds.clear();
    for (int k = 0; k < *seeds; ++k) cfg.seeds.push_back(base + static_cast<std::uint64_t>(k));
  }
  if (!out.empty()) cfg.output_dir = out;
  ase::Experiment e(cfg);
  const auto summary = ase::run_many(e, threads, cfg.output_dir);
  if (!cfg.output_dir.empty()) {
    const std::filesystem::path dir(cfg.output_dir);
    std::ofstream(dir / "config.json", std::ios::binary) << ase::to_json(cfg).dump(2) << '\n';
    std::ofstream(dir / "summary.json", std::ios::binary) << ase::to_json(summary).dump(2) << '\n';
    std::ofstream curves(dir / "curves.csv", std::ios::binary);
    ase::write_curves_csv(summary, curves);
  }
  std::printf("%-12s %12s %12s %10s %10s\n", "variant", "mse", "rel_mse", "coverage", "arm1");
  for (const auto& v : summary.variants) {
    std::printf("%-12s %12.4e %12.4f %10.4f %10.4f\n", ase::to_string(v.variant).c_str(), v.mse_final,
                v.rel_mse_final, v.coverage_final, v.arm1_fraction);
  }
  return kOk;
}

int cmd_policy(const std::string& dgp_kind, const std::string& criterion, int grid, double alpha,
               const std::string& tie) {
  if (grid < 1) throw ase::ConfigError("--grid must be >= 1");
  ase::DgpConfig dc;
  dc.kind = dgp_kind;
  dc.conv = ase::tie_convention_from_string(tie);
  const auto dgp = dc.build();
  const auto crit = ase::design_criterion_from_string(criterion);
  ase::CovariateGrid g;
  if (dgp_kind == "twins") {
    g = dgp->quadrature();
  } else {
    g = ase::midpoint_grid(grid);
  }
  const auto truth = ase::ground_truth(*dgp, g);
  const auto problem = ase::problem_from_truth(truth);
  std::vector<double> pi;
  switch (crit) {
    case ase::DesignCriterion::AOpt: pi = ase::a_optimal_policy(problem, alpha); break;
    case ase::DesignCriterion::DOpt:
    case ase::DesignCriterion::EOpt: {
      const auto fp = crit == ase::DesignCriterion::DOpt ? ase::d_optimal_policy(problem, alpha)
                                                         : ase::e_optimal_policy(problem, alpha);
      if (!fp.converged) {
        throw ase::NumericalError("fixed point did not converge; last residual " + std::to_string(fp.residual));
      }
      pi = fp.policy;
      break;
    }
    case ase::DesignCriterion::NeymanNaive:
      for (const auto& x : g.points) {
        pi.push_back(ase::clip(ase::a_optimal_prob(ase::neyman_naive_target(dgp->hazards(x, 0)),
                                                   ase::neyman_naive_target(dgp->hazards(x, 1))),
                               alpha));
      }
      break;
    case ase::DesignCriterion::Uniform: pi.assign(g.size(), 0.5); break;
  }
  std::printf("x,weight,pi\n");
  for (std::size_t k = 0; k < g.size(); ++k) {
    std::printf("%.12g,%.12g,%.12g\n", g.points[k][0], g.weights[k], pi[k]);
  }
  return kOk;
}

int cmd_reproduce(const std::string& preset, const std::string& out, int threads, std::optional<int> seeds) {
  const auto p = ase::preset_from_string(preset);
  for (const auto& f : ase::reproduce(p, out, threads, seeds)) std::printf("%s\n", (std::filesystem::path(out) / f).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive survival experiments: simulation, allocation policies, figure presets"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for seed-parallel runs")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "Run an experiment config");
  std::string config_path;
  std::optional<int> seeds;
  std::string out;
  sim->add_option("--config", config_path, "JSON experiment config")->required();
  sim->add_option("--seeds", seeds, "Number of seeds, counting up from the first configured seed");
  sim->add_option("--out", out, "Output directory (overrides output_dir)");
  sim->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* pol = app.add_subcommand("policy", "Print the oracle allocation policy over a covariate grid");
  std::string dgp_kind = "synthetic";
  std::string criterion = "a";
  int grid = 21;
  double alpha = 0.05;
  std::string tie = "ties";
  pol->add_option("--dgp", dgp_kind, "synthetic or twins")->check(CLI::IsMember({"synthetic", "twins"}));
  pol->add_option("--criterion", criterion, "a, d, e or neyman")->check(CLI::IsMember({"a", "d", "e", "neyman"}));
  pol->add_option("--grid", grid, "Number of midpoint grid points on [0,1]");
  pol->add_option("--alpha", alpha, "Clip level");
  pol->add_option("--tie-convention", tie, "ties or no_ties")->check(CLI::IsMember({"ties", "no_ties"}));

  auto* rep = app.add_subcommand("reproduce", "Regenerate a figure preset as CSV");
  std::string preset;
  std::string rep_out;
  std::optional<int> rep_seeds;
  rep->add_option("--preset", preset, "SYN_FIG3, TWINS_FIG7, POLICY_FIG2, RATIO_FIG5 or CURVES_FIG6")->required();
  rep->add_option("--out", rep_out, "Output directory")->required();
  rep->add_option("--seeds", rep_seeds, "Override the preset's seed count");
  rep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) return cmd_simulate(config_path, seeds, out, threads);
    if (*pol) return cmd_policy(dgp_kind, criterion, grid, alpha, tie);
    if (*rep) return cmd_reproduce(preset, rep_out, threads, rep_seeds);
  } catch (const ase::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ase::InvariantError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ase::CalibrationError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
  return kOk;
}
