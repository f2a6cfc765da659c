// Acceptance checks 1-13. Prints one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 9        run the listed criteria only
//
// Exit status is 0 only if every requested criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "ase/ase.hpp"
#include "test_util.hpp"

#ifndef ASE_CLI_PATH
#define ASE_CLI_PATH "ase"
#endif

using namespace ase;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::vector<std::shared_ptr<const Dgp>> both_dgps(TieConvention conv) {
  TwinsDgpParams tp;
  tp.conv = conv;
  return {std::make_shared<SyntheticDgp>(SyntheticDgp::reference(conv)), std::make_shared<TwinsDgp>(tp)};
}

// 21-point lattice for the synthetic DGP, the two cells for Twins.
CovariateGrid check_grid(const Dgp& d) { return d.name() == "twins" ? d.quadrature() : lattice_grid(21); }

int threads() {
  if (const char* t = std::getenv("ASE_THREADS")) return std::max(1, std::atoi(t));
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Outcome c1_xi_mean_zero() {
  double worst = 0.0;
  for (auto conv : {TieConvention::Ties, TieConvention::NoTies}) {
    for (const auto& d : both_dgps(conv)) {
      for (const auto& x : check_grid(*d).points) {
        for (int a = 0; a < 2; ++a) {
          for (double m : testutil::exact_xi_mean(d->hazards(x, a), conv)) worst = std::max(worst, std::abs(m));
        }
      }
    }
  }
  return {worst <= 1e-12, "max |E xi| = " + f(worst)};
}

Outcome c2_eif_unbiased() {
  double worst = 0.0;
  for (auto conv : {TieConvention::Ties, TieConvention::NoTies}) {
    for (const auto& d : both_dgps(conv)) {
      for (const auto& x : check_grid(*d).points) {
        const auto nu0 = d->hazards(x, 0);
        const auto nu1 = d->hazards(x, 1);
        const auto s0 = event_survival_path(nu0);
        const auto s1 = event_survival_path(nu1);
        for (double pi : {0.2, 0.5, 0.8}) {
          const auto m = testutil::exact_eif_mean(nu0, nu1, pi, conv);
          for (std::size_t t = 0; t < m.size(); ++t) worst = std::max(worst, std::abs(m[t] - (s1[t] - s0[t])));
        }
      }
    }
  }
  return {worst <= 1e-12, "max |E phi - (S1 - S0)| = " + f(worst)};
}

Outcome c3_trace_agreement() {
  double worst = 0.0;
  for (auto conv : {TieConvention::Ties, TieConvention::NoTies}) {
    for (const auto& d : both_dgps(conv)) {
      for (const auto& x : check_grid(*d).points) {
        for (int a = 0; a < 2; ++a) {
          const auto nu = d->hazards(x, a);
          worst = std::max(worst, std::abs(sigma_a_matrix(nu, conv).trace() - variance_target(nu, conv)));
        }
      }
    }
  }
  return {worst <= 1e-10, "max |tr Sigma_a - V_a| = " + f(worst)};
}

Outcome c4_neyman_reduction() {
  double worst = 0.0;
  for (const auto& d : both_dgps(TieConvention::Ties)) {
    for (const auto& x : check_grid(*d).points) {
      for (int a = 0; a < 2; ++a) {
        auto nu = d->hazards(x, a);
        for (auto& h : nu.hazards) h.censor = 0.0;
        worst = std::max(worst, std::abs(variance_target(nu, TieConvention::Ties) - neyman_naive_target(nu)));
      }
    }
  }
  const double hand = variance_target(NuisanceAtArm::constant(1, 0.5, 0.0), TieConvention::Ties);
  const bool ok = worst <= 1e-12 && std::abs(hand - 0.4375) <= 1e-12;
  return {ok, "max |V - sum S(1-S)| = " + f(worst) + ", hand case V = " + f(hand, 10)};
}

Outcome c5_policy_sweep() {
  const auto sw = policy_sweep();
  const double gap = std::abs(sw.front().pi_star - sw.front().pi_neyman);
  bool inc = true;
  bool dec = true;
  for (std::size_t k = 1; k < sw.size(); ++k) {
    inc = inc && sw[k].pi_star > sw[k - 1].pi_star;
    dec = dec && sw[k].pi_star < sw[k - 1].pi_star;
  }
  const bool ok = sw.size() == 20 && gap <= 1e-10 && (inc || dec);
  return {ok, "|pi* - neyman| at lambda_G=0: " + f(gap) + ", strictly " +
                  (inc ? "increasing" : dec ? "decreasing" : "NOT monotone") + " over 20 points (" +
                  f(sw.front().pi_star) + " -> " + f(sw.back().pi_star) + ")"};
}

Outcome c6_ratio_closed_form() {
  double worst = 0.0;
  const auto sw = ratio_sweep();
  for (const auto& q : sw) worst = std::max(worst, std::abs(q.pi_enumeration - q.pi_closed_form));
  return {worst <= 1e-8 && sw.front().g == 0.25 && std::abs(sw.back().g - 4.0) < 1e-12,
          "max |enumeration - sqrt(g)/(sqrt(kappa)+sqrt(g))| over g in [0.25,4] = " + f(worst)};
}

Outcome c7_de_solvers() {
  const auto syn = SyntheticDgp::reference();
  const auto p = problem_from_truth(ground_truth(syn, midpoint_grid(21)));
  const auto a = a_optimal_policy(p, 0.05);
  const auto d = d_optimal_policy(p, 0.05);
  const auto e = e_optimal_policy(p, 0.05);
  auto logdet = [&](const std::vector<double>& pi) { return std::log(sigma_eff(pi, p).determinant()); };
  auto lmax = [&](const std::vector<double>& pi) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sigma_eff(pi, p)).eigenvalues().maxCoeff();
  };
  const double d_gain = logdet(a) - logdet(d.policy);
  const double e_gain = lmax(a) - lmax(e.policy);

  SyntheticDgpParams base;
  const SyntheticDgp single(calibrate_intercepts(CalibrationTargets::interpolate(0, 0.5, 0.5, 0.84, 0.84), base));
  const auto p0 = problem_from_truth(ground_truth(single, midpoint_grid(21)));
  const auto a0 = a_optimal_policy(p0, 0.05);
  const auto d0 = d_optimal_policy(p0, 0.05);
  const auto e0 = e_optimal_policy(p0, 0.05);
  double gap0 = 0.0;
  for (std::size_t k = 0; k < a0.size(); ++k) {
    gap0 = std::max({gap0, std::abs(d0.policy[k] - a0[k]), std::abs(e0.policy[k] - a0[k])});
  }
  const bool ok = d.residual <= 1e-8 && e.residual <= 1e-8 && gap0 <= 1e-10 && d_gain >= -1e-9 && e_gain >= -1e-9;
  return {ok, "residual D " + f(d.residual) + " E " + f(e.residual) + "; t_max=0 gap " + f(gap0) +
                  "; logdet gain " + f(d_gain) + ", lambda_max gain " + f(e_gain)};
}

Outcome c8_a_optimality() {
  const auto syn = SyntheticDgp::reference();
  const auto p = problem_from_truth(ground_truth(syn, midpoint_grid(21)));
  const double alpha = 0.05;
  const double best = sigma_eff(a_optimal_policy(p, alpha), p).trace();
  const CounterRng rng(8, Stream::Test);
  std::uint64_t c = 0;
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    std::vector<double> pi(p.size());
    for (auto& v : pi) v = alpha + (1 - 2 * alpha) * rng.uniform(c++);
    margin = std::min(margin, sigma_eff(pi, p).trace() - best);
  }
  return {margin >= -1e-9, "min over 100 random policies of tr(pi) - tr(pi*) = " + f(margin)};
}

Outcome c9_statistical_reproduction() {
  const auto cfg = synthetic_preset_config();
  const Experiment e(cfg);
  const auto seeds = e.run_seeds(threads(), {}, RunOptions{false});
  const auto s = summarize(seeds, e.tau(), cfg.rounds);
  const double rel_ase = relative_mse(s, Variant::Ase);
  const double rel_na = relative_mse(s, Variant::AseNa);
  const bool a_ok = rel_ase >= 1.0 && rel_ase <= 1.25 && rel_na >= 1.2 && rel_na <= 1.6;

  // Bootstrap over seeds for the final-round MSE ordering.
  const auto& o = s.at(Variant::Oracle).final_mse_per_seed;
  const auto& as = s.at(Variant::Ase).final_mse_per_seed;
  const auto& nv = s.at(Variant::A2ipwNaive).final_mse_per_seed;
  const auto& na = s.at(Variant::AseNa).final_mse_per_seed;
  const std::size_t n = o.size();
  const CounterRng boot(2025, Stream::Test);
  std::uint64_t c = 0;
  const int reps = 2000;
  int ordered = 0;
  for (int b = 0; b < reps; ++b) {
    double mo = 0, ma = 0, mn = 0, mna = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto j = std::min(n - 1, static_cast<std::size_t>(boot.uniform(c++) * static_cast<double>(n)));
      mo += o[j];
      ma += as[j];
      mn += nv[j];
      mna += na[j];
    }
    if (mo <= ma && ma < mn && mn < mna) ++ordered;
  }
  const double frac = static_cast<double>(ordered) / reps;
  const bool b_ok = frac >= 0.8;
  const double cov_ase = s.at(Variant::Ase).coverage_final;
  const double cov_naive = s.at(Variant::A2ipwNaive).coverage_final;
  const bool c_ok = cov_ase >= 0.91 && cov_ase <= 0.98 && cov_naive < 0.85;
  std::ostringstream d;
  d << n << " seeds, R=" << cfg.rounds << ": (a) " << (a_ok ? "ok" : "FAIL") << " rel MSE ASE " << f(rel_ase)
    << " [1,1.25], ASE_NA " << f(rel_na) << " [1.2,1.6]; (b) " << (b_ok ? "ok" : "FAIL")
    << " ORACLE<=ASE<A2IPW_NAIVE<ASE_NA in " << f(100 * frac, 3) << "% of resamples; (c) " << (c_ok ? "ok" : "FAIL")
    << " coverage ASE " << f(cov_ase) << " [0.91,0.98], A2IPW_NAIVE " << f(cov_naive) << " (<0.85)";
  d << "; rel MSE A2IPW_NAIVE " << f(relative_mse(s, Variant::A2ipwNaive)) << ", PLUGIN_NA "
    << f(relative_mse(s, Variant::PluginNa));
  return {a_ok && b_ok && c_ok, d.str()};
}

Outcome c10_anytime_valid() {
  auto cfg = synthetic_preset_config();
  cfg.variants = {Variant::Oracle};
  cfg.seeds.clear();
  for (std::uint64_t k = 1; k <= 200; ++k) cfg.seeds.push_back(k);
  cfg.cs_rho = rho_star(2000, 0.05);
  cfg.cs_start = 500;
  const Experiment e(cfg);
  const auto s = run_many(e, threads(), {}, RunOptions{false});
  const auto& v = s.at(Variant::Oracle);
  double worst_h = 1.0;
  for (double c : v.cs_uniform_coverage_by_horizon) worst_h = std::min(worst_h, c);
  const bool ok = v.cs_uniform_coverage >= 0.93 && v.cs_never_narrower_fraction == 1.0;
  return {ok, "200 ORACLE seeds: time-uniform coverage over r in [500,2000] " + f(v.cs_uniform_coverage) +
                  " (worst horizon " + f(worst_h) + "); CS >= fixed-time radius in " +
                  f(100 * v.cs_never_narrower_fraction, 4) + "% of runs"};
}

// Largest |bias| / SE over horizons.
double max_z(const VariantSummary& v) {
  double z = 0.0;
  for (std::size_t t = 0; t < v.bias.size(); ++t) z = std::max(z, std::abs(v.bias[t]) / v.bias_se[t]);
  return z;
}

Outcome c11_robustness() {
  const int th = threads();
  // ASE_MS with oracle event hazards and a pooled constant censoring hazard.
  auto ms = synthetic_preset_config();
  ms.rounds = 20000;
  ms.burn_in = 1000;
  ms.learner.kind = LearnerKind::Oracle;
  ms.variants = {Variant::AseMs};
  ms.seeds.clear();
  for (std::uint64_t k = 1; k <= 100; ++k) ms.seeds.push_back(k);
  const double z_ms = max_z(run_many(Experiment(ms), th, {}, RunOptions{false}).at(Variant::AseMs));

  // NO_TIES corruption of one block, then both.
  auto corrupted = [&](double de, double dc) {
    auto c = synthetic_preset_config();
    c.dgp.conv = TieConvention::NoTies;
    c.learner.kind = LearnerKind::Corrupted;
    c.learner.corruption_event = de;
    c.learner.corruption_censor = dc;
    c.variants = {Variant::Ase};
    c.seeds.clear();
    for (std::uint64_t k = 1; k <= 200; ++k) c.seeds.push_back(k);
    return max_z(run_many(Experiment(c), th, {}, RunOptions{false}).at(Variant::Ase));
  };
  const double shift = 1.0;
  const double z_event = corrupted(shift, 0.0);
  const double z_censor = corrupted(0.0, shift);
  const double z_both = corrupted(shift, shift);
  const bool ok = z_ms <= 3.0 && z_event <= 3.0 && z_censor <= 3.0 && z_both > 3.0;
  return {ok, "max |bias|/SE over horizons: ASE_MS (R=20000, 100 seeds) " + f(z_ms, 3) +
                  "; NO_TIES logit shift " + f(shift) + " (200 seeds): event-only " + f(z_event, 3) +
                  ", censoring-only " + f(z_censor, 3) + ", both " + f(z_both, 3) + " (must exceed 3)"};
}

Outcome c12_rho_star() {
  double worst = 0.0;
  for (long r : {500L, 2000L}) {
    for (double a : {0.05, 0.01}) {
      const double rs = rho_star(r, a);
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 33; ++k) best = std::min(best, cs_radius(r, 1.0, a, rs * std::pow(64.0, k / 32.0) / 8.0));
      worst = std::max(worst, cs_radius(r, 1.0, a, rs) / best);
    }
  }
  return {worst <= 1.001, "max width(rho*) / grid minimum = " + f(worst, 10)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome c13_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("ase_determinism_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const auto cfg = root / "config.json";
  std::ofstream(cfg) << R"({"rounds": 400, "burn_in": 100, "batch": {"size": 50}, "seeds": [3, 4]})";
  auto run = [&](const std::string& out) {
    const std::string cmd = std::string(ASE_CLI_PATH) + " simulate --config " + cfg.string() + " --out " +
                            (root / out).string() + " > /dev/null";
    return std::system(cmd.c_str());
  };
  const int rc1 = run("a");
  const int rc2 = run("b");
  int files = 0;
  int diffs = 0;
  if (rc1 == 0 && rc2 == 0) {
    for (const auto& ent : fs::recursive_directory_iterator(root / "a")) {
      if (!ent.is_regular_file() || ent.path().extension() != ".csv") continue;
      ++files;
      const auto twin = root / "b" / fs::relative(ent.path(), root / "a");
      if (!fs::exists(twin) || slurp(ent.path()) != slurp(twin)) ++diffs;
    }
  }
  fs::remove_all(root);
  const bool ok = rc1 == 0 && rc2 == 0 && files > 0 && diffs == 0;
  return {ok, std::to_string(files) + " CSV files compared, " + std::to_string(diffs) + " differ (exit codes " +
                  std::to_string(rc1) + ", " + std::to_string(rc2) + ")"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // wall-clock limit, 0 for none
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exact mean-zero xi", 1.0, c1_xi_mean_zero},
      {2, "EIF unbiasedness", 1.0, c2_eif_unbiased},
      {3, "closed-form V_a equals trace of Sigma_a", 1.0, c3_trace_agreement},
      {4, "Neyman reduction without censoring", 0.0, c4_neyman_reduction},
      {5, "A-optimal policy vs shared censoring sweep", 1.0, c5_policy_sweep},
      {6, "censoring-ratio closed form", 0.0, c6_ratio_closed_form},
      {7, "D/E-optimal fixed points", 0.0, c7_de_solvers},
      {8, "A-optimality against random policies", 0.0, c8_a_optimality},
      {9, "statistical reproduction at desk scale", 180.0, c9_statistical_reproduction},
      {10, "anytime-valid confidence sequence", 300.0, c10_anytime_valid},
      {11, "robustness under misspecification", 300.0, c11_robustness},
      {12, "rho* optimality", 0.0, c12_rho_star},
      {13, "byte-identical simulate output", 0.0, c13_determinism},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] criterion %2d: %s | %s | %.2fs%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
