// Experiment configuration: JSON schema, defaults and validation.
//
// Every object rejects keys it does not know. See README.md for the schema.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ase/allocation.hpp"
#include "ase/dgp.hpp"
#include "ase/estimator.hpp"
#include "ase/nuisance.hpp"

namespace ase {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant { Ase, AseNa, AseMs, Plugin, PluginNa, A2ipwNaive, Oracle, OracleNa };

inline constexpr Variant kAllVariants[] = {Variant::Ase,    Variant::AseNa,      Variant::AseMs,  Variant::Plugin,
                                           Variant::PluginNa, Variant::A2ipwNaive, Variant::Oracle, Variant::OracleNa};

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Ase: return "ASE";
    case Variant::AseNa: return "ASE_NA";
    case Variant::AseMs: return "ASE_MS";
    case Variant::Plugin: return "PLUGIN";
    case Variant::PluginNa: return "PLUGIN_NA";
    case Variant::A2ipwNaive: return "A2IPW_NAIVE";
    case Variant::Oracle: return "ORACLE";
    case Variant::OracleNa: return "ORACLE_NA";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  for (auto v : kAllVariants) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown variant '" + s + "'");
}

/// Stable small id per variant, used as the assignment substream.
inline std::uint64_t variant_id(Variant v) { return static_cast<std::uint64_t>(v) + 1; }

inline std::string to_string(TieConvention c) { return c == TieConvention::Ties ? "ties" : "no_ties"; }

inline TieConvention tie_convention_from_string(const std::string& s) {
  if (s == "ties") return TieConvention::Ties;
  if (s == "no_ties") return TieConvention::NoTies;
  throw ConfigError("unknown tie_convention '" + s + "'");
}

struct DgpConfig {
  std::string kind = "synthetic";  // synthetic | twins
  TieConvention conv = TieConvention::Ties;
  std::optional<int> t_max;  // synthetic default 4, twins default 3
  // synthetic calibration endpoints
  double survival_first = 0.50;
  double survival_last = 0.02;
  double censoring_first = 0.84;
  double censoring_last = 0.62;
  // twins
  double p1 = 0.5;

  int horizon() const { return t_max ? *t_max : (kind == "twins" ? 3 : 4); }

  std::shared_ptr<const Dgp> build() const {
    if (kind == "synthetic") {
      SyntheticDgpParams base;
      base.conv = conv;
      auto targets =
          CalibrationTargets::interpolate(horizon(), survival_first, survival_last, censoring_first, censoring_last);
      return std::make_shared<SyntheticDgp>(calibrate_intercepts(targets, base));
    }
    if (kind == "twins") {
      TwinsDgpParams p;
      p.p1 = p1;
      p.t_max = horizon();
      p.conv = conv;
      return std::make_shared<TwinsDgp>(p);
    }
    throw ConfigError("unknown dgp kind '" + kind + "'");
  }
};

struct ExperimentConfig {
  DgpConfig dgp;
  long rounds = 2000;
  std::optional<long> burn_in;  // default min(1000, rounds / 2)
  int batch_size = 100;
  RefitMode refit_mode = RefitMode::Batch;
  double initial_policy = 0.5;
  HazardLearnerSpec learner;
  DesignCriterion criterion = DesignCriterion::AOpt;
  TruncationSchedule truncation;
  std::vector<Variant> variants{kAllVariants, kAllVariants + 8};
  std::vector<std::uint64_t> seeds{1};
  double alpha = 0.05;
  std::optional<double> cs_rho;  // default rho_star(rounds, alpha)
  std::optional<long> cs_start;  // first round of the time-uniform coverage window; default rounds / 4
  int policy_grid = 64;          // history points used by the D/E fixed point
  std::string output_dir;

  long effective_burn_in() const { return burn_in ? *burn_in : std::min(1000L, rounds / 2); }
  double effective_rho() const { return cs_rho ? *cs_rho : rho_star(rounds, alpha); }
  long effective_cs_start() const { return cs_start ? *cs_start : std::max(1L, rounds / 4); }

  void validate() const {
    if (dgp.kind != "synthetic" && dgp.kind != "twins") throw ConfigError("dgp.kind must be synthetic or twins");
    if (dgp.horizon() < 0) throw ConfigError("dgp.t_max must be >= 0");
    if (!(dgp.p1 >= 0.0 && dgp.p1 <= 1.0)) throw ConfigError("dgp.p1 must lie in [0,1]");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (effective_burn_in() < 0 || effective_burn_in() > rounds) throw ConfigError("burn_in must lie in [0, rounds]");
    if (batch_size < 1) throw ConfigError("batch.size must be >= 1");
    if (!(initial_policy > 0.0 && initial_policy < 1.0)) throw ConfigError("initial_policy must lie in (0,1)");
    if (variants.empty()) throw ConfigError("variants must be nonempty");
    if (std::set<Variant>(variants.begin(), variants.end()).size() != variants.size()) {
      throw ConfigError("variants must not repeat");
    }
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (cs_rho && !(*cs_rho > 0.0)) throw ConfigError("cs_rho must be > 0");
    if (effective_cs_start() < 1 || effective_cs_start() > rounds) throw ConfigError("cs_start must lie in [1, rounds]");
    if (policy_grid < 1) throw ConfigError("policy_grid must be >= 1");
    try {
      learner.check();
      truncation.check();
    } catch (const InvariantError& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::read;
  ExperimentConfig c;
  detail::reject_unknown(j,
                         {"dgp", "rounds", "burn_in", "batch", "initial_policy", "learner", "criterion", "truncation",
                          "variants", "seeds", "alpha", "cs_rho", "cs_start", "policy_grid", "output_dir"},
                         "config");
  if (j.contains("dgp")) {
    const auto& d = j.at("dgp");
    detail::reject_unknown(d,
                           {"kind", "tie_convention", "t_max", "survival_first", "survival_last", "censoring_first",
                            "censoring_last", "p1"},
                           "dgp");
    read(d, "kind", c.dgp.kind, "dgp");
    std::string conv = to_string(c.dgp.conv);
    read(d, "tie_convention", conv, "dgp");
    c.dgp.conv = tie_convention_from_string(conv);
    read(d, "t_max", c.dgp.t_max, "dgp");
    read(d, "survival_first", c.dgp.survival_first, "dgp");
    read(d, "survival_last", c.dgp.survival_last, "dgp");
    read(d, "censoring_first", c.dgp.censoring_first, "dgp");
    read(d, "censoring_last", c.dgp.censoring_last, "dgp");
    read(d, "p1", c.dgp.p1, "dgp");
  }
  read(j, "rounds", c.rounds, "config");
  read(j, "burn_in", c.burn_in, "config");
  if (j.contains("batch")) {
    const auto& b = j.at("batch");
    detail::reject_unknown(b, {"size", "mode"}, "batch");
    read(b, "size", c.batch_size, "batch");
    std::string mode = "batch";
    read(b, "mode", mode, "batch");
    if (mode == "batch") {
      c.refit_mode = RefitMode::Batch;
    } else if (mode == "per_fold") {
      c.refit_mode = RefitMode::PerFold;
    } else {
      throw ConfigError("batch.mode must be batch or per_fold");
    }
  }
  read(j, "initial_policy", c.initial_policy, "config");
  if (j.contains("learner")) {
    const auto& l = j.at("learner");
    detail::reject_unknown(l, {"kind", "bins", "smoothing", "degree", "ridge", "base", "corruption_event",
                               "corruption_censor"},
                           "learner");
    std::string kind = to_string(c.learner.kind);
    std::string base = to_string(c.learner.base);
    read(l, "kind", kind, "learner");
    read(l, "base", base, "learner");
    try {
      c.learner.kind = learner_kind_from_string(kind);
      c.learner.base = learner_kind_from_string(base);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    read(l, "bins", c.learner.bins, "learner");
    read(l, "smoothing", c.learner.smoothing, "learner");
    read(l, "degree", c.learner.degree, "learner");
    read(l, "ridge", c.learner.ridge, "learner");
    read(l, "corruption_event", c.learner.corruption_event, "learner");
    read(l, "corruption_censor", c.learner.corruption_censor, "learner");
  }
  if (j.contains("criterion")) {
    std::string crit;
    read(j, "criterion", crit, "config");
    try {
      c.criterion = design_criterion_from_string(crit);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("truncation")) {
    const auto& t = j.at("truncation");
    detail::reject_unknown(t, {"mode", "alpha", "k0", "exponent", "k_cap"}, "truncation");
    std::string mode = "constant";
    read(t, "mode", mode, "truncation");
    if (mode == "constant") {
      c.truncation.mode = TruncationSchedule::Mode::ConstantClip;
    } else if (mode == "growing") {
      c.truncation.mode = TruncationSchedule::Mode::Growing;
    } else {
      throw ConfigError("truncation.mode must be constant or growing");
    }
    read(t, "alpha", c.truncation.alpha_clip, "truncation");
    read(t, "k0", c.truncation.k0, "truncation");
    read(t, "exponent", c.truncation.exponent, "truncation");
    read(t, "k_cap", c.truncation.k_cap, "truncation");
  }
  if (j.contains("variants")) {
    std::vector<std::string> names;
    read(j, "variants", names, "config");
    c.variants.clear();
    for (const auto& n : names) c.variants.push_back(variant_from_string(n));
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_array()) {
      read(j, "seeds", c.seeds, "config");
    } else {
      detail::reject_unknown(s, {"count", "base"}, "seeds");
      long count = 1;
      std::uint64_t base = 1;
      read(s, "count", count, "seeds");
      read(s, "base", base, "seeds");
      if (count < 1) throw ConfigError("seeds.count must be >= 1");
      c.seeds.clear();
      for (long k = 0; k < count; ++k) c.seeds.push_back(base + static_cast<std::uint64_t>(k));
    }
  }
  read(j, "alpha", c.alpha, "config");
  read(j, "cs_rho", c.cs_rho, "config");
  read(j, "cs_start", c.cs_start, "config");
  read(j, "policy_grid", c.policy_grid, "config");
  read(j, "output_dir", c.output_dir, "config");
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dgp"] = {{"kind", c.dgp.kind},
              {"tie_convention", to_string(c.dgp.conv)},
              {"t_max", c.dgp.horizon()},
              {"survival_first", c.dgp.survival_first},
              {"survival_last", c.dgp.survival_last},
              {"censoring_first", c.dgp.censoring_first},
              {"censoring_last", c.dgp.censoring_last},
              {"p1", c.dgp.p1}};
  j["rounds"] = c.rounds;
  j["burn_in"] = c.effective_burn_in();
  j["batch"] = {{"size", c.batch_size}, {"mode", c.refit_mode == RefitMode::Batch ? "batch" : "per_fold"}};
  j["initial_policy"] = c.initial_policy;
  j["learner"] = {{"kind", to_string(c.learner.kind)},
                  {"bins", c.learner.bins},
                  {"smoothing", c.learner.smoothing},
                  {"degree", c.learner.degree},
                  {"ridge", c.learner.ridge},
                  {"base", to_string(c.learner.base)},
                  {"corruption_event", c.learner.corruption_event},
                  {"corruption_censor", c.learner.corruption_censor}};
  j["criterion"] = to_string(c.criterion);
  if (c.truncation.mode == TruncationSchedule::Mode::ConstantClip) {
    j["truncation"] = {{"mode", "constant"}, {"alpha", c.truncation.alpha_clip}};
  } else {
    j["truncation"] = {{"mode", "growing"},
                       {"k0", c.truncation.k0},
                       {"exponent", c.truncation.exponent},
                       {"k_cap", c.truncation.k_cap}};
  }
  std::vector<std::string> names;
  for (auto v : c.variants) names.push_back(to_string(v));
  j["variants"] = names;
  j["seeds"] = c.seeds;
  j["alpha"] = c.alpha;
  j["cs_rho"] = c.effective_rho();
  j["cs_start"] = c.effective_cs_start();
  j["policy_grid"] = c.policy_grid;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace ase
