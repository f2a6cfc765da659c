// Enumeration helpers shared by the unit and acceptance tests.
#pragma once

#include <vector>

#include "ase/survival_core.hpp"

namespace testutil {

inline ase::Observation make_obs(int arm, const ase::OutcomeAtom& atom, double x = 0.5) {
  ase::Observation o;
  o.x = {x};
  o.arm = arm;
  o.t_tilde = atom.t_tilde;
  o.event = atom.event;
  return o;
}

/// E[phi_t | x] by summing over both arms and every outcome atom.
inline std::vector<double> exact_eif_mean(const ase::NuisanceAtArm& nu0, const ase::NuisanceAtArm& nu1, double pi,
                                          ase::TieConvention conv) {
  std::vector<double> m(nu0.size(), 0.0);
  for (int arm = 0; arm < 2; ++arm) {
    const double pa = arm == 1 ? pi : 1.0 - pi;
    for (const auto& atom : ase::outcome_atoms(arm == 1 ? nu1 : nu0, conv)) {
      const auto phi = ase::eif_pseudo_outcome(make_obs(arm, atom), pi, nu0, nu1, conv);
      for (std::size_t t = 0; t < m.size(); ++t) m[t] += pa * atom.prob * phi[t];
    }
  }
  return m;
}

/// E[phi_{a,t} | x] for the arm-a pseudo-outcome with P(A = 1) = pi.
inline std::vector<double> exact_apo_mean(const ase::NuisanceAtArm& nu0, const ase::NuisanceAtArm& nu1, int a,
                                          double pi, ase::TieConvention conv) {
  std::vector<double> m(nu0.size(), 0.0);
  const double pi_a = a == 1 ? pi : 1.0 - pi;
  for (int arm = 0; arm < 2; ++arm) {
    const double pa = arm == 1 ? pi : 1.0 - pi;
    for (const auto& atom : ase::outcome_atoms(arm == 1 ? nu1 : nu0, conv)) {
      const auto phi = ase::apo_pseudo_outcome(make_obs(arm, atom), a, pi_a, a == 1 ? nu1 : nu0, conv);
      for (std::size_t t = 0; t < m.size(); ++t) m[t] += pa * atom.prob * phi[t];
    }
  }
  return m;
}

/// sum_atoms prob * xi_t for every t.
inline std::vector<double> exact_xi_mean(const ase::NuisanceAtArm& nu, ase::TieConvention conv) {
  std::vector<double> m(nu.size(), 0.0);
  for (const auto& atom : ase::outcome_atoms(nu, conv)) {
    const auto path = ase::xi_path(make_obs(0, atom), nu, conv);
    for (std::size_t t = 0; t < m.size(); ++t) m[t] += atom.prob * path[t];
  }
  return m;
}

}  // namespace testutil
