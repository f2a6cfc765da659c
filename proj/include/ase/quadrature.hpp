#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ase {

/// Nodes and weights of n-point Gauss-Legendre quadrature on [lo, hi].
/// Roots of P_n by Newton iteration from the Chebyshev-like initial guess.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  std::vector<double> nodes(static_cast<std::size_t>(n));
  std::vector<double> weights(static_cast<std::size_t>(n));
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(n - 1 - i);
    nodes[a] = mid - half * z;
    nodes[b] = mid + half * z;
    weights[a] = half * w;
    weights[b] = half * w;
  }
  return {nodes, weights};
}

/// Composite rule: n nodes on every piece between consecutive breakpoints.
inline std::pair<std::vector<double>, std::vector<double>> composite_gauss_legendre(
    int n, const std::vector<double>& breakpoints) {
  if (breakpoints.size() < 2) throw std::invalid_argument("composite_gauss_legendre: need an interval");
  std::vector<double> nodes;
  std::vector<double> weights;
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    auto [x, w] = gauss_legendre(n, breakpoints[k], breakpoints[k + 1]);
    nodes.insert(nodes.end(), x.begin(), x.end());
    weights.insert(weights.end(), w.begin(), w.end());
  }
  return {nodes, weights};
}

}  // namespace ase
