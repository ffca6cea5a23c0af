#pragma once

#include <array>

namespace hypermass {

// Metric with first and second coordinate derivatives at one point:
// dg[k][i][j] = d_k g_ij, ddg[k][l][i][j] = d_k d_l g_ij.
template <int D>
struct MetricJets {
  std::array<std::array<double, D>, D> g{};
  std::array<std::array<std::array<double, D>, D>, D> dg{};
  std::array<std::array<std::array<std::array<double, D>, D>, D>, D> ddg{};
};

template <int D>
struct Curvature {
  std::array<std::array<double, D>, D> ricci{};
  std::array<std::array<double, D>, D> inverse{};
  // Christoffel symbols of the second kind, christoffel[k][i][j] = Gamma^k_ij.
  std::array<std::array<std::array<double, D>, D>, D> christoffel{};
  double scalar = 0.0;
};

// Ricci and scalar curvature from first principles (Christoffel symbols and
// their derivatives). Throws degenerate_metric when g is singular.
template <int D>
Curvature<D> curvature_from_jets(const MetricJets<D>& m);

}  // namespace hypermass
