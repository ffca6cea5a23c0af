#pragma once

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "hypermass/conformal_yamabe.hpp"
#include "hypermass/curvature.hpp"

namespace hypermass::detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Everything the d = 3 chart formulas need at one point.
struct ChartGeometry {
  CompactScalar scalar;
  Mat3 traceless{};  // rho^2 Ric0 of g
  Mat3 inverse{};    // e^{-1}
  std::array<double, 3> contracted{};  // e^{ij} Gamma_e^k_ij
  double inv_tt_defect = 0.0;
};

ChartGeometry chart_geometry(const MetricJets<3>& e, const std::array<double, 6>& excess, double t,
                             double theta);

// e^{-1} P e0^{-1} entry tt, i.e. 1 - e^{tt} from the excess P.
double inv_tt_defect(const Mat3& inverse, const std::array<double, 6>& excess, double theta);

MetricJets<3> jets_from(const ExcessJets& components);

// Finite-difference weights for derivatives 0..m at z from nodes x (Fornberg).
std::vector<std::vector<double>> fornberg(double z, std::span<const double> x, int m);

using Stencil = std::vector<std::pair<int, double>>;

// Derivative stencils on a uniform axis of n nodes and spacing h.
struct AxisStencils {
  std::vector<Stencil> first;
  std::vector<Stencil> second;
};
AxisStencils axis_stencils(int n, double h, int order);

// Central stencils with offsets for the reflected polar axis.
struct PolarStencils {
  Stencil first;
  Stencil second;
};
PolarStencils polar_stencils(double h, int order);

// Reflection of a polar index across the poles.
inline int reflect(int j, int n) {
  if (j < 0) return -1 - j;
  if (j >= n) return 2 * n - 1 - j;
  return j;
}

// Parity -1 fields change sign under the reflection.
struct GridDerivatives {
  std::vector<double> s, ss, x, xx, sx;
};
GridDerivatives grid_derivatives(const YamabeProblem& p, std::span<const double> f, int parity,
                                 int order);

// Problem on the grid of spec with node data from node(t, theta).
YamabeProblem make_problem(int d, const YamabeGridSpec& spec,
                           const std::function<YamabeNode(double, double)>& node);

}  // namespace hypermass::detail
