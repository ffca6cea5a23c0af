#pragma once

#include <array>
#include <vector>

#include "hypermass/grid.hpp"
#include "hypermass/metric.hpp"

namespace hypermass {

// Geometry of one r-slice at one sphere node. For n = 2 the tensors are
// chart components {theta theta, theta phi, phi phi}; for isotropic data with
// n >= 3 slot 0 holds the coefficient against the round metric.
struct SliceNode {
  SpherePoint x;
  double lapse_sq = 0.0;  // h = 1 + r^2 f
  std::array<double, 3> induced{};
  std::array<double, 3> second_form{};
  double mean = 0.0;
  double second_form_sq = 0.0;
  double slice_scalar = 0.0;
  double ric_nn = 0.0;
  double normal_mean_derivative = 0.0;  // N(H)
  double lapse_laplacian = 0.0;         // sqrt(h) Lap_slice (1 / sqrt(h))

  // S = S_slice + |B|^2 - H^2 + 2 Ric(N, N)
  double scalar() const {
    return slice_scalar + second_form_sq - mean * mean + 2.0 * ric_nn;
  }
};

struct SliceGeometry {
  double r = 0.0;
  int n = 2;
  std::vector<SliceNode> nodes;
};

// Exact slice geometry at (x, r). Throws degenerate_metric when the induced
// metric is not positive definite.
SliceNode slice_node(const RadialMetricSpec& spec, SpherePoint x, double r);

// All sphere nodes of grid at radius r (r must lie within the grid range).
SliceGeometry slice_geometry(const RadialMetricSpec& spec, double r, const Grid& grid);

double scalar_curvature_exact(const RadialMetricSpec& spec, SpherePoint x, double r);

// -n(n+1) f - n r f' + r^-n (n mu psi' - r mu psi'') f with signed mass aspect mu.
double scalar_leading_terms(int n, double r, double f, double f_r, RadialJet psi, double mu);

struct CurvatureSample {
  double exact = 0.0;
  double leading = 0.0;
  double remainder() const { return exact - leading; }
};

// Exact scalar curvature together with the leading terms at the same point.
CurvatureSample scalar_curvature_split(const RadialMetricSpec& spec, SpherePoint x, double r);

struct GridCurvature {
  std::vector<double> exact;     // [ir * sphere + is]
  std::vector<double> leading;
};

// Parallel map of scalar_curvature_split over the grid.
GridCurvature scalar_curvature_on_grid(const RadialMetricSpec& spec, const Grid& grid);

}  // namespace hypermass
