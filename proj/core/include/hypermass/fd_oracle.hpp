#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "hypermass/curvature.hpp"
#include "hypermass/grid.hpp"
#include "hypermass/metric.hpp"

namespace hypermass {

// Writes the D x D metric components (row-major) at a coordinate point.
using MetricSampler = std::function<void(std::span<const double> coords, std::span<double> out)>;

// Admissible coordinate box for stencil samples.
struct CoordinateBox {
  std::vector<double> lo;
  std::vector<double> hi;
};

// Fourth-order finite-difference metric jets from samples on a local stencil:
// 1 + 4D axis samples and 8 diagonal samples per coordinate pair.
template <int D>
MetricJets<D> fd_metric_jets(const MetricSampler& g, std::span<const double> point,
                             std::span<const double> steps, const CoordinateBox& box);

// Scalar curvature of an arbitrary D-dimensional metric from sampled
// components alone. Throws boundary when the stencil leaves the box.
double scalar_curvature_fd_oracle(int dim, const MetricSampler& g, std::span<const double> point,
                                  std::span<const double> steps, const CoordinateBox& box);

// Full metric of a radially-warped spec, in coordinates (r, theta, phi) for
// n = 2 and (r, chi_1, ..., chi_n) hyperspherical angles for isotropic data.
MetricSampler warped_metric_sampler(const RadialMetricSpec& spec);

struct OracleSteps {
  double radial_rel = 2.5e-3;  // radial step as a fraction of r
  double angular = 5e-3;     // radians
};

// Oracle on the warped metric restricted to r in [r_lo, r_hi]. For n >= 3 the
// sphere point is ignored and a fixed generic chart point is used.
double warped_scalar_oracle(const RadialMetricSpec& spec, SpherePoint x, double r, double r_lo,
                            double r_hi, OracleSteps steps = {});

}  // namespace hypermass
