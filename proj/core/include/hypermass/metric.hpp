#pragma once

#include <array>

#include "hypermass/fields.hpp"
#include "hypermass/grid.hpp"

namespace hypermass {

// g = dr^2 / (1 + r^2 f) + r^2 (omega + psi * alpha / r^(n+1)) on S^n x [R, inf).
struct RadialMetricSpec {
  int n = 2;
  double R = 1.0;
  ScalarFieldPtr f;
  ProfilePtr psi;
  AlphaFieldPtr alpha;

  // Throws unless the fields are present and the dimension is supported by
  // the data (n >= 3 requires x-independent f and isotropic alpha).
  void validate() const;
  bool rotational() const;
  // Angular block coefficient w(r) = psi r^(1-n) multiplying alpha, with derivatives.
  RadialJet alpha_weight(double r) const;
  // Chart components {rr, theta theta, theta phi, phi phi} at a point (n = 2).
  std::array<double, 4> chart_components(SpherePoint x, double r) const;
};

RadialMetricSpec hyperbolic_metric(int n, double R, double f_const = 1.0);

}  // namespace hypermass
