#include "hypermass/metric.hpp"

#include <cmath>
#include <memory>

#include "hypermass/errors.hpp"

namespace hypermass {

void RadialMetricSpec::validate() const {
  if (n < 2 || n > 6) fail(ErrorKind::unsupported, "sphere dimension n must lie in [2, 6]");
  if (!(R > 0.0)) fail(ErrorKind::range, "inner radius R must be positive");
  if (!f || !psi || !alpha) fail(ErrorKind::contract, "metric spec is missing a field");
  if (n >= 3 && !rotational()) {
    fail(ErrorKind::unsupported, "n >= 3 supports only x-independent f and isotropic alpha");
  }
}

bool RadialMetricSpec::rotational() const {
  return f->x_independent() && alpha->isotropic(R).has_value();
}

RadialJet RadialMetricSpec::alpha_weight(double r) const {
  const RadialJet p = psi->eval(r);
  const double a = std::pow(r, 1.0 - n);  // r^(1-n)
  const double a1 = (1.0 - n) * a / r;
  const double a2 = (1.0 - n) * (-static_cast<double>(n)) * a / (r * r);
  return {p.v * a, p.d1 * a + p.v * a1, p.d2 * a + 2.0 * p.d1 * a1 + p.v * a2};
}

std::array<double, 4> RadialMetricSpec::chart_components(SpherePoint x, double r) const {
  const double w = alpha_weight(r).v;
  const auto a = alpha->value(x, r);
  const double s = std::sin(x.theta);
  const double r2 = r * r;
  return {1.0 / (1.0 + r2 * f->value(x, r)), r2 + w * a[0], w * a[1], r2 * s * s + w * a[2]};
}

RadialMetricSpec hyperbolic_metric(int n, double R, double f_const) {
  RadialMetricSpec spec;
  spec.n = n;
  spec.R = R;
  spec.f = std::make_shared<ConstantScalar>(f_const);
  spec.psi = std::make_shared<ConstantProfile>(1.0);
  spec.alpha = make_zero_alpha();
  return spec;
}

}  // namespace hypermass
