#include "hypermass/fd_oracle.hpp"

#include <array>
#include <cmath>
#include <string>

#include "hypermass/errors.hpp"

namespace hypermass {

namespace {

template <int D>
using Components = std::array<double, D * D>;

template <int D>
struct Stencil {
  const MetricSampler& g;
  std::array<double, D> x0;

  Components<D> at(std::array<double, D> offset) const {
    std::array<double, D> x = x0;
    for (int a = 0; a < D; ++a) x[a] += offset[a];
    Components<D> out;
    g(x, out);
    return out;
  }
};

}  // namespace

template <int D>
MetricJets<D> fd_metric_jets(const MetricSampler& g, std::span<const double> point,
                             std::span<const double> steps, const CoordinateBox& box) {
  Stencil<D> st{g, {}};
  for (int a = 0; a < D; ++a) {
    st.x0[a] = point[a];
    const double lo = a < static_cast<int>(box.lo.size()) ? box.lo[a] : -INFINITY;
    const double hi = a < static_cast<int>(box.hi.size()) ? box.hi[a] : INFINITY;
    if (point[a] - 2.0 * steps[a] < lo || point[a] + 2.0 * steps[a] > hi) {
      fail(ErrorKind::boundary, "finite-difference stencil leaves the domain along coordinate " +
                                    std::to_string(a));
    }
  }

  MetricJets<D> m;
  const Components<D> c0 = st.at({});
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m.g[i][j] = c0[i * D + j];

  for (int a = 0; a < D; ++a) {
    const double h = steps[a];
    std::array<double, D> o{};
    o[a] = h;
    const auto p1 = st.at(o);
    o[a] = 2 * h;
    const auto p2 = st.at(o);
    o[a] = -h;
    const auto m1 = st.at(o);
    o[a] = -2 * h;
    const auto m2 = st.at(o);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        const int k = i * D + j;
        m.dg[a][i][j] = (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * h);
        m.ddg[a][a][i][j] = (-p2[k] + 16.0 * p1[k] - 30.0 * c0[k] + 16.0 * m1[k] - m2[k]) / (12.0 * h * h);
      }
  }

  for (int a = 0; a < D; ++a)
    for (int b = a + 1; b < D; ++b) {
      const double ha = steps[a], hb = steps[b];
      auto diag = [&](double s, double t) {
        std::array<double, D> o{};
        o[a] = s;
        o[b] = t;
        return st.at(o);
      };
      const auto pp1 = diag(ha, hb), pm1 = diag(ha, -hb), mp1 = diag(-ha, hb), mm1 = diag(-ha, -hb);
      const auto pp2 = diag(2 * ha, 2 * hb), pm2 = diag(2 * ha, -2 * hb);
      const auto mp2 = diag(-2 * ha, 2 * hb), mm2 = diag(-2 * ha, -2 * hb);
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          const int k = i * D + j;
          const double d1 = (pp1[k] - pm1[k] - mp1[k] + mm1[k]) / (4.0 * ha * hb);
          const double d2 = (pp2[k] - pm2[k] - mp2[k] + mm2[k]) / (16.0 * ha * hb);
          m.ddg[a][b][i][j] = m.ddg[b][a][i][j] = (4.0 * d1 - d2) / 3.0;
        }
    }
  return m;
}

template MetricJets<2> fd_metric_jets<2>(const MetricSampler&, std::span<const double>,
                                         std::span<const double>, const CoordinateBox&);
template MetricJets<3> fd_metric_jets<3>(const MetricSampler&, std::span<const double>,
                                         std::span<const double>, const CoordinateBox&);
template MetricJets<4> fd_metric_jets<4>(const MetricSampler&, std::span<const double>,
                                         std::span<const double>, const CoordinateBox&);
template MetricJets<5> fd_metric_jets<5>(const MetricSampler&, std::span<const double>,
                                         std::span<const double>, const CoordinateBox&);
template MetricJets<6> fd_metric_jets<6>(const MetricSampler&, std::span<const double>,
                                         std::span<const double>, const CoordinateBox&);
template MetricJets<7> fd_metric_jets<7>(const MetricSampler&, std::span<const double>,
                                         std::span<const double>, const CoordinateBox&);

namespace {

template <int D>
double oracle_dim(const MetricSampler& g, std::span<const double> point,
                  std::span<const double> steps, const CoordinateBox& box) {
  return curvature_from_jets<D>(fd_metric_jets<D>(g, point, steps, box)).scalar;
}

}  // namespace

double scalar_curvature_fd_oracle(int dim, const MetricSampler& g, std::span<const double> point,
                                  std::span<const double> steps, const CoordinateBox& box) {
  if (static_cast<int>(point.size()) != dim || static_cast<int>(steps.size()) != dim) {
    fail(ErrorKind::contract, "oracle point/step dimension mismatch");
  }
  switch (dim) {
    case 2: return oracle_dim<2>(g, point, steps, box);
    case 3: return oracle_dim<3>(g, point, steps, box);
    case 4: return oracle_dim<4>(g, point, steps, box);
    case 5: return oracle_dim<5>(g, point, steps, box);
    case 6: return oracle_dim<6>(g, point, steps, box);
    case 7: return oracle_dim<7>(g, point, steps, box);
    default: fail(ErrorKind::unsupported, "oracle supports dimensions 2..7");
  }
}

MetricSampler warped_metric_sampler(const RadialMetricSpec& spec) {
  spec.validate();
  const int n = spec.n;
  if (n == 2 && !spec.rotational()) {
    return [spec](std::span<const double> x, std::span<double> out) {
      const auto c = spec.chart_components({x[1], x[2]}, x[0]);
      out[0] = c[0];
      out[1] = out[2] = out[3] = out[6] = 0.0;
      out[4] = c[1];
      out[5] = out[7] = c[2];
      out[8] = c[3];
    };
  }
  return [spec, n](std::span<const double> x, std::span<double> out) {
    const int d = n + 1;
    const double r = x[0];
    const double f = spec.f->value({}, r);
    const double c = spec.alpha->isotropic(r)->v;
    const double rho2 = r * r + spec.alpha_weight(r).v * c;
    for (int i = 0; i < d * d; ++i) out[i] = 0.0;
    out[0] = 1.0 / (1.0 + r * r * f);
    double w = rho2;
    for (int a = 1; a <= n; ++a) {
      out[a * d + a] = w;
      const double s = std::sin(x[a]);
      w *= s * s;
    }
  };
}

double warped_scalar_oracle(const RadialMetricSpec& spec, SpherePoint x, double r, double r_lo,
                            double r_hi, OracleSteps steps) {
  const int d = spec.n + 1;
  std::vector<double> point(d), h(d);
  CoordinateBox box{std::vector<double>(d, -INFINITY), std::vector<double>(d, INFINITY)};
  point[0] = r;
  h[0] = steps.radial_rel * r;
  box.lo[0] = r_lo;
  box.hi[0] = r_hi;
  for (int a = 1; a < d; ++a) {
    h[a] = steps.angular;
    box.lo[a] = a == 2 && spec.n == 2 ? -INFINITY : 0.0;
    box.hi[a] = a == 2 && spec.n == 2 ? INFINITY : 3.141592653589793;
  }
  if (spec.n == 2 && !spec.rotational()) {
    point[1] = x.theta;
    point[2] = x.phi;
  } else {
    // generic chart point away from the coordinate singularities
    for (int a = 1; a < d; ++a) point[a] = 1.3 - 0.15 * a;
  }
  return scalar_curvature_fd_oracle(d, warped_metric_sampler(spec), point, h, box);
}

}  // namespace hypermass
