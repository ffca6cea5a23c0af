#include "hypermass/warped_geometry.hpp"

#include <cmath>
#include <string>

#include "hypermass/errors.hpp"
#include "hypermass/parallel.hpp"

namespace hypermass {

namespace {

using Sym2 = std::array<double, 3>;  // {00, 01, 11}

double det3(const double m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Gaussian curvature of E du^2 + 2F du dv + G dv^2 (Brioschi formula).
double brioschi(const Sym2& g, const Sym2& gu, const Sym2& gv, const Sym2& guu, const Sym2& guv,
                const Sym2& gvv) {
  const double E = g[0], F = g[1], G = g[2];
  const double Eu = gu[0], Fu = gu[1], Gu = gu[2];
  const double Ev = gv[0], Fv = gv[1], Gv = gv[2];
  const double m1[3][3] = {{-0.5 * gvv[0] + guv[1] - 0.5 * guu[2], 0.5 * Eu, Fu - 0.5 * Ev},
                           {Fv - 0.5 * Gu, E, F},
                           {0.5 * Gv, F, G}};
  const double m2[3][3] = {{0.0, 0.5 * Ev, 0.5 * Gu}, {0.5 * Ev, E, F}, {0.5 * Gu, F, G}};
  const double det = E * G - F * F;
  return (det3(m1) - det3(m2)) / (det * det);
}

// (A B) for symmetric 2x2 stored as Sym2, returned as a full matrix.
std::array<double, 4> mul(const Sym2& a, const Sym2& b) {
  return {a[0] * b[0] + a[1] * b[1], a[0] * b[1] + a[1] * b[2], a[1] * b[0] + a[2] * b[1],
          a[1] * b[1] + a[2] * b[2]};
}

double trace(const std::array<double, 4>& m) { return m[0] + m[3]; }

double trace_sq(const std::array<double, 4>& m) {
  return m[0] * m[0] + 2.0 * m[1] * m[2] + m[3] * m[3];
}

SliceNode chart_node(const RadialMetricSpec& spec, SpherePoint x, double r) {
  const FieldJet f = spec.f->jet(x, r);
  const RadialJet w = spec.alpha_weight(r);
  const auto a = spec.alpha->jet(x, r);
  const RoundChart om = round_metric_chart(x.theta);
  const double r2 = r * r;

  Sym2 g, gr, grr, gu, gv, guu, guv, gvv;
  for (int c = 0; c < 3; ++c) {
    g[c] = r2 * om.g[c] + w.v * a[c].v;
    gr[c] = 2.0 * r * om.g[c] + w.d1 * a[c].v + w.v * a[c].r;
    grr[c] = 2.0 * om.g[c] + w.d2 * a[c].v + 2.0 * w.d1 * a[c].r + w.v * a[c].rr;
    gu[c] = r2 * om.g_theta[c] + w.v * a[c].x[0];
    gv[c] = w.v * a[c].x[1];
    guu[c] = r2 * om.g_thetatheta[c] + w.v * a[c].xx[0];
    guv[c] = w.v * a[c].xx[1];
    gvv[c] = w.v * a[c].xx[2];
  }
  const double det = g[0] * g[2] - g[1] * g[1];
  if (!(g[0] > 0.0) || !(det > 0.0)) {
    fail(ErrorKind::degenerate_metric, "induced metric not positive definite at r = " +
                                           std::to_string(r));
  }
  const Sym2 inv = {g[2] / det, -g[1] / det, g[0] / det};

  const double h = 1.0 + r2 * f.v;
  if (!(h > 0.0)) fail(ErrorKind::degenerate_metric, "1 + r^2 f must be positive");
  const double sh = std::sqrt(h);
  const double hr = 2.0 * r * f.v + r2 * f.r;

  const auto m = mul(inv, gr);
  const double tr_m = trace(m);
  const double tr_m2 = trace_sq(m);

  SliceNode node;
  node.x = x;
  node.lapse_sq = h;
  node.induced = g;
  for (int c = 0; c < 3; ++c) node.second_form[c] = 0.5 * sh * gr[c];
  node.mean = 0.5 * sh * tr_m;
  node.second_form_sq = 0.25 * h * tr_m2;
  const double dmean = 0.25 * hr / sh * tr_m + 0.5 * sh * (trace(mul(inv, grr)) - tr_m2);
  node.normal_mean_derivative = sh * dmean;
  node.slice_scalar = 2.0 * brioschi(g, gu, gv, guu, guv, gvv);

  // Lap_slice of u = h^(-1/2), with d_a h = r^2 d_a f.
  const double hm32 = 1.0 / (h * sh);
  const double hm52 = hm32 / h;
  const double ua[2] = {-0.5 * hm32 * r2 * f.x[0], -0.5 * hm32 * r2 * f.x[1]};
  const double fxx[2][2] = {{f.xx[0], f.xx[1]}, {f.xx[1], f.xx[2]}};
  const Sym2* dg[2] = {&gu, &gv};
  auto comp = [](const Sym2& s, int i, int j) { return s[i + j]; };
  const double gi[2][2] = {{inv[0], inv[1]}, {inv[1], inv[2]}};
  double lap = 0.0;
  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      const double uab = 0.75 * hm52 * r2 * r2 * f.x[p] * f.x[q] - 0.5 * hm32 * r2 * fxx[p][q];
      double christ_u = 0.0;
      for (int k = 0; k < 2; ++k) {
        double gamma_k = 0.0;  // Gamma^k_pq
        for (int l = 0; l < 2; ++l) {
          const double first = 0.5 * (comp(*dg[p], l, q) + comp(*dg[q], l, p) - comp(*dg[l], p, q));
          gamma_k += gi[k][l] * first;
        }
        christ_u += gamma_k * ua[k];
      }
      lap += gi[p][q] * (uab - christ_u);
    }
  }
  node.lapse_laplacian = sh * lap;
  node.ric_nn = -node.normal_mean_derivative - node.second_form_sq - node.lapse_laplacian;
  return node;
}

SliceNode isotropic_node(const RadialMetricSpec& spec, SpherePoint x, double r) {
  const int n = spec.n;
  const FieldJet f = spec.f->jet(x, r);
  const RadialJet w = spec.alpha_weight(r);
  const RadialJet c = *spec.alpha->isotropic(r);
  const double p = r * r + w.v * c.v;
  const double p1 = 2.0 * r + w.d1 * c.v + w.v * c.d1;
  const double p2 = 2.0 + w.d2 * c.v + 2.0 * w.d1 * c.d1 + w.v * c.d2;
  if (!(p > 0.0)) {
    fail(ErrorKind::degenerate_metric, "induced metric not positive definite at r = " +
                                           std::to_string(r));
  }
  const double h = 1.0 + r * r * f.v;
  if (!(h > 0.0)) fail(ErrorKind::degenerate_metric, "1 + r^2 f must be positive");
  const double sh = std::sqrt(h);
  const double hr = 2.0 * r * f.v + r * r * f.r;

  SliceNode node;
  node.x = x;
  node.lapse_sq = h;
  node.induced = {p, 0.0, 0.0};
  node.second_form = {0.5 * sh * p1, 0.0, 0.0};
  const double q = p1 / p;
  node.mean = 0.5 * n * sh * q;
  node.second_form_sq = 0.25 * n * h * q * q;
  const double dmean = 0.5 * n * (0.5 * hr / sh * q + sh * (p2 / p - q * q));
  node.normal_mean_derivative = sh * dmean;
  node.slice_scalar = n * (n - 1) / p;
  node.lapse_laplacian = 0.0;
  node.ric_nn = -node.normal_mean_derivative - node.second_form_sq;
  return node;
}

}  // namespace

SliceNode slice_node(const RadialMetricSpec& spec, SpherePoint x, double r) {
  if (!(r > 0.0)) fail(ErrorKind::range, "radius must be positive");
  if (spec.n == 2) return chart_node(spec, x, r);
  spec.validate();
  return isotropic_node(spec, x, r);
}

SliceGeometry slice_geometry(const RadialMetricSpec& spec, double r, const Grid& grid) {
  spec.validate();
  if (!grid.contains(r)) {
    fail(ErrorKind::range, "radius " + std::to_string(r) + " outside grid range");
  }
  SliceGeometry out;
  out.r = r;
  out.n = spec.n;
  const auto sphere = grid.sphere();
  out.nodes.resize(sphere.size());
  parallel_for(sphere.size(), [&](std::size_t i) { out.nodes[i] = slice_node(spec, sphere[i], r); });
  return out;
}

double scalar_curvature_exact(const RadialMetricSpec& spec, SpherePoint x, double r) {
  return slice_node(spec, x, r).scalar();
}

double scalar_leading_terms(int n, double r, double f, double f_r, RadialJet psi, double mu) {
  return -n * (n + 1.0) * f - n * r * f_r + std::pow(r, -n) * (n * mu * psi.d1 - r * mu * psi.d2) * f;
}

CurvatureSample scalar_curvature_split(const RadialMetricSpec& spec, SpherePoint x, double r) {
  const FieldJet f = spec.f->jet(x, r);
  const double mu = spec.alpha->mass_aspect(x, spec.n).v;
  return {scalar_curvature_exact(spec, x, r),
          scalar_leading_terms(spec.n, r, f.v, f.r, spec.psi->eval(r), mu)};
}

GridCurvature scalar_curvature_on_grid(const RadialMetricSpec& spec, const Grid& grid) {
  spec.validate();
  const auto rs = grid.r();
  const auto sphere = grid.sphere();
  const std::size_t ns = sphere.size();
  GridCurvature out;
  out.exact.resize(grid.size());
  out.leading.resize(grid.size());
  parallel_for(rs.size(), [&](std::size_t ir) {
    for (std::size_t is = 0; is < ns; ++is) {
      const auto s = scalar_curvature_split(spec, sphere[is], rs[ir]);
      out.exact[ir * ns + is] = s.exact;
      out.leading[ir * ns + is] = s.leading;
    }
  });
  return out;
}

}  // namespace hypermass
