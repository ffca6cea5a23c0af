#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "conformal_internal.hpp"
#include "hypermass/conformal_yamabe.hpp"
#include "hypermass/errors.hpp"
#include "hypermass/parallel.hpp"

namespace hypermass {

namespace {

constexpr int kDim = 3;
constexpr double kWeight = 8.0;  // 4(d-1)/(d-2)
constexpr double kShiftFactor = kWeight * (1.0 + 1.0 / kDim);

// Compact chart metric tabulated on the probe grid.
struct NodeMetric {
  MetricJets<3> jets;
  std::array<double, 6> excess{};
};
using Tabulated = std::vector<NodeMetric>;

struct TDerivatives {
  double v, t, tt, x, xx, tx;
};

std::vector<TDerivatives> t_derivatives(const YamabeProblem& p, std::span<const double> f,
                                        int parity) {
  const auto g = detail::grid_derivatives(p, f, parity, 6);
  std::vector<TDerivatives> out(f.size());
  for (std::size_t i = 0; i < p.ns(); ++i) {
    const double t = p.t(i);
    for (std::size_t j = 0; j < p.nt(); ++j) {
      const auto k = p.index(i, j);
      out[k] = {f[k], g.s[k] / t, (g.ss[k] - g.s[k]) / (t * t), g.x[k], g.xx[k], g.sx[k] / t};
    }
  }
  return out;
}

Tabulated tabulate(const ChartCompact& c, const YamabeProblem& p) {
  Tabulated out(p.nodes.size());
  parallel_for(p.ns(), [&](std::size_t i) {
    for (std::size_t j = 0; j < p.nt(); ++j) {
      const SpherePoint x{p.theta[j], 0.0};
      auto& n = out[p.index(i, j)];
      n.jets = c.compact_jets(p.t(i), x);
      n.excess = c.excess(p.t(i), x);
    }
  });
  return out;
}

double round_component(int c, double theta) {
  if (c == 0 || c == 3) return 1.0;
  if (c == 5) return std::sin(theta) * std::sin(theta);
  return 0.0;
}

// U e with U = (1 + v)^4 and v tabulated on the grid.
Tabulated scaled(const YamabeProblem& p, const Tabulated& e, std::span<const double> v) {
  const auto dv = t_derivatives(p, v, 1);
  Tabulated out(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    const auto& a = dv[k];
    const double u = 1.0 + a.v;
    const double um1 = std::expm1(4.0 * std::log1p(a.v));
    const double U = 1.0 + um1, U1 = 4.0 * u * u * u, U2 = 12.0 * u * u;
    const double dU[3] = {U1 * a.t, U1 * a.x, 0.0};
    const double ddU[3][3] = {{U2 * a.t * a.t + U1 * a.tt, U2 * a.t * a.x + U1 * a.tx, 0.0},
                              {U2 * a.t * a.x + U1 * a.tx, U2 * a.x * a.x + U1 * a.xx, 0.0},
                              {0.0, 0.0, 0.0}};
    const auto& g = e[k].jets;
    auto& h = out[k].jets;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        h.g[i][j] = U * g.g[i][j];
        for (int q = 0; q < 3; ++q) {
          h.dg[q][i][j] = dU[q] * g.g[i][j] + U * g.dg[q][i][j];
          for (int r = 0; r < 3; ++r) {
            h.ddg[q][r][i][j] = ddU[q][r] * g.g[i][j] + dU[q] * g.dg[r][i][j] +
                                dU[r] * g.dg[q][i][j] + U * g.ddg[q][r][i][j];
          }
        }
      }
    }
    const double th = p.theta[k % p.nt()];
    for (int c = 0; c < 6; ++c) out[k].excess[c] = um1 * round_component(c, th) + U * e[k].excess[c];
  }
  return out;
}

struct Geometry {
  std::vector<detail::Mat3> traceless;
  std::vector<double> scalar_excess;
};

Geometry geometry(const YamabeProblem& p, const Tabulated& e) {
  Geometry out;
  out.traceless.resize(e.size());
  out.scalar_excess.resize(e.size());
  parallel_for(e.size(), [&](std::size_t k) {
    const auto geo =
        detail::chart_geometry(e[k].jets, e[k].excess, p.t(k / p.nt()), p.theta[k % p.nt()]);
    out.traceless[k] = geo.traceless;
    out.scalar_excess[k] = geo.scalar.excess;
  });
  return out;
}

// Jets of a tabulated symmetric tensor field by finite differences.
Tabulated tensor_jets(const YamabeProblem& p, const std::vector<detail::Mat3>& field) {
  Tabulated out(field.size());
  for (int c = 0; c < 6; ++c) {
    if (c == 2 || c == 4) continue;  // vanish by axisymmetry
    const int i = c == 0 ? 0 : (c == 1 ? 0 : (c == 3 ? 1 : 2));
    const int j = c == 0 ? 0 : (c == 1 ? 1 : (c == 3 ? 1 : 2));
    std::vector<double> f(field.size());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = field[k][i][j];
    const auto d = t_derivatives(p, f, c == 1 ? -1 : 1);
    for (std::size_t k = 0; k < f.size(); ++k) {
      auto& m = out[k].jets;
      const double vals[3] = {d[k].t, d[k].x, 0.0};
      const double hess[3][3] = {{d[k].tt, d[k].tx, 0.0}, {d[k].tx, d[k].xx, 0.0}, {0.0, 0.0, 0.0}};
      for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        m.g[a][b] = d[k].v;
        for (int q = 0; q < 3; ++q) {
          m.dg[q][a][b] = vals[q];
          for (int r = 0; r < 3; ++r) m.ddg[q][r][a][b] = hess[q][r];
        }
      }
      out[k].excess[c] = d[k].v;
    }
  }
  return out;
}

// e - step * k
Tabulated shifted(const Tabulated& e, const Tabulated& k, double step) {
  Tabulated out = e;
  for (std::size_t n = 0; n < e.size(); ++n) {
    auto& h = out[n].jets;
    const auto& a = k[n].jets;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        h.g[i][j] -= step * a.g[i][j];
        for (int q = 0; q < 3; ++q) {
          h.dg[q][i][j] -= step * a.dg[q][i][j];
          for (int r = 0; r < 3; ++r) h.ddg[q][r][i][j] -= step * a.ddg[q][r][i][j];
        }
      }
    }
    for (int c = 0; c < 6; ++c) out[n].excess[c] -= step * k[n].excess[c];
  }
  return out;
}

YamabeProblem problem_from(const YamabeProblem& grid, const Tabulated& e) {
  YamabeProblem p = grid;
  parallel_for(e.size(), [&](std::size_t k) {
    p.nodes[k] = yamabe_node(e[k].jets, e[k].excess, p.t(k / p.nt()), p.theta[k % p.nt()]);
  });
  return p;
}

struct AspectFit {
  std::vector<double> mu;
  double residual = 0.0;
};

// Fields below the floor are roundoff of an exactly vanishing quantity.
constexpr double kFloor = 1e-8;

double relative(const PowerFit& f) { return f.residual / std::max(f.scale, kFloor); }

// Gauge-corrected mass aspect of (U e) from t^d fits of the tt entry and the frame trace.
AspectFit aspect(const YamabeProblem& p, const Tabulated& e, std::span<const double> v, double lo) {
  std::vector<double> tt(e.size()), tr(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double um1 = v.empty() ? 0.0 : std::expm1(4.0 * std::log1p(v[k]));
    const double U = 1.0 + um1;
    const double s = std::sin(p.theta[k % p.nt()]);
    const auto& x = e[k].excess;
    tt[k] = um1 + U * x[0];
    tr[k] = 2.0 * um1 + U * (x[3] + x[5] / (s * s));
  }
  AspectFit out;
  for (std::size_t j = 0; j < p.nt(); ++j) {
    const auto a = boundary_coefficient(p, tt, j, lo, 4.0 * lo);
    const auto b = boundary_coefficient(p, tr, j, lo, 4.0 * lo);
    out.mu.push_back(gauge_corrected_aspect(kDim, b.coef[0], a.coef[0]));
    out.residual = std::max({out.residual, relative(a), relative(b)});
  }
  return out;
}

std::vector<double> legendre_moments(const YamabeProblem& p, std::span<const double> f, int modes) {
  const auto w = fejer_weights(static_cast<int>(p.nt()));
  std::vector<double> m(static_cast<std::size_t>(modes), 0.0);
  for (int l = 0; l < modes; ++l) {
    for (std::size_t j = 0; j < p.nt(); ++j) {
      m[l] += w[j] * f[j] * std::legendre(2 * l, std::cos(p.theta[j]));
    }
    m[l] *= (4.0 * l + 1.0) / 2.0;
  }
  return m;
}

struct Reduced {
  YamabeProblem problem;
  Tabulated base;
  YamabeSolution solution;
  AspectFit mu;
};

Reduced reduce_planted(const PlantedTensor& planted, const YamabeGridSpec& grid,
                       const YamabeOptions& yopts) {
  const auto chart = planted_chart_compact(planted);
  Reduced r;
  r.problem = yamabe_problem(*chart, grid);
  r.base = tabulate(*chart, r.problem);
  r.solution = yamabe_solve(r.problem, yopts);
  r.mu = aspect(r.problem, r.base, r.solution.v, grid.t_min);
  return r;
}

}  // namespace

RicciProbeReport ricci_probe(const RicciProbeOptions& opts) {
  if (!(opts.step > 0.0)) fail(ErrorKind::range, "probe step must be positive");
  if (opts.correction_modes < 0 || opts.correction_iterations < 0) {
    fail(ErrorKind::range, "correction sizes must be non-negative");
  }
  if (!(opts.fit_lo > 0.0) || !(opts.fit_hi > opts.fit_lo)) {
    fail(ErrorKind::range, "Ricci fit window must satisfy 0 < fit_lo < fit_hi");
  }
  const YamabeGridSpec grid = validated({opts.t_min, opts.t_max, opts.ns, opts.ntheta}, kDim);
  RicciProbeReport rep;

  // Leading traceless Ricci coefficient of the trace-free planted metric.
  {
    const auto chart = planted_chart_compact({opts.amplitude, {}, opts.width, 0.0});
    const auto ts = geomspace(opts.fit_lo, opts.fit_hi, 16);
    double worst = 0.0, scale = 0.0;
    for (int j = 0; j < grid.ntheta; ++j) {
      const double th = (j + 0.5) * std::numbers::pi / grid.ntheta;
      const double s2 = std::sin(th) * std::sin(th);
      std::vector<double> a(ts.size()), b(ts.size());
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto k = compact_ricci(*chart, ts[i], {th, 0.0}).traceless;
        const double sh2 = std::sinh(ts[i]) * std::sinh(ts[i]);
        a[i] = k[1][1] / sh2;
        b[i] = k[2][2] / (sh2 * s2);
      }
      const double powers[2] = {kDim - 2.0, kDim - 1.0};
      const auto gamma = planted_boundary_tensor({opts.amplitude, {}, opts.width, 0.0}, th);
      const double fa = fit_powers(ts, a, powers).coef[0];
      const double fb = fit_powers(ts, b, powers).coef[0];
      worst = std::max({worst, std::abs(fa + 0.5 * kDim * gamma[0]),
                        std::abs(fb + 0.5 * kDim * gamma[2])});
      scale = std::max({scale, std::abs(gamma[0]), std::abs(gamma[2])});
    }
    rep.ricci_fit_error = scale > 0.0 ? worst / scale : worst;
  }

  // Subleading trace-free correction removing the low non-constant modes of the reduced
  // aspect. The constant mode is the mass and stays.
  PlantedTensor planted{opts.amplitude, {}, opts.width, 0.0,
                        std::vector<double>(static_cast<std::size_t>(opts.correction_modes), 0.0)};
  Reduced red = reduce_planted(planted, grid, opts.yamabe);
  auto moments_of = [&](const Reduced& r) {
    auto m = legendre_moments(r.problem, r.mu.mu, opts.correction_modes + 1);
    m.erase(m.begin());
    return m;
  };
  if (opts.correction_modes > 0 && opts.amplitude != 0.0) {
    const int m = opts.correction_modes;
    const auto base = moments_of(red);
    Eigen::MatrixXd jac(m, m);
    const double delta = 1e-2 * std::abs(opts.amplitude);
    for (int l = 0; l < m; ++l) {
      PlantedTensor bumped = planted;
      bumped.subleading[l] += delta;
      const auto mom = moments_of(reduce_planted(bumped, grid, opts.yamabe));
      for (int q = 0; q < m; ++q) jac(q, l) = (mom[q] - base[q]) / delta;
    }
    const auto lu = jac.fullPivLu();
    auto moments = base;
    for (int it = 0; it < opts.correction_iterations; ++it) {
      const Eigen::VectorXd step = lu.solve(Eigen::Map<const Eigen::VectorXd>(moments.data(), m));
      for (int l = 0; l < m; ++l) planted.subleading[l] -= step(l);
      red = reduce_planted(planted, grid, opts.yamabe);
      moments = moments_of(red);
    }
  }
  rep.correction_modes = planted.subleading;
  rep.mu_reduced = red.mu.mu;
  rep.mu_mean = legendre_moments(red.problem, red.mu.mu, 1)[0];
  rep.theta = red.problem.theta;
  const YamabeProblem& grid_p = red.problem;

  // Reduced metric, its traceless Ricci tensor and the probe curve.
  const Tabulated reduced = scaled(grid_p, red.base, red.solution.v);
  const Geometry geo = geometry(grid_p, reduced);
  const std::size_t margin = grid_p.ns() / 20;
  for (std::size_t i = margin; i + margin < grid_p.ns(); ++i) {
    for (std::size_t j = 0; j < grid_p.nt(); ++j) {
      rep.scalar_error = std::max(rep.scalar_error, std::abs(geo.scalar_excess[grid_p.index(i, j)]));
    }
  }
  const Tabulated ricci = tensor_jets(grid_p, geo.traceless);

  double fit_residual = red.mu.residual;
  std::vector<AspectFit> curve;
  for (double sgn : {1.0, -1.0}) {
    const Tabulated e = shifted(reduced, ricci, sgn * opts.step);
    const YamabeProblem p = problem_from(grid_p, e);
    const auto sol = yamabe_solve(p, opts.yamabe);
    curve.push_back(aspect(p, e, sol.v, grid.t_min));
    fit_residual = std::max(fit_residual, curve.back().residual);
  }

  // Traceless Ricci contribution to the aspect and the linearized solve.
  const AspectFit ric = aspect(grid_p, ricci, {}, grid.t_min);
  const YamabeProblem lin = problem_from(grid_p, reduced);
  std::vector<double> rhs(reduced.size());
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    const auto& inv = curvature_from_jets<3>(reduced[k].jets).inverse;
    const auto& K = geo.traceless[k];
    double norm = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) norm += inv[a][c] * inv[b][d] * K[a][b] * K[c][d];
    rhs[k] = -norm / kWeight;
  }
  const auto ubar = solve_linearized(lin, rhs);
  rep.ubar_d = boundary_coefficients(lin, ubar, grid.t_min, 4.0 * grid.t_min);

  double worst = 0.0;
  for (std::size_t j = 0; j < grid_p.nt(); ++j) {
    rep.dmu_fd.push_back((curve[0].mu[j] - curve[1].mu[j]) / (2.0 * opts.step));
    rep.alpha_ricci.push_back(-ric.mu[j]);
    rep.predicted.push_back(kShiftFactor * rep.ubar_d[j]);
    rep.predicted_literal.push_back(kWeight * rep.predicted.back());
    worst = std::max(worst, std::abs(rep.dmu_fd[j] - rep.predicted[j]) /
                                std::max(std::abs(rep.predicted[j]), kFloor));
  }
  rep.match_error = worst;
  rep.conclusive = fit_residual < 1e-2;
  if (!rep.conclusive) {
    rep.note = "boundary fit residual " + std::to_string(fit_residual) + " above 1e-2";
  }
  return rep;
}

}  // namespace hypermass
