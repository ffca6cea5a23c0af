#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hypermass/conformal_yamabe.hpp"
#include "hypermass/errors.hpp"

namespace hypermass {
namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

CompactMetricPtr rotational(int d, std::function<Jet<1>(const Jet<1>&)> tt,
                            std::function<Jet<1>(const Jet<1>&)> sphere) {
  return std::make_shared<RotationalCompact>(d, make_profile(tt), make_profile(sphere));
}

// --- quadrature --------------------------------------------------------------

TEST(SphereQuadrature, FejerIntegratesPolynomials) {
  const auto w = fejer_weights(12);
  for (int k = 0; k <= 10; k += 2) {
    double s = 0.0;
    for (int j = 0; j < 12; ++j) s += w[j] * std::pow(std::cos((j + 0.5) * kPi / 12), k);
    EXPECT_NEAR(s, 2.0 / (k + 1), 1e-14) << k;
  }
}

TEST(SphereQuadrature, VolumesMatchClosedForm) {
  EXPECT_NEAR(sphere_volume(2), 4.0 * kPi, 1e-14);
  EXPECT_NEAR(sphere_volume(3), 2.0 * kPi * kPi, 1e-13);
  EXPECT_NEAR(SphereQuadrature::latlon(8, 8).volume(), 4.0 * kPi, 1e-13);
  for (int n = 2; n <= 6; ++n) {
    EXPECT_NEAR(SphereQuadrature::polar(n, 10).volume(), sphere_volume(n), 1e-12) << n;
  }
}

// --- mass ---------------------------------------------------------------------

TEST(MassAspect, HyperbolicHasZeroMass) {
  const auto q = SphereQuadrature::latlon(6, 6);
  const auto bd = boundary_mass(*hyperbolic_compact(3), q);
  EXPECT_EQ(bd.mass, 0.0);
  EXPECT_EQ(bd.mu_max, 0.0);
}

TEST(MassAspect, PlantedMultipleOfRoundMetric) {
  for (int d = 3; d <= 5; ++d) {
    const double c = 0.4;
    const int n = d - 1;
    const auto q = SphereQuadrature::polar(n, 8);
    const auto bd = boundary_mass(*power_compact(d, 0.0, c), q);
    // direct quadrature of the planted field mu = n c
    double expect = 0.0;
    for (double w : q.weights()) expect += w * n * c;
    EXPECT_NEAR(bd.mass, expect, 1e-9 * expect) << d;
    EXPECT_NEAR(bd.mu_min, n * c, 1e-9);
    EXPECT_NEAR(bd.mu_max, n * c, 1e-9);
  }
}

TEST(MassAspect, TraceFreeAspectHasZeroMass) {
  const auto chart = planted_chart_compact({0.3, {}, 0.0, 0.0, {}});
  const auto q = SphereQuadrature::latlon(8, 4);
  const auto bd = boundary_mass(*chart, q);
  EXPECT_NEAR(bd.mass, 0.0, 1e-12);
  double largest = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    EXPECT_NEAR(bd.mu[k], 0.0, 1e-12);
    const auto gamma = planted_boundary_tensor({0.3, {}, 0.0, 0.0, {}}, q.nodes()[k].theta);
    EXPECT_NEAR(bd.aspect[k][0], gamma[0], 1e-9);
    EXPECT_NEAR(bd.aspect[k][2], gamma[2], 1e-9);
    largest = std::max(largest, std::abs(bd.aspect[k][0]));
  }
  EXPECT_GT(largest, 0.1);
}

TEST(MassAspect, RejectsSlowDecay) {
  const auto e = rotational(
      3, [](const Jet<1>&) { return Jet<1>(0.0); },
      [](const Jet<1>& t) { return 0.5 * t * t; });
  try {
    boundary_mass(*e, SphereQuadrature::latlon(4, 4));
    FAIL() << "expected a hypothesis error";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::hypothesis);
  }
}

TEST(MassAspect, RequiresEnoughSamples) {
  BoundaryOptions opts;
  opts.samples = 4;
  EXPECT_THROW(boundary_mass(*power_compact(3, 0.0, 0.1), SphereQuadrature::latlon(4, 4), opts),
               Error);
}

// --- gauge --------------------------------------------------------------------

TEST(Gauge, AlreadyNormalizedDataIsUnchanged) {
  const auto q = SphereQuadrature::latlon(4, 4);
  const auto t = linspace(0.01, 0.08, 8);
  const auto g = gauge_normalize(*power_compact(3, 0.0, 0.7), q, t);
  EXPECT_EQ(max_abs(g.theta_defect), 0.0);
  for (std::size_t k = 0; k < g.t_source.size(); ++k) {
    EXPECT_NEAR(g.t_source[k], t[k / q.size()], 1e-15);
  }
  EXPECT_LT(g.eikonal_defect, 1e-12);
}

TEST(Gauge, DefectDecaysAtOrderDPlusOne) {
  for (int d = 3; d <= 5; ++d) {
    const auto e = rotational(
        d, [d](const Jet<1>& t) { return 0.8 * pow(t, d + 1.0); },
        [d](const Jet<1>& t) { return 0.3 * pow(t, static_cast<double>(d)); });
    const std::vector<double> t{1e-3, 2e-3, 4e-3, 8e-3};
    const auto x = gauge_factor(*e, {1.0, 0.0}, t);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double slope = std::log(std::abs(x[i + 1] / x[i])) / std::log(t[i + 1] / t[i]);
      EXPECT_GE(slope, d + 1.0 - 0.02) << d;
    }
  }
}

TEST(Gauge, TimeComponentShiftsAspect) {
  for (int d = 3; d <= 5; ++d) {
    const double b = 0.6;
    const auto q = SphereQuadrature::polar(d - 1, 6);
    const auto bd = boundary_mass(*power_compact(d, b, 0.0), q);
    EXPECT_NEAR(bd.mu_max, gauge_corrected_aspect(d, 0.0, b), 1e-7) << d;
    EXPECT_NEAR(bd.mu_min, (d - 1.0) / d * b, 1e-7) << d;
  }
}

TEST(Gauge, AspectPreservedAndEikonalHolds) {
  const auto e = rotational(
      3, [](const Jet<1>& t) { return 0.5 * t * t * t * t; },
      [](const Jet<1>& t) { return 0.2 * t * t * t + t * t * t * t; });
  const auto q = SphereQuadrature::polar(2, 4);
  const auto t = linspace(0.01, 0.08, 8);
  const auto g = gauge_normalize(*e, q, t);
  EXPECT_LT(g.eikonal_defect, 1e-9);
  const auto before = mass_and_aspect(sample_boundary(*e, q, t));
  const auto after = mass_and_aspect(g.normalized);
  EXPECT_NEAR(after.mu_max, before.mu_max, 1e-6);
}

TEST(Gauge, Idempotent) {
  const auto q = SphereQuadrature::polar(2, 4);
  const auto t = linspace(0.01, 0.08, 8);
  const auto first = gauge_normalize(*power_compact(3, 0.5, 0.2), q, t);
  const auto second = gauge_normalize(*gauss_form(first), q, t);
  EXPECT_LT(max_abs(second.theta_defect), 1e-10);
}

// --- compact scalar -------------------------------------------------------------

TEST(CompactScalar, HyperbolicIsConstant) {
  for (int d = 3; d <= 7; ++d) {
    for (double t : {1e-3, 0.3, 2.0}) {
      EXPECT_EQ(compact_scalar(*hyperbolic_compact(d), t, {1.0, 0.0}).excess, 0.0);
    }
  }
}

TEST(CompactScalar, MatchesFiniteDifferenceOracle) {
  std::vector<CompactMetricPtr> metrics;
  for (int d = 3; d <= 5; ++d) metrics.push_back(power_compact(d, 0.7, -0.4, 1.0));
  metrics.push_back(planted_chart_compact({0.1, {0.05, 0.02}, 1.0, 0.3, {0.1}}));
  for (const auto& e : metrics) {
    const int d = e->dim();
    for (double t : {1e-3, 1e-2, 1e-1}) {
      const double exact = compact_scalar(*e, t, {1.0, 0.3}).scalar();
      const double fd = compact_scalar_fd_oracle(e, t, {1.0, 0.3});
      EXPECT_LT(std::abs(exact - fd) / std::abs(exact), 1e-6) << d << " " << t;
    }
  }
}

TEST(CompactScalar, LeadingOrderCancelsForTraceFreeAspect) {
  const auto chart = planted_chart_compact({0.2, {}, 1.0, 0.0, {}});
  for (double th : {0.4, 1.2}) {
    auto fn = [&](double t) { return compact_scalar(*chart, t, {th, 0.0}).excess; };
    const auto fit = series_coefficients(fn, 3, 5, 1e-3, 2e-2);
    EXPECT_LT(std::abs(fit.coef[0]), 1e-6) << th;
  }
}

TEST(CompactScalar, LeadingOrderCancelsForAnyTrace) {
  // The t^d terms of the three contributions cancel whatever the trace is.
  for (int d = 3; d <= 5; ++d) {
    const auto e = power_compact(d, 0.3, 1.0);
    auto fn = [&](double t) { return compact_scalar(*e, t, {}).excess; };
    auto lap = [&](double t) { return compact_scalar(*e, t, {}).laplacian; };
    const double total = series_coefficients(fn, d, 5, 1e-3, 2e-2).coef[0];
    const double part = series_coefficients(lap, d, 5, 1e-3, 2e-2).coef[0];
    EXPECT_GT(std::abs(part), 0.5);
    EXPECT_LT(std::abs(total), 1e-6 * std::abs(part)) << d;
  }
}

TEST(CompactRicci, LeadingCoefficient) {
  const PlantedTensor p{0.2, {}, 1.0, 0.0, {}};
  const auto chart = planted_chart_compact(p);
  for (double th : {0.5, 1.3}) {
    const auto ts = geomspace(1e-3, 1e-2, 12);
    std::vector<double> a;
    for (double t : ts) a.push_back(compact_ricci(*chart, t, {th, 0.0}).traceless[1][1] / (t * t));
    const double powers[2] = {1.0, 2.0};
    const auto gamma = planted_boundary_tensor(p, th);
    EXPECT_NEAR(fit_powers(ts, a, powers).coef[0], -1.5 * gamma[0], 1e-3 * std::abs(gamma[0]));
  }
}

// --- L operators ------------------------------------------------------------------

TEST(LinearOperators, BarrierLimit) {
  for (int d = 3; d <= 7; ++d) {
    const double t = 1e-3;
    const double ratio = apply_lt(d, t, barrier_profile(d, t)) / std::pow(t, d + 1);
    EXPECT_LT(std::abs(ratio / (d * (d + 2.0)) - 1.0), 0.01) << d;
    EXPECT_GT(apply_lt(d, 0.05, barrier_profile(d, 0.05)), 0.0);
  }
}

TEST(LinearOperators, IndicialExponents) {
  for (int d = 3; d <= 6; ++d) {
    EXPECT_EQ(indicial_polynomial(d, -1.0), 0.0);
    EXPECT_EQ(indicial_polynomial(d, d), 0.0);
    for (double a : {-1.0, 1.5, static_cast<double>(d), d + 1.0}) {
      const double t = 1e-3;
      const RadialJet w{std::pow(t, a), a * std::pow(t, a - 1), a * (a - 1) * std::pow(t, a - 2)};
      EXPECT_NEAR(apply_lt(d, t, w) / w.v, indicial_polynomial(d, a), 1e-4) << d << " " << a;
    }
  }
}

TEST(LinearOperators, ConstantField) {
  const auto p = yamabe_problem(*power_compact(3, 0.2, 0.1, 1.0), {1e-3, 4.0, 120, 0});
  const std::vector<double> c(p.nodes.size(), 2.5);
  const auto lc = apply_l(p, c);
  for (double x : lc) EXPECT_NEAR(x, 3 * 2.5, 1e-8);
}

TEST(LinearOperators, ConformalScalarOfUnitFactor) {
  const auto p = yamabe_problem(*hyperbolic_compact(3), {1e-2, 1.0, 40, 0});
  const std::vector<double> one(p.nodes.size(), 1.0);
  EXPECT_LT(max_abs(conformal_scalar_excess(p, one)), 1e-10);
}

// --- Yamabe -----------------------------------------------------------------------

TEST(Yamabe, ConstantCurvatureGivesOne) {
  for (int d = 3; d <= 5; ++d) {
    const auto p = yamabe_problem(*hyperbolic_compact(d), {});
    const auto sol = yamabe_solve(p);
    for (double u : sol.u) EXPECT_NEAR(u, 1.0, 1e-9);
    EXPECT_NEAR(sol.v_d[0], 0.0, 1e-9);
  }
  const auto chart = planted_chart_compact({0.0, {}, 0.0, 0.0, {}});
  const auto sol = yamabe_solve(yamabe_problem(*chart, {1e-3, 4.0, 120, 8}));
  EXPECT_LT(max_abs(sol.v), 1e-9);
}

TEST(Yamabe, RecoversConformalFactor) {
  for (int d = 3; d <= 5; ++d) {
    const double eps = 0.2;
    const auto p = yamabe_problem(*conformal_bump_compact(d, eps), {});
    const auto sol = yamabe_solve(p);
    EXPECT_LT(sol.residual, 1e-9);
    double err = 0.0;
    for (std::size_t i = 0; i < p.ns(); ++i) {
      if (p.t(i) > 3.0) break;
      err = std::max(err, std::abs(sol.u[i] - 1.0 / (1.0 + eps * std::pow(std::tanh(p.t(i)), d))));
    }
    EXPECT_LT(err, 1e-4) << d;
    EXPECT_NEAR(sol.v_d[0], -eps, 1e-4) << d;
  }
}

// Nonnegative surplus vanishing to order d + 2 at the boundary.
std::function<double(double, double)> bump(int d, double amp, double center, double width,
                                           double tilt) {
  return [=](double t, double th) {
    const double z = (t - center) / width;
    return amp * std::pow(std::tanh(t), d + 2) * std::exp(-z * z) *
           (1.0 + tilt * std::cos(th) * std::cos(th));
  };
}

TEST(Yamabe, SurplusBumpsLowerTheSolution) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> amp(0.05, 1.0), center(0.2, 2.0), width(0.1, 0.8);
  const auto base = hyperbolic_compact(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = yamabe_problem(*base, {1e-3, 5.0, 401, 0});
    prescribe_surplus(p, bump(3, amp(rng), center(rng), width(rng), 0.0));
    const auto sol = yamabe_solve(p);
    EXPECT_LT(sol.residual, 1e-9);
    EXPECT_GT(sol.u_min, 0.0);
    EXPECT_LE(sol.u_max, 1.0 + 1e-12) << trial;
    EXPECT_LT(sol.v_d[0], 0.0) << trial;
    EXPECT_LT(std::abs(sol.v_d_half[0] / sol.v_d[0] - 1.0), 0.01) << trial;
  }
}

TEST(Yamabe, AxisymmetricBumps) {
  const auto chart = planted_chart_compact({0.0, {}, 0.0, 0.0, {}});
  auto p = yamabe_problem(*chart, {2e-3, 5.0, 241, 12});
  prescribe_surplus(p, bump(3, 0.5, 0.8, 0.4, 1.0));
  const auto sol = yamabe_solve(p);
  EXPECT_LT(sol.residual, 1e-9);
  EXPECT_LE(sol.u_max, 1.0 + 1e-12);
  for (double vd : sol.v_d) EXPECT_LT(vd, 0.0);
  // more surplus near the poles pushes the coefficient further down there
  EXPECT_LT(sol.v_d.front(), sol.v_d[sol.v_d.size() / 2]);
}

TEST(Yamabe, MaximumPrincipleMonotonicity) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> amp(0.05, 0.8), center(0.2, 2.0), width(0.1, 0.8);
  const auto base = hyperbolic_compact(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lower = bump(4, amp(rng), center(rng), width(rng), 0.0);
    const auto extra = bump(4, amp(rng), center(rng), width(rng), 0.0);
    auto p2 = yamabe_problem(*base, {1e-3, 5.0, 301, 0});
    auto p1 = p2;
    prescribe_surplus(p2, lower);
    prescribe_surplus(p1, [&](double t, double th) { return lower(t, th) + extra(t, th); });
    const auto u1 = yamabe_solve(p1).u;
    const auto u2 = yamabe_solve(p2).u;
    for (std::size_t k = 0; k < u1.size(); ++k) EXPECT_LE(u1[k], u2[k] + 1e-12) << trial;
  }
}

TEST(Yamabe, ResidualMatchesReportedSolution) {
  auto p = yamabe_problem(*hyperbolic_compact(3), {1e-3, 5.0, 201, 0});
  prescribe_surplus(p, bump(3, 0.4, 1.0, 0.3, 0.0));
  const auto sol = yamabe_solve(p);
  const auto r = yamabe_residual(p, sol.u);
  EXPECT_LT(max_abs(r), 1e-8);
  std::vector<double> off = sol.u;
  off[p.ns() / 2] += 1e-3;
  EXPECT_GT(max_abs(yamabe_residual(p, off)), 1e-2);
}

TEST(Yamabe, LinearizedSolveInvertsOperator) {
  const auto p = yamabe_problem(*power_compact(3, 0.1, 0.2, 1.0), {1e-3, 4.0, 200, 0});
  std::vector<double> rhs(p.nodes.size());
  for (std::size_t i = 0; i < p.ns(); ++i) rhs[i] = -std::exp(-std::pow(p.t(i) - 1.0, 2));
  const auto w = solve_linearized(p, rhs);
  const auto back = apply_l(p, w);
  for (std::size_t i = 1; i + 1 < p.ns(); ++i) EXPECT_NEAR(back[i], rhs[i], 1e-9);
  EXPECT_LT(boundary_coefficients(p, w, 1e-3, 4e-3)[0], 0.0);
}

// --- reduction ------------------------------------------------------------------------

TEST(Reduce, ConstantCurvatureIsFixed) {
  const auto r = reduce_to_constant_scalar(power_compact(3, 0.0, 0.0), {});
  EXPECT_EQ(r.mass_shift, 0.0);
  EXPECT_LT(max_abs(r.mu_shift), 1e-12);
}

TEST(Reduce, ConformalBumpLosesItsMass) {
  for (int d = 3; d <= 4; ++d) {
    const double eps = 0.2;
    const auto r = reduce_to_constant_scalar(conformal_bump_compact(d, eps), {});
    // u = 1 / phi, so u_d = -eps and the reduced metric is hyperbolic
    const double c = 4.0 * (d - 1.0) / (d - 2.0) * (1.0 + 1.0 / d);
    EXPECT_NEAR(r.predicted_shift[0], -c * eps, 1e-3 * c * eps);
    EXPECT_LT(r.shift_error, 1e-3);
    EXPECT_LT(r.scalar_error, 1e-6);
    EXPECT_LT(r.mass_shift, 0.0);
    EXPECT_NEAR(r.after.mu_max, 0.0, 1e-3);
  }
}

TEST(Reduce, AxisymmetricPlantedMetric) {
  const auto chart = planted_chart_compact({0.1, {}, 1.0, 0.0, {}});
  const auto r = reduce_to_constant_scalar(chart, {2e-3, 5.0, 241, 16});
  EXPECT_LT(r.shift_error, 1e-3);
  EXPECT_LT(r.scalar_error, 1e-3);
}

// --- Ricci probe ----------------------------------------------------------------------

TEST(RicciProbe, FlatBoundaryDataIsInert) {
  RicciProbeOptions o;
  o.amplitude = 0.0;
  const auto r = ricci_probe(o);
  EXPECT_LT(r.ricci_fit_error, 1e-8);
  EXPECT_LT(max_abs(r.dmu_fd), 1e-9);
  EXPECT_LT(max_abs(r.predicted), 1e-12);
}

TEST(RicciProbe, DerivativeMatchesLinearizedPrediction) {
  const auto r = ricci_probe({});
  EXPECT_TRUE(r.conclusive) << r.note;
  EXPECT_LT(r.ricci_fit_error, 0.05);
  for (std::size_t j = 0; j < r.theta.size(); ++j) {
    EXPECT_LT(r.dmu_fd[j], 0.0);
    EXPECT_LT(r.predicted[j], 0.0);
  }
  EXPECT_LT(r.match_error, 0.1);
  // the remaining aspect is the (positive) mass; the Ricci part follows it
  EXPECT_GT(r.mu_mean, 0.0);
  for (std::size_t j = 0; j < r.theta.size(); ++j) {
    EXPECT_NEAR(r.alpha_ricci[j], -0.5 * r.mu_reduced[j], 0.05 * std::abs(r.mu_reduced[j]));
  }
}

}  // namespace
}  // namespace hypermass
