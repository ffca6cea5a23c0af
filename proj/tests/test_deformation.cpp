#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "hypermass/deformation.hpp"
#include "hypermass/errors.hpp"
#include "hypermass/warped_geometry.hpp"

namespace hypermass {
namespace {

RadialMetricSpec planted(int n, double c) {
  auto g = hyperbolic_metric(n, 4.0);
  g.alpha = make_constant_trace_alpha(-n * c, n);
  return g;
}

Grid radial_grid() { return Grid::radial(linspace(4.0, 8.0, 5)); }

DeformationPtr built(const RadialMetricSpec& g, const Grid& sphere) {
  return build_deformation(g, sphere).deformation;
}

TEST(DeformationPlan, ScaleExamples) {
  EXPECT_DOUBLE_EQ(deformation_scale(2, 1.0, 1.0), 1.0);
  EXPECT_NEAR(deformation_scale(4, 32.0, 1.0), 2.0, 1e-14);
}

TEST(DeformationPlan, MidpointOfAdmissibleInterval) {
  const std::vector<double> mu{-1.0};
  const auto p = plan_deformation(2, 4.0, mu, 1.0, 10.0);
  const double lo = 1.5 * std::sqrt(4.0 / 3.0) / std::pow(40.0, 3);
  const double hi = 1.5 * std::sqrt(0.75) / std::pow(30.0, 3);
  EXPECT_NEAR(p.inv_a_lower, 2.706e-5, 1e-8);
  EXPECT_NEAR(p.inv_a_upper, 4.811e-5, 1e-8);
  EXPECT_NEAR(p.inv_a_lower, lo, 1e-18);
  EXPECT_NEAR(p.inv_a_upper, hi, 1e-18);
  EXPECT_NEAR(p.a, 1.0 / (1.0 + std::sqrt(lo * hi)), 1e-15);
  EXPECT_NEAR(p.a, 0.999964, 5e-7);
  EXPECT_DOUBLE_EQ(p.lambda, 1.0);
}

TEST(DeformationPlan, RejectsNonNegativeMassAspect) {
  const std::vector<double> mixed{-1.0, 0.5};
  const std::vector<double> zero{-1.0, 0.0};
  for (const auto* mu : {&mixed, &zero}) {
    try {
      plan_deformation(2, 4.0, *mu, 1.0, 10.0);
      FAIL() << "expected a hypothesis error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::hypothesis);
    }
  }
}

TEST(DeformationPlan, LargeMassRatioHasNoAdmissibleA) {
  const std::vector<double> mu{-1.0, -32.0};
  try {
    plan_deformation(4, 4.0, mu, 1.0, 10.0);
    FAIL() << "expected a construction error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::construction);
  }
  const std::vector<double> ok{-1.0, -1.5};
  EXPECT_NO_THROW(plan_deformation(2, 4.0, ok, 1.0, 10.0));
}

TEST(DeformationBuild, RejectsWarpedInput) {
  auto g = planted(2, 1.0);
  g.f = std::make_shared<ConstantScalar>(1.5);
  try {
    build_deformation(g, radial_grid());
    FAIL() << "expected a hypothesis error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis);
  }
  auto h = hyperbolic_metric(2, 4.0);
  try {
    build_deformation(h, radial_grid());
    FAIL() << "expected a hypothesis error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis);
  }
}

TEST(DeformationBuild, RejectsAlphaAboveBound) {
  DeformationOptions opts;
  opts.alpha_bound = 0.5;
  try {
    build_deformation(planted(2, 1.0), radial_grid(), opts);
    FAIL() << "expected a hypothesis error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis);
  }
}

class PlantedDeformation : public ::testing::TestWithParam<double> {};

TEST_P(PlantedDeformation, PassesEveryCheck) {
  const double c = GetParam();
  const auto g = planted(2, c);
  const auto res = build_deformation(g, radial_grid());
  ASSERT_TRUE(res.report.pass());
  const auto& p = res.report.plan;
  EXPECT_LE(p.R1, 1024.0 * g.R);
  EXPECT_TRUE(res.history.back().failed.empty());
  const double floor_s = -6.0 / p.a;
  for (const auto& row : res.report.margins) {
    EXPECT_GE(row.scalar, floor_s - 1e-6 * 6.0 / p.a);
  }
  for (const char* name : {"eta12_inner_band", "eta12_outer_band", "f_range", "f_radial",
                           "f_sphere_laplacian", "f_sphere_gradient", "gluing_inner",
                           "gluing_outer", "chain"}) {
    const auto* rec = res.report.find(name);
    ASSERT_NE(rec, nullptr) << name;
    EXPECT_TRUE(rec->pass) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(Constants, PlantedDeformation, ::testing::Values(0.1, 1.0, 10.0));

class ConstructedFunctions : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    metric_ = new RadialMetricSpec(planted(2, 1.0));
    d_ = new DeformationPtr(built(*metric_, radial_grid()));
  }
  static void TearDownTestSuite() {
    delete d_;
    delete metric_;
  }
  static const Deformation& d() { return **d_; }
  static const DeformationPlan& plan() { return d().plan(); }

  static RadialMetricSpec* metric_;
  static DeformationPtr* d_;
};
RadialMetricSpec* ConstructedFunctions::metric_ = nullptr;
DeformationPtr* ConstructedFunctions::d_ = nullptr;

TEST_F(ConstructedFunctions, CutoffShape) {
  EXPECT_DOUBLE_EQ(d().cutoff(plan().scaled(7.0)).v, 1.0);
  EXPECT_DOUBLE_EQ(d().cutoff(plan().scaled(8.0)).v, 0.0);
  for (double r : linspace(plan().scaled(6.5), plan().scaled(8.5), 401)) {
    const RadialJet s = d().cutoff(r);
    EXPECT_LE(s.d1, 0.0);
    EXPECT_LE(r * std::abs(s.d1), plan().cutoff_b);
    EXPECT_LE(r * r * std::abs(s.d2), plan().cutoff_c);
    const double h = 1e-6 * r;
    const double fd1 = (d().cutoff(r + h).v - d().cutoff(r - h).v) / (2 * h);
    const double fd2 = (d().cutoff(r + h).d1 - d().cutoff(r - h).d1) / (2 * h);
    EXPECT_NEAR(fd1, s.d1, 1e-5 * plan().cutoff_b / r);
    EXPECT_NEAR(fd2, s.d2, 1e-4 * plan().cutoff_c / (r * r));
  }
}

TEST_F(ConstructedFunctions, BumpPairHasZeroMean) {
  EXPECT_LT(std::abs(d().bump_pair_integral(plan().scaled(6.0))), 1e-10);
  EXPECT_GT(d().bump_pair(1.5 * plan().R1), 0.0);
  EXPECT_LT(d().bump_pair(plan().scaled(5.5)), 0.0);
  EXPECT_EQ(d().bump_pair(plan().scaled(3.0)), 0.0);
}

TEST_F(ConstructedFunctions, BlendAndPotential) {
  const double mu = 2.0;
  const auto radii = linspace(plan().R, plan().scaled(10.0), 2001);
  double prev = 2.0;
  for (double r : radii) {
    const auto s = d().state(mu, r);
    EXPECT_LE(s.blend, prev + 1e-10);
    prev = s.blend;
    EXPECT_GE(s.blend_rate, 0.0);
    if (r <= plan().R1) {
      EXPECT_EQ(s.potential, s.inner);
      EXPECT_EQ(s.warp, 1.0);
      EXPECT_EQ(s.blend, 1.0);
    }
    if (r >= plan().scaled(6.0)) EXPECT_NEAR(s.potential / s.outer, 1.0, 1e-10);
    if (r >= plan().R1) EXPECT_LE(s.potential_r, s.outer_r * (1.0 + 1e-12));
    if (r >= plan().scaled(9.0)) EXPECT_NEAR(s.warp * plan().a, 1.0, 1e-12);
  }
  EXPECT_NEAR(d().state(mu, plan().scaled(6.0)).blend, 0.0, 1e-10);
}

TEST_F(ConstructedFunctions, WarpDerivativeMatchesDifferences) {
  const double mu = 2.0;
  for (double r : geomspace(plan().R1 * 1.01, plan().scaled(9.5), 60)) {
    const double h = 1e-5 * r;
    const double fd = (d().state(mu, r + h).warp - d().state(mu, r - h).warp) / (2 * h);
    const double exact = d().state(mu, r).warp_r;
    EXPECT_NEAR(fd, exact, 1e-6 * std::abs(exact) + 1e-15 / h) << r;
  }
}

TEST_F(ConstructedFunctions, PotentialIdentity) {
  const double mu = 2.0;
  const int n = plan().n;
  for (double r : geomspace(plan().R, plan().scaled(10.0), 200)) {
    const auto s = d().state(mu, r);
    const RadialJet psi = d().cutoff(r);
    const double lhs = (std::pow(r, n + 1) + (n + 1.0) / n * mu * psi.v - r / n * mu * psi.d1) * s.warp -
                       d().envelope_primitive(r).v / r;
    EXPECT_NEAR(lhs / s.potential, 1.0, 1e-10) << r;
  }
}

TEST_F(ConstructedFunctions, EnvelopePrimitive) {
  const int n = plan().n;
  EXPECT_EQ(d().envelope_primitive(plan().scaled(9.0)).v, 0.0);
  for (double r : linspace(plan().R, plan().scaled(9.0), 300)) {
    const RadialJet a1 = d().envelope_primitive(r);
    EXPECT_GE(a1.v, 0.0);
    const double h = 1e-5 * r;
    const double fd = (d().envelope_primitive(r + h).v - d().envelope_primitive(r - h).v) / (2 * h);
    EXPECT_NEAR(fd, a1.d1, 1e-6 * (1.0 + std::abs(a1.d1)));
    EXPECT_NEAR(a1.d1, a1.v / r - d().envelope(r).v / (n * r), 1e-12 * (1.0 + std::abs(a1.d1)));
  }
}

TEST_F(ConstructedFunctions, DeformedMetricGluesOnBothSides) {
  const auto hat = deformed_metric(*d_, *metric_);
  const SpherePoint x;
  const auto ga = hyperbolic_metric(2, metric_->R, 1.0 / plan().a);
  for (double r : linspace(metric_->R, plan().R1, 20)) {
    const auto a = hat.chart_components(x, r);
    const auto b = metric_->chart_components(x, r);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a[i], b[i]);
  }
  for (double r : geomspace(plan().scaled(9.0), plan().scaled(20.0), 20)) {
    const auto a = hat.chart_components(x, r);
    const auto b = ga.chart_components(x, r);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * std::abs(b[i]) + 1e-300);
    EXPECT_NEAR(scalar_curvature_exact(hat, x, r), -6.0 / plan().a, 1e-9);
  }
}

TEST(DeformationBuild, SphereDependentMassAspect) {
  auto g = hyperbolic_metric(2, 4.0);
  auto comp = [](auto th, auto ph) {
    using T = decltype(th);
    T k = 1.0 + 0.1 * cos(th) + 0.05 * sin(th) * cos(ph);
    T s = sin(th);
    return std::array<T, 3>{-1.0 * k, T(0.0), -1.0 * k * s * s};
  };
  g.alpha = make_alpha_field([comp](auto, auto th, auto ph) { return comp(th, ph); }, comp);
  const auto sphere = Grid::product(linspace(4.0, 8.0, 5), 5, 8);
  const auto res = build_deformation(g, sphere);
  EXPECT_TRUE(res.report.pass());
  EXPECT_GT(res.report.plan.lambda, 1.0);

  // sphere derivatives of f against differences in theta and phi
  const auto& p = res.report.plan;
  const double r = 1.5 * p.R1;
  const SpherePoint x{1.1, 0.7};
  const FieldJet f = res.metric.f->jet(x, r);
  const double h = 1e-4;
  auto val = [&](double th, double ph) { return res.metric.f->value({th, ph}, r); };
  EXPECT_NEAR((val(1.1 + h, 0.7) - val(1.1 - h, 0.7)) / (2 * h), f.x[0], 1e-9);
  EXPECT_NEAR((val(1.1, 0.7 + h) - val(1.1, 0.7 - h)) / (2 * h), f.x[1], 1e-9);
  EXPECT_NEAR((val(1.1 + h, 0.7) - 2 * f.v + val(1.1 - h, 0.7)) / (h * h), f.xx[0], 1e-6);
  EXPECT_NEAR((val(1.1, 0.7 + h) - 2 * f.v + val(1.1, 0.7 - h)) / (h * h), f.xx[2], 1e-6);
  EXPECT_NE(f.x[0], 0.0);
}

TEST(DeformationBuild, HigherDimensionIsotropic) {
  const auto res = build_deformation(planted(3, 1.0), radial_grid());
  EXPECT_TRUE(res.report.pass());
  EXPECT_LE(res.report.plan.R1, 1024.0 * 4.0);
}

}  // namespace
}  // namespace hypermass
