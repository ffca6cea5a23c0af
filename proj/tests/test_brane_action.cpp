#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "hypermass/brane_action.hpp"
#include "hypermass/errors.hpp"

using namespace hypermass;

namespace {

constexpr double kPi = std::numbers::pi;

CuspModel cusp(int n) {
  CuspModel m;
  m.n = n;
  m.sides.assign(n, 1.0);
  return m;
}

TorusGrid torus(int n, int N, TorusStencil st = TorusStencil::fourth_order) {
  return TorusGrid(std::vector<int>(n, N), std::vector<double>(n, 1.0), st);
}

std::vector<double> smooth_field(const TorusGrid& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng), p = u(rng);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(i);
    double s = a * std::sin(2 * kPi * x[0] + p) + b * std::cos(2 * kPi * x[1]);
    if (g.dim() > 2) s += c * std::sin(2 * kPi * (x[0] + x[2]));
    else s += c * std::sin(2 * kPi * (x[0] - x[1]));
    f[i] = amp * s;
  }
  return f;
}

}  // namespace

TEST(TorusGrid, SpectralDerivativeExactOnModes) {
  const auto g = torus(2, 16, TorusStencil::spectral);
  std::vector<double> f(g.size()), fx(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(i);
    f[i] = std::sin(2 * kPi * 3 * x[0]) * std::cos(2 * kPi * x[1]);
    fx[i] = 2 * kPi * 3 * std::cos(2 * kPi * 3 * x[0]) * std::cos(2 * kPi * x[1]);
  }
  const auto d = g.derivative(f, 0);
  const auto l = g.laplacian(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(d[i], fx[i], 1e-10);
    EXPECT_NEAR(l[i], -4 * kPi * kPi * 10 * f[i], 1e-8);
  }
}

TEST(BraneAction, ConstantAcrossSlices) {
  for (int n : {2, 3}) {
    const auto m = cusp(n);
    const auto g = torus(n, 8);
    for (int k = 0; k < 20; ++k) {
      const double c = -1.0 + 0.1 * k;
      GraphSurface s{g, std::vector<double>(g.size(), c), 0.3};
      const auto b = brane_action(s, m);
      EXPECT_NEAR(b.action, 0.0, 1e-8 * b.area);
      EXPECT_NEAR(b.area, std::exp(n * (0.3 + c)), 1e-12 * b.area);
    }
  }
}

TEST(BraneAction, GraphOutsideIntervalIsRangeError) {
  const auto m = cusp(2);
  const auto g = torus(2, 8);
  GraphSurface s{g, std::vector<double>(g.size(), 10.0), 0.0};
  try {
    brane_action(s, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::range);
  }
}

TEST(BraneAction, SlicesHaveMeanCurvatureN) {
  for (int n : {2, 3}) {
    const auto g = torus(n, 8);
    GraphSurface s{g, std::vector<double>(g.size(), 0.4), -0.2};
    for (double H : mean_curvature_graph(s, cusp(n))) EXPECT_NEAR(H, n, 1e-12);
  }
}

TEST(BraneAction, LinearizedMeanCurvatureIsSliceLaplacian) {
  const auto m = cusp(2);
  const auto g = torus(2, 32, TorusStencil::spectral);
  const double t0 = 0.4, eps = 1e-5;
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = eps * std::sin(2 * kPi * g.point(i)[0]);
  const auto H = mean_curvature_graph({g, u, t0}, m);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lin = 2.0 + std::exp(-2 * t0) * 4 * kPi * kPi * u[i];
    EXPECT_NEAR(H[i], lin, 50 * eps * eps);
  }
}

TEST(BraneAction, FirstVariationMatchesFiniteDifference) {
  std::mt19937_64 rng(11);
  for (int n : {2, 3}) {
    auto m = cusp(n);
    m.bump = {0.05, 0.3, 0.6};
    const auto g = torus(n, n == 2 ? 32 : 16, TorusStencil::spectral);
    for (int trial = 0; trial < 10; ++trial) {
      const auto u0 = smooth_field(g, rng, 0.1);
      const auto v = smooth_field(g, rng, 1.0);
      const double h = 1e-4;
      GraphSurface sp{g, u0, 0.2}, sm{g, u0, 0.2};
      for (std::size_t i = 0; i < g.size(); ++i) {
        sp.u[i] += h * v[i];
        sm.u[i] -= h * v[i];
      }
      const double fd = (brane_action(sp, m).action - brane_action(sm, m).action) / (2 * h);
      const double an = first_variation({g, u0, 0.2}, m, v);
      EXPECT_LT(std::abs(fd - an), 1e-6 * (std::abs(an) + 1e-3)) << fd << " " << an;
    }
  }
}

TEST(Stability, CuspPotentialVanishesAndFormsAgree) {
  for (int n : {2, 3}) {
    const auto s = cusp_slice(cusp(n), torus(n, 8), 0.7);
    const auto v1 = stability_potential(s, StabilityForm::general);
    const auto v2 = stability_potential(s, StabilityForm::stationary);
    for (std::size_t i = 0; i < v1.size(); ++i) {
      EXPECT_NEAR(v1[i], 0.0, 1e-12);
      EXPECT_NEAR(v1[i], v2[i], 1e-12);
    }
    std::vector<double> one(s.grid.size(), 1.0);
    for (double y : stability_operator_apply(one, s, StabilityForm::general)) EXPECT_NEAR(y, 0.0, 1e-12);
  }
}

TEST(Stability, StationaryFormRequiresMeanN) {
  auto m = cusp(2);
  m.bump = {0.2, 0.0, 0.5};
  const auto s = cusp_slice(m, torus(2, 8), 0.1);
  EXPECT_THROW(stability_potential(s, StabilityForm::stationary), Error);
}

TEST(Stability, SineModeEigenvalue) {
  const double t0 = 0.3;
  const auto s = cusp_slice(cusp(2), torus(2, 16, TorusStencil::spectral), t0);
  std::vector<double> phi(s.grid.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::sin(2 * kPi * 2 * s.grid.point(i)[1]);
  const auto Lphi = stability_operator_apply(phi, s, StabilityForm::stationary);
  const double lambda = std::pow(2 * kPi * 2, 2) * std::exp(-2 * t0);
  for (std::size_t i = 0; i < phi.size(); ++i) EXPECT_NEAR(Lphi[i], lambda * phi[i], 1e-8);
}

TEST(Stability, PrincipalEigenvalueOnCuspSlice) {
  for (int n : {2, 3}) {
    const auto s = cusp_slice(cusp(n), torus(n, 8), 0.0);
    const auto d = principal_eigenvalue(s, StabilityForm::stationary);
    EXPECT_NEAR(d.lambda1, 0.0, 1e-8);
    EXPECT_TRUE(d.eigfn_positive);
    for (double e : d.eigfn) EXPECT_NEAR(e, 1.0, 1e-8);
  }
}

TEST(Stability, ShiftAndDenseOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {2, 3}) {
    auto s = cusp_slice(cusp(n), torus(n, n == 2 ? 16 : 6), 0.0);
    for (auto& v : s.slice_scalar) v = 3.0 * u(rng);
    const auto base = principal_eigenvalue(s, StabilityForm::general);
    Eigen::MatrixXd dense(stability_matrix(s, StabilityForm::general));
    const auto ev = dense.eigenvalues();
    double lo = INFINITY;
    for (Eigen::Index i = 0; i < ev.size(); ++i) lo = std::min(lo, ev[i].real());
    EXPECT_NEAR(base.lambda1, lo, 1e-8);
    EXPECT_TRUE(base.eigfn_positive);

    for (auto& v : s.slice_scalar) v += 2.0 * 0.75;
    const auto shifted = principal_eigenvalue(s, StabilityForm::general);
    EXPECT_NEAR(shifted.lambda1, base.lambda1 + 0.75, 1e-9);
  }
}

TEST(Stability, ConformalRescale) {
  const auto s = cusp_slice(cusp(3), torus(3, 8), 0.2);
  EXPECT_THROW(conformal_rescale_slice(std::vector<double>(64, 1.0), cusp_slice(cusp(2), torus(2, 8), 0.2)), Error);
  const auto one = conformal_rescale_slice(std::vector<double>(s.grid.size(), 1.0), s);
  for (double v : one.direct) EXPECT_NEAR(v, 0.0, 1e-12);
  const auto c = conformal_rescale_slice(std::vector<double>(s.grid.size(), 2.5), s);
  for (double v : c.via_operator) EXPECT_NEAR(v, 0.0, 1e-12);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto t = s;
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    const double sn = u(rng);
    t.ambient_scalar[i] += sn;
    t.slice_scalar[i] += sn + u(rng);
  }
  const auto d = principal_eigenvalue(t, StabilityForm::stationary);
  ASSERT_GE(d.lambda1, 0.0);
  const auto r = conformal_rescale_slice(d.eigfn, t);
  for (std::size_t i = 0; i < r.direct.size(); ++i) {
    EXPECT_GE(r.via_operator[i], -1e-10);
    EXPECT_NEAR(r.direct[i], r.via_operator[i], 1e-9 * (1 + std::abs(r.direct[i])));
  }
}

TEST(Foliation, UnperturbedLeavesAreSlices) {
  const auto m = cusp(2);
  const auto g = torus(2, 8);
  const std::vector<double> taus = {-0.2, 0.0, 0.3};
  const auto leaves = cmc_foliation(m, g, 0.0, taus);
  for (const auto& leaf : leaves) {
    EXPECT_NEAR(leaf.k, 2.0, 1e-10);
    EXPECT_LE(leaf.iterations, 5);
    for (double u : leaf.u) EXPECT_NEAR(u, leaf.tau / m.flat_area(), 1e-10);
  }
}

TEST(Foliation, BumpedLeavesOrdered) {
  auto m = cusp(2);
  m.bump = {0.02, 0.1, 0.8};
  const auto g = torus(2, 12);
  const std::vector<double> taus = {-0.1, -0.05, 0.0, 0.05, 0.1};
  const auto leaves = cmc_foliation(m, g, 0.0, taus);
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    EXPECT_LE(leaves[l].iterations, 5);
    EXPECT_NEAR(leaves[l].k, 2.0, 0.2);
    if (l > 0)
      for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(leaves[l - 1].u[i], leaves[l].u[i]);
  }
}
