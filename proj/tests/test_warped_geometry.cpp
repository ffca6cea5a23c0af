#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "hypermass/fd_oracle.hpp"
#include "hypermass/warped_geometry.hpp"

using namespace hypermass;

TEST(WarpedGeometry, HyperbolicChart) {
  const auto spec = hyperbolic_metric(2, 1.0);
  for (double r : {1.5, 3.0, 20.0}) {
    for (double th : {0.3, 1.2, 2.9}) {
      const auto node = slice_node(spec, {th, 0.7}, r);
      EXPECT_NEAR(node.scalar(), -6.0, 1e-10);
      EXPECT_NEAR(node.mean, std::sqrt(1 + r * r) * 2.0 / r, 1e-12);
      EXPECT_NEAR(node.slice_scalar, 2.0 / (r * r), 1e-12);
    }
  }
}

TEST(WarpedGeometry, RandomAgainstOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const double e = 0.3, p1 = u(rng), p2 = u(rng), p3 = u(rng);
  auto f = make_scalar_field([=](auto r, auto th, auto ph) {
    using std::sin; using std::cos;
    return 1.0 + e * (p1 * sin(th) * cos(ph) + p2 * cos(th) + p3 * sin(th) * sin(ph)) * (2.0 / r);
  });
  auto psi = make_profile([](auto r) { using std::tanh; return 0.5 * (1.0 + tanh((4.0 - r) / 1.5)); });
  auto alpha = make_alpha_field(
      [=](auto r, auto th, auto ph) {
        using std::sin; using std::cos;
        auto a = 1.0 + 0.2 * cos(ph) * sin(th) + 0.0 * r;
        auto b = 0.3 * sin(th) * sin(ph) / r;
        auto c = (0.7 + 0.1 * cos(th)) * sin(th) * sin(th);
        return std::array<decltype(a), 3>{a, b * sin(th), c};
      },
      [](auto th, auto ph) {
        using std::sin; using std::cos;
        auto a = 1.0 + 0.2 * cos(ph) * sin(th);
        return std::array<decltype(a), 3>{a, 0.0 * a, (0.7 + 0.1 * cos(th)) * sin(th) * sin(th)};
      });
  RadialMetricSpec spec{2, 2.0, f, psi, alpha};
  for (double r : {2.5, 4.0, 7.0}) {
    for (double th : {0.4, 1.3, 2.5}) {
      const double ex = scalar_curvature_exact(spec, {th, 1.1}, r);
      const double fd = warped_scalar_oracle(spec, {th, 1.1}, r, 2.0, 100.0);
      EXPECT_LT(std::abs(ex - fd) / (1 + std::abs(ex)), 1e-6) << r << " " << th << " " << ex << " " << fd;
    }
  }
}
