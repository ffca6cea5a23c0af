// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hypermass/brane_action.hpp"
#include "hypermass/conformal_yamabe.hpp"
#include "hypermass/deformation.hpp"
#include "hypermass/errors.hpp"
#include "hypermass/fd_oracle.hpp"
#include "hypermass/parallel.hpp"
#include "hypermass/warped_geometry.hpp"
#include "inputs.hpp"

using namespace hypermass;

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ----- 1 -----

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  const double R = 2.0, r_max = 20.0;
  const Grid grid = Grid::product(linspace(R, r_max, 64), 32, 32);
  const auto r = grid.r();
  const auto sphere = grid.sphere();
  const std::size_t ns = sphere.size();
  double worst = 0.0;
  std::size_t interior = 0;
  for (int m = 0; m < 50; ++m) {
    std::mt19937_64 rng(1000 + m);
    const auto spec = cli::random_warped_metric(rng, R, 0.3);
    const auto exact = scalar_curvature_on_grid(spec, grid);
    std::vector<double> err(grid.size(), -1.0);
    parallel_for(r.size(), [&](std::size_t ir) {
      for (std::size_t is = 0; is < ns; ++is) {
        const std::size_t k = ir * ns + is;
        try {
          const double fd = warped_scalar_oracle(spec, sphere[is], r[ir], R, r_max);
          err[k] = std::abs(exact.exact[k] - fd) / (1.0 + std::abs(exact.exact[k]));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::boundary) throw;
        }
      }
    });
    for (double e : err) {
      if (e < 0.0) continue;
      ++interior;
      worst = std::max(worst, e);
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-6 && elapsed < 60.0 && interior > 0,
          fmt("50 metrics, %zu interior nodes, max rel error %.3e (< 1e-6), %.1f s (< 60 s)", interior, worst,
              elapsed)};
}

// ----- 2 -----

Outcome constant_curvature() {
  double worst = 0.0;
  for (int n : {2, 3, 4}) {
    for (double a : {1.0, 0.99}) {
      const auto spec = hyperbolic_metric(n, 1.0, 1.0 / a);
      const double target = -n * (n + 1.0) / a;
      for (double r : geomspace(1.0, 1e4, 40)) {
        for (double th : {0.3, 1.2, 2.8}) {
          worst = std::max(worst, std::abs(scalar_curvature_exact(spec, {th, 0.9}, r) - target));
        }
      }
    }
  }
  return {worst < 1e-10, fmt("n in {2,3,4}, a in {1, 0.99}: max |S + n(n+1)/a| = %.3e (< 1e-10)", worst)};
}

// ----- 3, 4, 5 -----

struct PlantedRun {
  std::string label;
  double R = 4.0;
  DeformationResult result;
  double seconds = 0.0;
};

RadialMetricSpec planted(double c) {
  auto g = hyperbolic_metric(2, 4.0);
  g.alpha = make_constant_trace_alpha(-2.0 * c, 2);
  return g;
}

RadialMetricSpec anisotropic() {
  auto g = hyperbolic_metric(2, 4.0);
  auto comp = [](auto th, auto ph) {
    using T = decltype(th);
    T k = 1.0 + 0.1 * cos(th) + 0.05 * sin(th) * cos(ph);
    T s = sin(th);
    return std::array<T, 3>{-1.0 * k, T(0.0), -1.0 * k * s * s};
  };
  g.alpha = make_alpha_field([comp](auto, auto th, auto ph) { return comp(th, ph); }, comp);
  return g;
}

std::vector<PlantedRun>& planted_runs() {
  static std::vector<PlantedRun> runs = [] {
    std::vector<PlantedRun> out;
    const Grid sphere = Grid::product(linspace(4.0, 8.0, 5), 6, 8);
    for (double c : {0.1, 1.0, 10.0}) {
      const auto t0 = Clock::now();
      auto res = build_deformation(planted(c), sphere);
      out.push_back({fmt("c=%g", c), 4.0, std::move(res), seconds_since(t0)});
    }
    const auto t0 = Clock::now();
    auto res = build_deformation(anisotropic(), sphere);
    out.push_back({"anisotropic", 4.0, std::move(res), seconds_since(t0)});
    return out;
  }();
  return runs;
}

const CheckRecord& check(const PlantedRun& r, const char* name) {
  const auto* c = r.result.report.find(name);
  if (!c) fail(ErrorKind::contract, std::string("missing check ") + name);
  return *c;
}

Outcome deformation_end_to_end() {
  bool ok = true;
  std::string detail;
  for (const auto& run : planted_runs()) {
    if (run.label == "anisotropic") continue;
    const auto& p = run.result.report.plan;
    const auto& scalar = check(run, "scalar_bound");
    const auto& inner = check(run, "gluing_inner");
    const auto& outer = check(run, "gluing_outer");
    const bool pass = p.R1 <= 1024.0 * run.R && scalar.pass && inner.pass && outer.pass && run.seconds < 300.0;
    ok = ok && pass;
    detail += fmt("[%s R1=%gR min S + n(n+1)/a = %.2e (>= -%.1e) inner %s outer %s %.2fs] ", run.label.c_str(),
                  p.R1 / run.R, scalar.margin, scalar.tolerance, inner.pass ? "exact" : "FAIL",
                  outer.pass ? "ok" : "FAIL", run.seconds);
  }
  return {ok, detail};
}

Outcome eta_margins() {
  bool ok = true;
  std::string detail;
  for (const auto& run : planted_runs()) {
    const auto& in = check(run, "eta12_inner_band");
    const auto& out = check(run, "eta12_outer_band");
    ok = ok && in.pass && out.pass;
    detail += fmt("[%s %.2e %.2e] ", run.label.c_str(), in.margin + 0.0, out.margin + 0.0);
  }
  return {ok, "min margins (inner, outer): " + detail};
}

Outcome f_bounds() {
  bool ok = true;
  std::string detail;
  for (const auto& run : planted_runs()) {
    double lo = INFINITY;
    for (const char* name : {"f_boundary", "f_range", "f_radial", "f_sphere_laplacian", "f_sphere_gradient"}) {
      const auto& c = check(run, name);
      ok = ok && c.pass;
      lo = std::min(lo, c.margin);
    }
    detail += fmt("[%s min margin %.2e] ", run.label.c_str(), lo + 0.0);
  }
  return {ok, "five bounds nodewise: " + detail};
}

// ----- 6 -----

CuspModel cusp(int n) {
  CuspModel m;
  m.n = n;
  m.sides.assign(n, 1.0);
  return m;
}

std::vector<double> smooth_field(const TorusGrid& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng), p = u(rng);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(i);
    double s = a * std::sin(2 * kPi * x[0] + p) + b * std::cos(2 * kPi * x[1]);
    s += g.dim() > 2 ? c * std::sin(2 * kPi * (x[0] + x[2])) : c * std::sin(2 * kPi * (x[0] - x[1]));
    f[i] = amp * s;
  }
  return f;
}

Outcome brane_suite() {
  double spread = 0.0, lambda = 0.0, variation = 0.0;
  int iterations = 0;
  for (int n : {2, 3}) {
    const auto m = cusp(n);
    const TorusGrid g(std::vector<int>(n, 8), std::vector<double>(n, 1.0));
    double lo = INFINITY, hi = -INFINITY;
    for (int k = 0; k < 20; ++k) {
      const double t = -1.0 + 0.1 * k;
      const double b = brane_action({g, std::vector<double>(g.size(), 0.0), t}, m).action;
      lo = std::min(lo, b);
      hi = std::max(hi, b);
      if (k % 5 == 0) {
        const auto st = principal_eigenvalue(cusp_slice(m, g, t), StabilityForm::stationary);
        lambda = std::max(lambda, std::abs(st.lambda1));
      }
    }
    spread = std::max(spread, hi - lo);

    auto bumped = m;
    bumped.bump = {0.05, 0.3, 0.6};
    const TorusGrid gs(std::vector<int>(n, n == 2 ? 32 : 16), std::vector<double>(n, 1.0), TorusStencil::spectral);
    std::mt19937_64 rng(11 + n);
    for (int trial = 0; trial < 5; ++trial) {
      const auto u0 = smooth_field(gs, rng, 0.1);
      const auto v = smooth_field(gs, rng, 1.0);
      const double h = 1e-4;
      GraphSurface sp{gs, u0, 0.2}, sm{gs, u0, 0.2};
      for (std::size_t i = 0; i < gs.size(); ++i) {
        sp.u[i] += h * v[i];
        sm.u[i] -= h * v[i];
      }
      const double fd = (brane_action(sp, bumped).action - brane_action(sm, bumped).action) / (2 * h);
      const double an = first_variation({gs, u0, 0.2}, bumped, v);
      variation = std::max(variation, std::abs(fd - an) / (std::abs(an) + 1e-3));
    }

    auto folded = m;
    folded.bump = {0.02, 0.1, 0.8};
    const TorusGrid gf(std::vector<int>(n, n == 2 ? 12 : 8), std::vector<double>(n, 1.0));
    for (const auto& model : {m, folded}) {
      for (const auto& leaf : cmc_foliation(model, gf, 0.0, std::vector<double>{-0.1, 0.0, 0.1})) {
        iterations = std::max(iterations, leaf.iterations);
      }
    }
  }
  const bool ok = spread < 1e-8 && lambda < 1e-8 && variation < 1e-6 && iterations <= 5;
  return {ok, fmt("action spread %.2e (< 1e-8), |lambda1| %.2e (< 1e-8), first variation rel %.2e (< 1e-6), "
                  "Newton iterations %d (<= 5)",
                  spread, lambda, variation, iterations)};
}

// ----- 7 -----

Outcome yamabe_suite() {
  double unit = 0.0;
  for (int d = 3; d <= 5; ++d) {
    const auto sol = yamabe_solve(yamabe_problem(*hyperbolic_compact(d), {1e-3, 5.0, 401, 0}));
    for (double u : sol.u) unit = std::max(unit, std::abs(u - 1.0));
  }
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> amp(0.05, 1.0), center(0.2, 2.0), width(0.1, 0.8), tilt(0.0, 1.0);
  double u_max = -INFINITY, vd_max = -INFINITY;
  for (int trial = 0; trial < 10; ++trial) {
    const bool axisymmetric = trial >= 7;
    auto p = axisymmetric ? yamabe_problem(*planted_chart_compact({0.0, {}, 1.0, 0.0, {}}), {1e-3, 5.0, 241, 12})
                          : yamabe_problem(*hyperbolic_compact(3), {1e-3, 5.0, 401, 0});
    const cli::SurplusBump b{amp(rng), center(rng), width(rng), axisymmetric ? tilt(rng) : 0.0};
    prescribe_surplus(p, cli::surplus_field(3, {b}));
    const auto sol = yamabe_solve(p);
    u_max = std::max(u_max, sol.u_max);
    for (double v : sol.v_d) vd_max = std::max(vd_max, v);
  }
  double barrier = 0.0;
  for (int d = 3; d <= 7; ++d) {
    const double t = 1e-3;
    const double ratio = apply_lt(d, t, barrier_profile(d, t)) / std::pow(t, d + 1);
    barrier = std::max(barrier, std::abs(ratio / (d * (d + 2.0)) - 1.0));
  }
  const bool ok = unit < 1e-9 && u_max <= 1.0 + 1e-12 && vd_max < 0.0 && barrier < 0.01;
  return {ok, fmt("max |u - 1| %.2e (< 1e-9); 10 bumps: max u - 1 = %.2e (<= 1e-12 roundoff), max v_d %.3e (< 0); "
                  "L_t w / t^(d+1) rel error %.2e (< 1%%)",
                  unit, u_max - 1.0, vd_max, barrier)};
}

// ----- 8 -----

double leading(const CompactMetric& e, double theta, double CompactScalar::*part) {
  auto fn = [&](double t) { return compact_scalar(e, t, {theta, 0.0}).*part; };
  return series_coefficients(fn, 3, 5, 1e-3, 2e-2).coef[0];
}

Outcome scalar_cancellation() {
  const auto free = planted_chart_compact({0.2, {}, 1.0, 0.0, {}});
  const auto unit = planted_chart_compact({0.2, {0.5}, 1.0, 0.0, {}});
  const auto mu = boundary_mass(*unit, SphereQuadrature::polar(2, 8));
  double total = 0.0, literal = INFINITY, per_term = INFINITY;
  for (double th : {0.4, 1.2, 2.0}) {
    total = std::max(total, std::abs(leading(*free, th, &CompactScalar::excess)));
    literal = std::min(literal, std::abs(leading(*unit, th, &CompactScalar::excess)));
    per_term = std::min(per_term, std::abs(leading(*unit, th, &CompactScalar::laplacian)));
  }
  return {total < 1e-3 * per_term,
          fmt("mu = 0: |c_d| = %.2e; reference (mu = %.3f): per-term |c_d| = %.3f, so bound %.2e; "
              "literal total c_d at mu = 1 is %.2e (also cancels)",
              total, mu.mu_max, per_term, 1e-3 * per_term, literal)};
}

// ----- 9 -----

Outcome ricci_asymptotics() {
  const auto r = ricci_probe();
  const double dmu_max = *std::max_element(r.dmu_fd.begin(), r.dmu_fd.end());
  const bool ok = r.ricci_fit_error < 0.05 && dmu_max < 0.0 && r.match_error < 0.10 && r.conclusive;
  double alpha_gap = 0.0;
  for (std::size_t i = 0; i < r.alpha_ricci.size(); ++i) {
    alpha_gap = std::max(alpha_gap, std::abs(r.alpha_ricci[i] + 0.5 * r.mu_reduced[i]));
  }
  return {ok, fmt("Ricci leading coefficient error %.2e (< 5%%); max dmu %.3e (< 0); match error %.2e (< 10%%); "
                  "fitted alpha_Ric residual mean mu %.2e, |alpha + mu/2| %.1e",
                  r.ricci_fit_error, dmu_max, r.match_error, r.mu_mean, alpha_gap)};
}

// ----- 10 -----

Outcome conformal_reduction() {
  const auto res = reduce_to_constant_scalar(conformal_bump_compact(3, 0.3), {1e-3, 5.0, 801, 0});
  const double shift = *std::max_element(res.mu_shift.begin(), res.mu_shift.end());
  return {res.scalar_error < 1e-6 && shift < 0.0,
          fmt("d = 3 surplus metric: max |S + 6| %.2e (< 1e-6), max mu_shift %.3e (< 0), mass %.3f -> %.3e",
              res.scalar_error, shift, res.before.mass, res.after.mass)};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"curvature oracle equivalence", oracle_equivalence},
      {"constant-curvature recovery", constant_curvature},
      {"end-to-end deformation", deformation_end_to_end},
      {"eta1/eta2 band margins", eta_margins},
      {"f bounds", f_bounds},
      {"brane suite", brane_suite},
      {"Yamabe suite", yamabe_suite},
      {"scalar cancellation at mu = 0", scalar_cancellation},
      {"Ricci asymptotics and probe derivative", ricci_asymptotics},
      {"conformal reduction", conformal_reduction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2zu %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}
