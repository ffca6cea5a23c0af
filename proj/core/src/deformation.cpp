#include "hypermass/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "hypermass/errors.hpp"
#include "hypermass/parallel.hpp"
#include "hypermass/warped_geometry.hpp"

namespace hypermass {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;
constexpr int kPanels = 8;

template <class T, class Fn>
T composite_gauss(Fn&& fn, double lo, double hi, int panels = kPanels) {
  const auto& x = Gauss::abscissa();
  const auto& w = Gauss::weights();
  T sum = 0.0;
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = lo + (p + 0.5) * h;
    const double half = 0.5 * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum += (w[i] * half) * (fn(c + half * x[i]) + fn(c - half * x[i]));
    }
  }
  return sum;
}

// Quintic smoothstep and derivatives on [0, 1].
double step5(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }
double step5_d1(double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); }
double step5_d2(double s) { return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s); }

double bump(double xi) {
  if (std::abs(xi) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - xi * xi));
}

double bump_primitive(double xi) {
  if (xi <= -1.0) return 0.0;
  return composite_gauss<double>(bump, -1.0, std::min(xi, 1.0), 16);
}

const double kLog87 = std::log(8.0 / 7.0);

RadialJet cutoff_jet(double r, double r7) {
  if (r <= r7) return {1.0, 0.0, 0.0};
  const double s = std::log(r / r7) / kLog87;
  if (s >= 1.0) return {0.0, 0.0, 0.0};
  const double d1 = step5_d1(s), d2 = step5_d2(s);
  return {1.0 - step5(s), -d1 / (r * kLog87), (-d2 / (kLog87 * kLog87) + d1 / kLog87) / (r * r)};
}

class CutoffProfile final : public RadialProfile {
 public:
  explicit CutoffProfile(DeformationPtr d) : d_(std::move(d)) {}
  RadialJet eval(double r) const override { return d_->cutoff(r); }

 private:
  DeformationPtr d_;
};

class ConstructedWarp final : public ScalarField {
 public:
  ConstructedWarp(DeformationPtr d, AlphaFieldPtr alpha, int n, bool rotational)
      : d_(std::move(d)), alpha_(std::move(alpha)), n_(n), rotational_(rotational) {}

  FieldJet jet(SpherePoint x, double r) const override {
    FieldJet mu = alpha_->mass_aspect(x, n_);
    mu.v = -mu.v;
    for (auto& v : mu.x) v = -v;
    for (auto& v : mu.xx) v = -v;
    return d_->warp_jet(mu, r);
  }
  double value(SpherePoint x, double r) const override {
    return d_->state(-alpha_->mass_aspect(x, n_).v, r).warp;
  }
  bool x_independent() const override { return rotational_; }

 private:
  DeformationPtr d_;
  AlphaFieldPtr alpha_;
  int n_;
  bool rotational_;
};

std::vector<double> metric_components(const RadialMetricSpec& s, SpherePoint x, double r) {
  if (s.n == 2) {
    const auto c = s.chart_components(x, r);
    return {c.begin(), c.end()};
  }
  const double f = s.f->value(x, r);
  const double c = s.alpha->isotropic(r)->v;
  return {1.0 / (1.0 + r * r * f), r * r + s.alpha_weight(r).v * c};
}

struct Accumulator {
  Accumulator(std::string n, double tol) : name(std::move(n)), tolerance(tol) {}

  std::string name;
  double tolerance = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  NodeRef worst;
  bool any = false;

  void add(double m, const NodeRef& at) {
    if (!any || m < margin || std::isnan(m)) {
      margin = m;
      worst = at;
      any = true;
    }
  }
  CheckRecord done() const {
    CheckRecord c;
    c.name = name;
    c.tolerance = tolerance;
    c.margin = any ? margin : 0.0;
    c.pass = any ? margin >= -tolerance : true;
    c.worst = worst;
    return c;
  }
};

void check_original(const RadialMetricSpec& g) {
  g.validate();
  for (double r : {g.R, 2.0 * g.R, 10.0 * g.R}) {
    if (g.f->value({}, r) != 1.0 || g.psi->eval(r).v != 1.0) {
      fail(ErrorKind::hypothesis, "deformation input must have f = 1 and psi = 1");
    }
  }
}

std::vector<double> sample_mass_aspect(const RadialMetricSpec& g, const Grid& sphere) {
  std::vector<double> mu;
  for (const auto& x : sphere.sphere()) mu.push_back(g.alpha->mass_aspect(x, g.n).v);
  return mu;
}

double observed_alpha_bound(const RadialMetricSpec& g, const Grid& sphere,
                            std::span<const double> radii) {
  double bound = 0.0;
  for (double r : radii) {
    if (g.n >= 3) {
      const RadialJet c = *g.alpha->isotropic(r);
      bound = std::max({bound, std::abs(c.v), std::abs(r * c.d1), std::abs(r * r * c.d2 + r * c.d1)});
      continue;
    }
    for (const auto& x : sphere.sphere()) {
      for (const auto& c : g.alpha->jet(x, r)) {
        bound = std::max({bound, std::abs(c.v), std::abs(r * c.r), std::abs(r * r * c.rr + r * c.r)});
        for (double v : c.x) bound = std::max(bound, std::abs(v));
        for (double v : c.xx) bound = std::max(bound, std::abs(v));
      }
    }
  }
  return bound;
}

// sup of r^(n+2) |J| + n |P| over [R1, 8 lambda R1] with trial constants f.
double envelope_level(const RadialMetricSpec& g, const DeformationPlan& plan, const Grid& sphere,
                      int count) {
  const int n = plan.n;
  auto radii = geomspace(plan.R1, plan.scaled(8.0), count);
  for (double k : {2.0, 3.0, 4.0, 5.0, 6.0, 7.0}) radii.push_back(plan.scaled(k));
  radii.push_back(2.0 * plan.R1);
  std::vector<double> sup(radii.size(), 0.0);
  const auto nodes = sphere.sphere();
  const double r7 = plan.scaled(7.0);
  parallel_for(radii.size(), [&](std::size_t i) {
    const double r = radii[i];
    const RadialJet psi = cutoff_jet(r, r7);
    double s = 0.0;
    for (double fc : {1.0, 0.5, 2.0}) {
      RadialMetricSpec trial = g;
      trial.f = std::make_shared<ConstantScalar>(fc);
      trial.psi = make_profile([psi, r](auto t) { return psi.v + psi.d1 * (t - r) + 0.5 * psi.d2 * (t - r) * (t - r); });
      for (const auto& x : nodes) {
        const double mu = g.alpha->mass_aspect(x, n).v;
        const double exact = scalar_curvature_exact(trial, x, r);
        const double lead = scalar_leading_terms(n, r, fc, 0.0, psi, mu);
        const double extra = (n + 1.0) / n * std::abs(mu) * psi.v - r / n * std::abs(mu) * psi.d1;
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(exact) + std::abs(lead));
        const double remainder = std::max(0.0, std::abs(exact - lead) - noise);
        s = std::max(s, std::pow(r, n + 2) * remainder + n * std::abs(extra));
      }
    }
    sup[i] = s;
  });
  return *std::max_element(sup.begin(), sup.end());
}

}  // namespace

double deformation_scale(int n, double mu_max, double mu_min) {
  if (!(mu_min > 0.0) || !(mu_max >= mu_min)) fail(ErrorKind::contract, "need 0 < mu_min <= mu_max");
  return std::pow(mu_max / mu_min, 1.0 / (n + 1));
}

DeformationPlan plan_deformation(int n, double R, std::span<const double> mass_aspect,
                                 double alpha_bound, double R1) {
  if (n < 2 || n > 6) fail(ErrorKind::unsupported, "sphere dimension n must lie in [2, 6]");
  if (mass_aspect.empty()) fail(ErrorKind::contract, "mass aspect samples are empty");
  if (!(R1 > R)) fail(ErrorKind::contract, "R1 must exceed R");
  double lo = INFINITY, hi = 0.0;
  for (double mu : mass_aspect) {
    if (!(mu < 0.0)) fail(ErrorKind::hypothesis, "mass aspect must be strictly negative");
    lo = std::min(lo, -mu);
    hi = std::max(hi, -mu);
  }
  if (lo <= 1e-12 * hi) fail(ErrorKind::hypothesis, "mass aspect touches zero");

  DeformationPlan p;
  p.n = n;
  p.R = R;
  p.R1 = R1;
  p.mu_max = hi;
  p.mu_min = lo;
  p.lambda = deformation_scale(n, hi, lo);
  p.alpha_bound = alpha_bound;
  const double k = (n + 1.0) / n;
  p.inv_a_lower = k * std::sqrt(4.0 / 3.0) * hi / std::pow(4.0 * p.lambda * R1, n + 1);
  p.inv_a_upper = k * std::sqrt(3.0 / 4.0) * lo / std::pow(3.0 * p.lambda * R1, n + 1);
  if (!(p.inv_a_lower < p.inv_a_upper)) {
    fail(ErrorKind::construction,
         "admissible interval for a is empty: needs mu_max / mu_min < (4/3)^n, got " +
             std::to_string(hi / lo));
  }
  p.excess = std::sqrt(p.inv_a_lower * p.inv_a_upper);
  p.a = 1.0 / (1.0 + p.excess);

  p.cutoff_b = 1.875 / kLog87 * (1.0 + 1e-12);
  double c = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double s = i / 20000.0;
    c = std::max(c, std::abs(-step5_d2(s) / (kLog87 * kLog87) + step5_d1(s) / kLog87));
  }
  p.cutoff_c = c * (1.0 + 1e-6);
  return p;
}

Deformation::Deformation(DeformationPlan plan) : plan_(plan) {
  const double r8 = plan_.scaled(8.0), r9 = plan_.scaled(9.0);
  taper_integral_ = composite_gauss<double>([&](double t) { return envelope(t).v / (t * t); }, r8, r9);
}

RadialJet Deformation::cutoff(double r) const { return cutoff_jet(r, plan_.scaled(7.0)); }

double Deformation::bump_pair(double r) const {
  const double R1 = plan_.R1, lr = plan_.lambda * R1;
  return bump((r - 1.5 * R1) / (0.5 * R1)) - bump((r - 5.5 * lr) / (0.5 * lr)) / plan_.lambda;
}

double Deformation::bump_pair_integral(double r) const {
  const double R1 = plan_.R1, lr = plan_.lambda * R1;
  return 0.5 * R1 * bump_primitive((r - 1.5 * R1) / (0.5 * R1)) -
         0.5 * R1 * bump_primitive((r - 5.5 * lr) / (0.5 * lr));
}

RadialJet Deformation::envelope(double r) const {
  const double r8 = plan_.scaled(8.0), w = plan_.lambda * plan_.R1;
  const double A0 = plan_.envelope;
  if (r <= r8) return {A0, 0.0, 0.0};
  const double s = (r - r8) / w;
  if (s >= 1.0) return {0.0, 0.0, 0.0};
  return {A0 * (1.0 - step5(s)), -A0 * step5_d1(s) / w, -A0 * step5_d2(s) / (w * w)};
}

RadialJet Deformation::envelope_primitive(double r) const {
  const int n = plan_.n;
  const double r8 = plan_.scaled(8.0), r9 = plan_.scaled(9.0);
  if (r >= r9) return {0.0, 0.0, 0.0};
  double v;
  if (r <= r8) {
    v = r / n * (plan_.envelope * (1.0 / r - 1.0 / r8) + taper_integral_);
  } else {
    v = r / n * composite_gauss<double>([&](double t) { return envelope(t).v / (t * t); }, r, r9);
  }
  const double A = envelope(r).v;
  return {v, v / r - A / (n * r), 0.0};
}

template <class T>
T Deformation::rate_integral(const T& mu, double lo, double hi) const {
  if (!(hi > lo)) return T(0.0);
  const int n = plan_.n;
  const double k = (n + 1.0) / n;
  return composite_gauss<T>(
      [&](double t) {
        const double gap = -plan_.excess * std::pow(t, n + 1) - envelope_primitive(t).v / t;
        return bump_pair(t) / (k * mu + gap);
      },
      lo, hi);
}

template <class T>
RadialState<T> Deformation::evaluate(const T& mu, double r) const {
  const int n = plan_.n;
  const double R1 = plan_.R1, lr = plan_.lambda * R1, x = plan_.excess;
  const RadialJet psi = cutoff(r);
  const RadialJet a1 = envelope_primitive(r);
  const double A = envelope(r).v;
  const double rn = std::pow(r, n), rn1 = rn * r;

  RadialState<T> s;
  const T extra = (n + 1.0) / n * psi.v * mu - r / n * psi.d1 * mu;
  const T extra_r = psi.d1 * mu - r / n * psi.d2 * mu;
  s.inner = extra + (rn1 - a1.v / r);
  s.inner_r = extra_r + ((n + 1) * rn + A / (n * r * r));
  s.outer = rn1 * (1.0 + x);
  s.outer_r = (n + 1) * rn * (1.0 + x);
  s.gap = extra - (x * rn1 + a1.v / r);
  s.gap_r = extra_r + (A / (n * r * r) - x * (n + 1) * rn);
  const double b = bump_pair(r);
  if (b != 0.0) s.blend_rate = b / s.gap;

  if (r <= R1) {
    s.blend = 1.0;
    s.potential = s.inner;
    s.potential_r = s.inner_r;
    s.warp = 1.0;
    s.warp_r = 0.0;
    return s;
  }
  // f = 1 + E / D with E = eta + A1 / r - D, kept free of the r^(n+1) cancellation.
  T E = x * rn1 + a1.v / r - extra;
  T E_r = x * (n + 1) * rn - A / (n * r * r) - extra_r;
  if (r < 6.0 * lr) {
    const T total = rate_integral(mu, R1, 2.0 * R1) + rate_integral(mu, 5.0 * lr, 6.0 * lr);
    const T m = -1.0 / total;
    s.blend = 1.0 + m * (rate_integral(mu, R1, std::min(r, 2.0 * R1)) + rate_integral(mu, 5.0 * lr, r));
    E += s.blend * s.gap - m * bump_pair_integral(r);
    E_r += s.blend * s.gap_r;
  }
  s.potential = s.outer + (E - x * rn1 - a1.v / r + extra);
  s.potential_r = s.outer_r + s.blend * s.gap_r;

  const T den = extra + rn1;
  const T den_r = extra_r + (n + 1) * rn;
  s.warp = 1.0 + E / den;
  s.warp_r = E_r / den - E * den_r / (den * den);
  return s;
}

RadialState<double> Deformation::state(double mu_abs, double r) const {
  return evaluate<double>(mu_abs, r);
}

FieldJet Deformation::warp_jet(const FieldJet& mu, double r) const {
  FieldJet out;
  const bool flat = mu.x[0] == 0.0 && mu.x[1] == 0.0 && mu.xx[0] == 0.0 && mu.xx[1] == 0.0 &&
                    mu.xx[2] == 0.0;
  if (flat || r <= plan_.R1) {
    const auto s = evaluate<double>(mu.v, r);
    out.v = s.warp;
    out.r = s.warp_r;
    return out;
  }
  const auto s = evaluate<Jet<1>>(Jet<1>::variable(mu.v, 0), r);
  const double F1 = s.warp.g[0], F2 = s.warp.h[0];
  out.v = s.warp.v;
  out.r = s.warp_r.v;
  out.x = {F1 * mu.x[0], F1 * mu.x[1]};
  out.xx = {F2 * mu.x[0] * mu.x[0] + F1 * mu.xx[0], F2 * mu.x[0] * mu.x[1] + F1 * mu.xx[1],
            F2 * mu.x[1] * mu.x[1] + F1 * mu.xx[2]};
  return out;
}

RadialMetricSpec deformed_metric(DeformationPtr d, const RadialMetricSpec& original) {
  RadialMetricSpec s = original;
  s.f = std::make_shared<ConstructedWarp>(d, original.alpha, original.n, original.rotational());
  s.psi = std::make_shared<CutoffProfile>(d);
  return s;
}

std::vector<double> verification_radii(const DeformationPlan& p, int count) {
  auto r = geomspace(p.R, p.scaled(10.0), std::max(count, 16));
  r.push_back(p.R1);
  r.push_back(2.0 * p.R1);
  for (double k = 3.0; k <= 9.0; k += 1.0) r.push_back(p.scaled(k));
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

bool VerificationReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

const CheckRecord* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

VerificationReport verify_deformation(const DeformationPtr& d, const RadialMetricSpec& original,
                                      const Grid& sphere, DeformationOptions opts) {
  const DeformationPlan& p = d->plan();
  const int n = p.n;
  const double R1 = p.R1, lr = p.lambda * R1;
  const RadialMetricSpec hat = deformed_metric(d, original);
  const RadialMetricSpec ga = hyperbolic_metric(n, original.R, 1.0 / p.a);
  const auto radii = verification_radii(p, opts.radial_nodes);
  const auto nodes = sphere.sphere();
  const std::size_t ns = nodes.size();
  const double floor_s = -n * (n + 1.0) / p.a;
  const double tol = opts.tol_rel * n * (n + 1.0) / p.a;

  struct Eval {
    NodeRef at;
    double mu = 0.0;
    RadialState<double> st;
    RadialJet psi;
    RadialJet a1;
    FieldJet f;
    double scalar = 0.0, lead = 0.0;
    double inner_diff = 0.0, outer_diff = 0.0;
    double sphere_lap = 0.0, sphere_grad2 = 0.0;
  };
  std::vector<Eval> ev(radii.size() * ns);
  parallel_for(radii.size(), [&](std::size_t ir) {
    const double r = radii[ir];
    for (std::size_t is = 0; is < ns; ++is) {
      const SpherePoint x = nodes[is];
      Eval& e = ev[ir * ns + is];
      e.at = {r, x.theta, x.phi};
      e.mu = original.alpha->mass_aspect(x, n).v;
      e.st = d->state(-e.mu, r);
      e.psi = d->cutoff(r);
      e.a1 = d->envelope_primitive(r);
      e.f = hat.f->jet(x, r);
      e.scalar = scalar_curvature_exact(hat, x, r);
      e.lead = scalar_leading_terms(n, r, e.f.v, e.f.r, e.psi, e.mu);
      const auto gh = metric_components(hat, x, r);
      if (r <= R1) {
        const auto g0 = metric_components(original, x, r);
        for (std::size_t c = 0; c < gh.size(); ++c) e.inner_diff = std::max(e.inner_diff, std::abs(gh[c] - g0[c]));
      }
      if (r >= 9.0 * lr) {
        const auto g1 = metric_components(ga, x, r);
        for (std::size_t c = 0; c < gh.size(); ++c) {
          const double scale = std::max(std::abs(g1[c]), std::abs(gh[c]));
          if (scale > 0.0) e.outer_diff = std::max(e.outer_diff, std::abs(gh[c] - g1[c]) / scale);
        }
      }
      if (n == 2) {
        const double s = std::sin(x.theta), c = std::cos(x.theta);
        e.sphere_lap = e.f.xx[0] + c / s * e.f.x[0] + e.f.xx[2] / (s * s);
        e.sphere_grad2 = e.f.x[0] * e.f.x[0] + e.f.x[1] * e.f.x[1] / (s * s);
      }
    }
  });

  VerificationReport rep;
  rep.plan = p;
  auto check = [&](const std::string& name, double tolerance, auto&& body) {
    Accumulator acc(name, tolerance);
    body(acc);
    rep.checks.push_back(acc.done());
  };
  const NodeRef at_r1{R1, nodes[0].theta, nodes[0].phi};

  check("a_interval", 0.0, [&](Accumulator& a) {
    const double x = p.excess;
    a.add(std::min(x - p.inv_a_lower, p.inv_a_upper - x) / x, at_r1);
  });
  check("cutoff_values", 0.0, [&](Accumulator& a) {
    a.add(-std::abs(d->cutoff(7.0 * lr).v - 1.0), {7.0 * lr});
    a.add(-std::abs(d->cutoff(8.0 * lr).v), {8.0 * lr});
  });
  check("cutoff_monotone", 0.0, [&](Accumulator& a) {
    for (double r : radii) a.add(-d->cutoff(r).d1, {r});
  });
  check("cutoff_derivative_bounds", 0.0, [&](Accumulator& a) {
    for (double r : radii) {
      const RadialJet s = d->cutoff(r);
      a.add(std::min(p.cutoff_b - r * std::abs(s.d1), p.cutoff_c - r * r * std::abs(s.d2)), {r});
    }
  });
  check("bump_mean_zero", 0.0, [&](Accumulator& a) {
    a.add(1e-10 - std::abs(d->bump_pair_integral(6.0 * lr)), {6.0 * lr});
  });
  check("bump_sign_pattern", 0.0, [&](Accumulator& a) {
    for (double r : radii) {
      const double b = d->bump_pair(r);
      if (r > R1 && r < 2.0 * R1) a.add(b, {r});
      else if (r > 5.0 * lr && r < 6.0 * lr) a.add(-b, {r});
      else a.add(-std::abs(b), {r});
    }
  });
  check("blend_rate_nonnegative", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev) a.add(e.st.blend_rate, e.at);
  });
  check("blend_endpoints", 0.0, [&](Accumulator& a) {
    for (std::size_t is = 0; is < ns; ++is) {
      const double mu = -ev[is].mu;
      const NodeRef x{0.0, nodes[is].theta, nodes[is].phi};
      a.add(-std::abs(d->state(mu, R1).blend - 1.0), {R1, x.theta, x.phi});
      a.add(1e-10 - std::abs(d->state(mu, 6.0 * lr).blend), {6.0 * lr, x.theta, x.phi});
    }
  });
  check("blend_monotone", 1e-10, [&](Accumulator& a) {
    for (std::size_t ir = 0; ir < radii.size(); ++ir)
      for (std::size_t is = 0; is < ns; ++is) {
        const auto& e = ev[ir * ns + is];
        a.add(std::min(e.st.blend, 1.0 - e.st.blend), e.at);
        if (ir + 1 < radii.size()) a.add(e.st.blend - ev[(ir + 1) * ns + is].st.blend, e.at);
      }
  });
  check("envelope_primitive", 0.0, [&](Accumulator& a) {
    for (double r : radii) {
      const double v = d->envelope_primitive(r).v;
      a.add(r >= 9.0 * lr ? -std::abs(v) : v, {r});
    }
  });
  check("eta12_slope", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= R1 && e.at.r <= 7.0 * lr) a.add(-e.st.gap_r, e.at);
  });
  check("eta12_inner_band", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= R1 && e.at.r <= 3.0 * lr) a.add(e.st.gap - p.mu_min / 20.0, e.at);
  });
  check("eta12_outer_band", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= 4.0 * lr && e.at.r <= 7.0 * lr) a.add(-e.st.gap - p.mu_max / 10.0, e.at);
  });
  check("potential_inner", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r <= R1) a.add(-std::abs(e.st.potential - e.st.inner), e.at);
  });
  check("potential_outer", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= 6.0 * lr) a.add(1e-10 - std::abs(e.st.potential - e.st.outer) / e.st.outer, e.at);
  });
  check("potential_slope", 1e-12, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= R1) a.add(-e.st.blend * e.st.gap_r / e.st.outer_r, e.at);
  });
  check("potential_identity", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev) {
      const double r = e.at.r, mu = -e.mu;
      const double lhs = (std::pow(r, n + 1) + (n + 1.0) / n * mu * e.psi.v - r / n * mu * e.psi.d1) * e.f.v -
                         e.a1.v / r;
      a.add(1e-10 - std::abs(lhs - e.st.potential) / std::abs(e.st.potential), e.at);
    }
  });
  check("f_boundary", 0.0, [&](Accumulator& a) {
    for (std::size_t is = 0; is < ns; ++is) a.add(-std::abs(ev[is].f.v - 1.0), ev[is].at);
  });
  check("f_range", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev) a.add(std::min(e.f.v - 0.5, 2.0 - e.f.v), e.at);
  });
  check("f_radial", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev) a.add(1.0 - e.at.r * e.at.r * std::abs(e.f.r), e.at);
  });
  check("f_sphere_laplacian", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev) a.add(1.0 - std::pow(e.at.r, n) * std::abs(e.sphere_lap), e.at);
  });
  check("f_sphere_gradient", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev) a.add(1.0 - std::pow(e.at.r, n) * e.sphere_grad2, e.at);
  });
  check("gluing_inner", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r <= R1) a.add(-e.inner_diff, e.at);
  });
  check("gluing_outer", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= 9.0 * lr) a.add(1e-10 - e.outer_diff, e.at);
  });
  check("scalar_bound", tol, [&](Accumulator& a) {
    for (const auto& e : ev) a.add(e.scalar - floor_s, e.at);
  });
  check("chain", tol, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= R1) a.add(e.scalar + n / std::pow(e.at.r, n) * e.st.potential_r, e.at);
  });
  check("remainder_vanishes", 0.0, [&](Accumulator& a) {
    for (const auto& e : ev)
      if (e.at.r >= 8.0 * lr) a.add(1e-10 - std::abs(e.scalar - e.lead), e.at);
  });

  rep.glue_radius_observed = radii.back();
  for (std::size_t ir = radii.size(); ir-- > 0;) {
    bool glued = true;
    for (std::size_t is = 0; is < ns; ++is) glued = glued && std::abs(ev[ir * ns + is].f.v * p.a - 1.0) <= 1e-12;
    if (!glued) break;
    rep.glue_radius_observed = radii[ir];
  }
  for (const auto& e : ev) {
    const double chain = e.scalar + n / std::pow(e.at.r, n) * e.st.potential_r;
    rep.margins.push_back({e.at, e.scalar, chain, e.scalar - floor_s});
  }
  return rep;
}

DeformationResult build_deformation(const RadialMetricSpec& original, const Grid& sphere,
                                    DeformationOptions opts) {
  check_original(original);
  const int n = original.n;
  const auto mu = sample_mass_aspect(original, sphere);
  double R1 = opts.r1_hint > 0.0 ? opts.r1_hint : 2.0 * original.R;
  double safety = opts.safety;
  DeformationResult out;

  double alpha_bound = opts.alpha_bound;
  const auto probe = plan_deformation(n, original.R, mu, alpha_bound, R1);
  const auto radii = verification_radii(probe, 64);
  const double observed = observed_alpha_bound(original, sphere, radii);
  if (alpha_bound > 0.0 && observed > alpha_bound * (1.0 + 1e-12)) {
    fail(ErrorKind::hypothesis, "alpha exceeds the stated bound Lambda");
  }
  if (alpha_bound <= 0.0) alpha_bound = observed;
  out.history.reserve(16);
  while (true) {
    if (R1 > opts.max_r1_factor * original.R) {
      const auto& last = out.history.back();
      fail(ErrorKind::construction, "no admissible R1 up to the escalation cap; last failure " +
                                        last.failed + " at R1 = " + std::to_string(last.R1));
    }
    DeformationPlan plan = plan_deformation(n, original.R, mu, alpha_bound, R1);
    plan.alpha_observed = observed;
    plan.safety = safety;
    plan.envelope = safety * envelope_level(original, plan, sphere, opts.envelope_radii);
    auto d = std::make_shared<const Deformation>(plan);
    auto rep = verify_deformation(d, original, sphere, opts);
    std::string failed;
    for (const auto& c : rep.checks)
      if (!c.pass) {
        failed = c.name;
        break;
      }
    out.history.push_back({R1, safety, failed});
    if (failed.empty()) {
      out.deformation = d;
      out.metric = deformed_metric(d, original);
      out.report = std::move(rep);
      return out;
    }
    const bool envelope_issue = failed == "chain" || failed == "scalar_bound";
    if (envelope_issue && safety * 2.0 <= opts.max_safety) {
      safety *= 2.0;
    } else {
      R1 *= 2.0;
      safety = opts.safety;
    }
  }
}

std::vector<FunctionSample> sample_functions(const Deformation& d, double mu_abs,
                                             std::span<const double> radii) {
  std::vector<FunctionSample> out;
  for (double r : radii) {
    const auto s = d.state(mu_abs, r);
    out.push_back({r, d.cutoff(r).v, d.bump_pair(r), s.blend, s.inner, s.outer, s.potential, s.warp,
                   d.envelope_primitive(r).v});
  }
  return out;
}

}  // namespace hypermass
