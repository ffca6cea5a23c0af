#include "hypermass/conformal_yamabe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "conformal_internal.hpp"
#include "hypermass/errors.hpp"
#include "hypermass/parallel.hpp"

namespace hypermass {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dim(int d) {
  if (d < 3 || d > 7) fail(ErrorKind::unsupported, "d = n + 1 must lie in [3, 7]");
}

int packed_index(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

// Legendre P_{2l}(x) on jets by the three-term recurrence.
Jet3 even_legendre(const Jet3& x, int l) {
  Jet3 prev(1.0), cur = x;
  if (l == 0) return prev;
  for (int k = 1; k < 2 * l; ++k) {
    Jet3 next = ((2.0 * k + 1.0) * x * cur - static_cast<double>(k) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double even_legendre(double x, int l) { return std::legendre(2 * l, x); }

}  // namespace

double sphere_volume(int n) {
  return 2.0 * std::pow(kPi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

std::vector<double> fejer_weights(int ntheta) {
  std::vector<double> w(static_cast<std::size_t>(ntheta));
  for (int j = 0; j < ntheta; ++j) {
    const double th = (j + 0.5) * kPi / ntheta;
    double sum = 0.0;
    for (int k = 1; k <= ntheta / 2; ++k) sum += std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
    w[j] = 2.0 / ntheta * (1.0 - 2.0 * sum);
  }
  return w;
}

SphereQuadrature SphereQuadrature::latlon(int ntheta, int nphi) {
  if (ntheta < 1 || nphi < 1) fail(ErrorKind::range, "quadrature sizes must be positive");
  SphereQuadrature q;
  q.n_ = 2;
  const auto fw = fejer_weights(ntheta);
  for (int j = 0; j < ntheta; ++j) {
    for (int k = 0; k < nphi; ++k) {
      q.nodes_.push_back({(j + 0.5) * kPi / ntheta, 2.0 * kPi * k / nphi});
      q.weights_.push_back(fw[j] * 2.0 * kPi / nphi);
    }
  }
  return q;
}

SphereQuadrature SphereQuadrature::polar(int n, int ntheta) {
  if (n < 2) fail(ErrorKind::range, "sphere dimension must be at least 2");
  if (ntheta < 1) fail(ErrorKind::range, "quadrature size must be positive");
  SphereQuadrature q;
  q.n_ = n;
  const auto fw = fejer_weights(ntheta);
  const double ring = sphere_volume(n - 1);
  for (int j = 0; j < ntheta; ++j) {
    const double th = (j + 0.5) * kPi / ntheta;
    q.nodes_.push_back({th, 0.0});
    // Even powers of sin make the integrand polynomial in cos (Fejer) or a
    // trigonometric polynomial (midpoint).
    const double w = (n % 2 == 0) ? fw[j] * std::pow(std::sin(th), n - 2)
                                  : kPi / ntheta * std::pow(std::sin(th), n - 1);
    q.weights_.push_back(w * ring);
  }
  return q;
}

double SphereQuadrature::integrate(std::span<const double> f) const {
  if (f.size() != weights_.size()) fail(ErrorKind::contract, "quadrature size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += weights_[i] * f[i];
  return s;
}

double SphereQuadrature::volume() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

double packed_trace(std::span<const double> packed, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += packed[packed_index(i, i, n)];
  return s;
}

// ---------------------------------------------------------------------------
// Compact metrics

RotationalCompact::RotationalCompact(int d, ProfilePtr tt_excess, ProfilePtr sphere_excess)
    : d_(d), tt_(std::move(tt_excess)), sphere_(std::move(sphere_excess)) {
  check_dim(d);
  if (!tt_ || !sphere_) fail(ErrorKind::contract, "rotational metric needs both profiles");
}

ColumnSample RotationalCompact::column(double t, SpherePoint) const {
  const double ex = tt_->eval(t).v;
  const double fx = sphere_->eval(t).v;
  if (!(1.0 + ex > 0.0) || !(1.0 + fx > 0.0)) {
    fail(ErrorKind::degenerate_metric, "compactified metric degenerate at t = " + std::to_string(t));
  }
  ColumnSample c;
  c.inv_tt = 1.0 / (1.0 + ex);
  c.inv_tt_defect = ex / (1.0 + ex);
  const int n = d_ - 1;
  c.tangential.assign(static_cast<std::size_t>(packed_size(n)), 0.0);
  for (int i = 0; i < n; ++i) c.tangential[packed_index(i, i, n)] = fx;
  return c;
}

ChartCompact::ChartCompact(ExcessFn excess, bool axisymmetric)
    : fn_(std::move(excess)), axisymmetric_(axisymmetric) {
  if (!fn_) fail(ErrorKind::contract, "chart metric needs an excess function");
}

ExcessJets ChartCompact::eval(double t, SpherePoint x) const {
  return fn_(Jet3::variable(t, 0), Jet3::variable(x.theta, 1), Jet3::variable(x.phi, 2));
}

std::array<double, 6> ChartCompact::excess(double t, SpherePoint x) const {
  const auto p = eval(t, x);
  std::array<double, 6> out{};
  for (int c = 0; c < 6; ++c) out[c] = p[c].v;
  return out;
}

namespace {

ExcessJets with_round(ExcessJets p, const Jet3& theta) {
  const Jet3 s = sin(theta);
  p[0] += 1.0;
  p[3] += 1.0;
  p[5] += s * s;
  return p;
}

}  // namespace

MetricJets<3> ChartCompact::compact_jets(double t, SpherePoint x) const {
  const Jet3 th = Jet3::variable(x.theta, 1);
  return detail::jets_from(
      with_round(fn_(Jet3::variable(t, 0), th, Jet3::variable(x.phi, 2)), th));
}

MetricJets<3> ChartCompact::physical_jets(double t, SpherePoint x) const {
  const Jet3 tt = Jet3::variable(t, 0);
  const Jet3 th = Jet3::variable(x.theta, 1);
  auto e = with_round(fn_(tt, th, Jet3::variable(x.phi, 2)), th);
  const Jet3 sh = sinh(tt);
  const Jet3 w = reciprocal(sh * sh);
  for (auto& c : e) c = c * w;
  return detail::jets_from(e);
}

ColumnSample ChartCompact::column(double t, SpherePoint x) const {
  const auto p = excess(t, x);
  const double s = std::sin(x.theta);
  Eigen::Matrix3d e;
  e << 1.0 + p[0], p[1], p[2], p[1], 1.0 + p[3], p[4], p[2], p[4], s * s + p[5];
  const double det = e.determinant();
  if (!(det > 0.0) || !(e(0, 0) > 0.0)) {
    fail(ErrorKind::degenerate_metric, "compactified metric degenerate at t = " + std::to_string(t));
  }
  const Eigen::Matrix3d inv = e.inverse();
  detail::Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = inv(i, j);
  ColumnSample c;
  c.inv_tt = inv(0, 0);
  c.inv_tt_defect = detail::inv_tt_defect(m, p, x.theta);
  c.tangential = {p[3], p[4] / s, p[5] / (s * s)};
  return c;
}

CompactMetricPtr hyperbolic_compact(int d) {
  auto zero = std::make_shared<ConstantProfile>(0.0);
  return std::make_shared<RotationalCompact>(d, zero, zero);
}

CompactMetricPtr power_compact(int d, double tt_coef, double sphere_coef, double width) {
  check_dim(d);
  auto profile = [d, width](double coef) {
    return make_profile([d, width, coef](const Jet<1>& t) {
      Jet<1> p(coef);
      for (int k = 0; k < d; ++k) p = p * t;
      if (width > 0.0) p = p * exp(-(t * t) / (width * width));
      return p;
    });
  };
  return std::make_shared<RotationalCompact>(d, profile(tt_coef), profile(sphere_coef));
}

CompactMetricPtr conformal_bump_compact(int d, double amplitude) {
  check_dim(d);
  if (!(amplitude > -1.0)) fail(ErrorKind::range, "bump amplitude must exceed -1");
  const double p = 4.0 / (d - 2.0);
  auto prof = make_profile([d, amplitude, p](const Jet<1>& t) {
    Jet<1> y(amplitude);
    const Jet<1> th = tanh(t);
    for (int k = 0; k < d; ++k) y = y * th;
    const double b = 1.0 + y.v;
    return Jet<1>::compose(y, std::expm1(p * std::log1p(y.v)), p * std::pow(b, p - 1.0),
                           p * (p - 1.0) * std::pow(b, p - 2.0));
  });
  return std::make_shared<RotationalCompact>(d, prof, prof);
}

std::shared_ptr<const ChartCompact> planted_chart_compact(const PlantedTensor& planted) {
  auto fn = [planted](const Jet3& t, const Jet3& th, const Jet3&) {
    const Jet3 s = sin(th);
    const Jet3 c = cos(th);
    Jet3 radial = t * t * t;
    if (planted.width > 0.0) radial = radial * exp(-(t * t) / (planted.width * planted.width));
    Jet3 q = planted.tracefree * s * s;
    Jet3 sub(0.0);
    for (std::size_t l = 0; l < planted.subleading.size(); ++l) {
      if (planted.subleading[l] != 0.0) {
        sub += planted.subleading[l] * even_legendre(c, static_cast<int>(l));
      }
    }
    q += t * s * s * sub;
    Jet3 tau(0.0);
    for (std::size_t l = 0; l < planted.trace_modes.size(); ++l) {
      if (planted.trace_modes[l] != 0.0) {
        tau += planted.trace_modes[l] * even_legendre(c, static_cast<int>(l));
      }
    }
    ExcessJets p{};
    p[0] = planted.tt * radial;
    p[3] = radial * (q + tau);
    p[5] = radial * s * s * (tau - q);
    return p;
  };
  return std::make_shared<ChartCompact>(fn, true);
}

std::array<double, 3> planted_boundary_tensor(const PlantedTensor& p, double theta) {
  const double s = std::sin(theta);
  double tau = 0.0;
  for (std::size_t l = 0; l < p.trace_modes.size(); ++l) {
    tau += p.trace_modes[l] * even_legendre(std::cos(theta), static_cast<int>(l));
  }
  const double q = p.tracefree * s * s;
  return {q + tau, 0.0, tau - q};
}

// ---------------------------------------------------------------------------
// Curvature

namespace detail {

MetricJets<3> jets_from(const ExcessJets& e) {
  static constexpr int kIdx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  MetricJets<3> m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Jet3& c = e[kIdx[i][j]];
      m.g[i][j] = c.v;
      for (int k = 0; k < 3; ++k) {
        m.dg[k][i][j] = c.d(k);
        for (int l = 0; l < 3; ++l) m.ddg[k][l][i][j] = c.dd(k, l);
      }
    }
  }
  return m;
}

double inv_tt_defect(const Mat3& inv, const std::array<double, 6>& p, double theta) {
  static constexpr int kIdx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  (void)theta;  // e0^{tt} = 1
  double out = 0.0;
  for (int k = 0; k < 3; ++k) out += inv[0][k] * p[kIdx[k][0]];
  return out;
}

ChartGeometry chart_geometry(const MetricJets<3>& e, const std::array<double, 6>& excess, double t,
                             double theta) {
  const auto cur = curvature_from_jets<3>(e);
  ChartGeometry out;
  out.inverse = cur.inverse;
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += cur.inverse[i][j] * cur.christoffel[k][i][j];
    out.contracted[k] = s;
  }
  const double sh = std::sinh(t), ch = std::cosh(t);
  const double defect = inv_tt_defect(cur.inverse, excess, theta);
  out.inv_tt_defect = defect;

  CompactScalar& sc = out.scalar;
  sc.d = 3;
  sc.gradient = 6.0 * defect * ch * ch;
  // Lap_e rho - sinh t
  const double lap_shift = -defect * sh - out.contracted[0] * ch;
  sc.laplacian = 4.0 * sh * lap_shift;
  sc.intrinsic = sh * sh * (cur.scalar - 2.0);
  sc.excess = sc.gradient + sc.laplacian + sc.intrinsic;

  const double grad_sq_shift = sh * sh - defect * ch * ch;  // |d rho|^2 - 1
  const double bracket = sh * (sh + lap_shift) - 2.0 * grad_sq_shift - sc.excess / 3.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double hess = (i == 0 && j == 0 ? sh : 0.0) - cur.christoffel[0][i][j] * ch;
      out.traceless[i][j] = sh * sh * cur.ricci[i][j] + sh * hess + bracket * e.g[i][j];
    }
  }
  return out;
}

}  // namespace detail

namespace {

CompactScalar rotational_scalar(const RotationalCompact& m, double t) {
  const int d = m.dim();
  const double mm = 0.5 * (d - 1);
  const RadialJet ex = m.tt_excess(t);
  const RadialJet fx = m.sphere_excess(t);
  const double E = 1.0 + ex.v, F = 1.0 + fx.v;
  if (!(E > 0.0) || !(F > 0.0)) {
    fail(ErrorKind::degenerate_metric, "compactified metric degenerate at t = " + std::to_string(t));
  }
  const double sh = std::sinh(t), ch = std::cosh(t);
  const double defect = ex.v / E;
  const double sqF = std::sqrt(F);
  const double phi_t = fx.d1 / (2.0 * sqF);
  const double phi_tt = fx.d2 / (2.0 * sqF) - fx.d1 * fx.d1 / (4.0 * F * sqF);
  const double phi_tau2 = phi_t * phi_t / E;
  const double phi_tautau = phi_tt / E - 0.5 * ex.d1 * phi_t / (E * E);

  CompactScalar sc;
  sc.d = d;
  sc.gradient = d * (d - 1.0) * defect * ch * ch;
  sc.laplacian = 2.0 * (d - 1.0) * sh *
                 (-sh * defect + ch * (mm * fx.d1 / F - 0.5 * ex.d1 / E) / E);
  sc.intrinsic = sh * sh *
                 ((d - 1.0) * (d - 2.0) * (-fx.v - phi_tau2) / F -
                  2.0 * (d - 1.0) * phi_tautau / sqF);
  sc.excess = sc.gradient + sc.laplacian + sc.intrinsic;
  return sc;
}

}  // namespace

CompactScalar compact_scalar(const CompactMetric& e, double t, SpherePoint x) {
  if (!(t > 0.0)) fail(ErrorKind::range, "t must be positive");
  if (const auto* r = dynamic_cast<const RotationalCompact*>(&e)) return rotational_scalar(*r, t);
  if (const auto* c = dynamic_cast<const ChartCompact*>(&e)) {
    return detail::chart_geometry(c->compact_jets(t, x), c->excess(t, x), t, x.theta).scalar;
  }
  fail(ErrorKind::unsupported, "compact_scalar needs a rotational or chart metric");
}

CompactRicci compact_ricci(const ChartCompact& e, double t, SpherePoint x) {
  if (!(t > 0.0)) fail(ErrorKind::range, "t must be positive");
  const auto geo = detail::chart_geometry(e.compact_jets(t, x), e.excess(t, x), t, x.theta);
  return {geo.scalar, geo.traceless};
}

MetricSampler physical_sampler(CompactMetricPtr e) {
  if (auto c = std::dynamic_pointer_cast<const ChartCompact>(e)) {
    return [c](std::span<const double> x, std::span<double> out) {
      const auto p = c->excess(x[0], {x[1], x[2]});
      const double s = std::sin(x[1]);
      const double w = 1.0 / (std::sinh(x[0]) * std::sinh(x[0]));
      const double full[9] = {1.0 + p[0], p[1], p[2], p[1], 1.0 + p[3], p[4], p[2], p[4],
                              s * s + p[5]};
      for (int i = 0; i < 9; ++i) out[i] = w * full[i];
    };
  }
  if (auto r = std::dynamic_pointer_cast<const RotationalCompact>(e)) {
    return [r](std::span<const double> x, std::span<double> out) {
      const int d = r->dim();
      const double w = 1.0 / (std::sinh(x[0]) * std::sinh(x[0]));
      std::fill(out.begin(), out.end(), 0.0);
      out[0] = w * (1.0 + r->tt_excess(x[0]).v);
      const double F = w * (1.0 + r->sphere_excess(x[0]).v);
      double warp = 1.0;
      for (int k = 1; k < d; ++k) {
        out[k * d + k] = F * warp;
        const double s = std::sin(x[k]);
        warp *= s * s;
      }
    };
  }
  fail(ErrorKind::unsupported, "physical_sampler needs a rotational or chart metric");
}

double compact_scalar_fd_oracle(CompactMetricPtr e, double t, SpherePoint x, double rel_step) {
  const int d = e->dim();
  std::vector<double> point(static_cast<std::size_t>(d), 1.0);
  std::vector<double> steps(static_cast<std::size_t>(d), 5e-3);
  CoordinateBox box{std::vector<double>(d, 1e-3), std::vector<double>(d, kPi - 1e-3)};
  point[0] = t;
  steps[0] = rel_step * t;
  box.lo[0] = 0.5 * t;
  box.hi[0] = 2.0 * t;
  if (d == 3 && !e->rotational()) {
    point[1] = x.theta;
    point[2] = x.phi;
    box.lo[2] = -10.0;
    box.hi[2] = 10.0;
  }
  return scalar_curvature_fd_oracle(d, physical_sampler(std::move(e)), point, steps, box);
}

// ---------------------------------------------------------------------------
// Fits

PowerFit fit_powers(std::span<const double> t, std::span<const double> values,
                    std::span<const double> powers) {
  const auto m = static_cast<Eigen::Index>(t.size());
  const auto k = static_cast<Eigen::Index>(powers.size());
  if (m != static_cast<Eigen::Index>(values.size())) fail(ErrorKind::contract, "fit size mismatch");
  if (m < k) fail(ErrorKind::range, "fit needs at least as many samples as powers");
  Eigen::MatrixXd a(m, k);
  Eigen::VectorXd y(m);
  Eigen::VectorXd scale(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    double mx = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
      a(r, c) = std::pow(t[r], powers[c]);
      mx = std::max(mx, std::abs(a(r, c)));
    }
    scale(c) = mx > 0.0 ? mx : 1.0;
    a.col(c) /= scale(c);
  }
  for (Eigen::Index r = 0; r < m; ++r) y(r) = values[r];
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(y);
  PowerFit fit;
  fit.coef.resize(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) fit.coef[c] = x(c) / scale(c);
  const Eigen::VectorXd r = a * x - y;
  fit.residual = r.cwiseAbs().maxCoeff();
  fit.scale = y.cwiseAbs().maxCoeff();
  return fit;
}

PowerFit series_coefficients(const std::function<double(double)>& fn, int order, int terms,
                             double t_lo, double t_hi, int samples) {
  const auto t = geomspace(t_lo, t_hi, samples);
  std::vector<double> v(t.size()), p;
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = fn(t[i]);
  for (int k = 0; k < terms; ++k) p.push_back(order + k);
  return fit_powers(t, v, p);
}

// ---------------------------------------------------------------------------
// Boundary data and mass

std::span<const double> BoundarySamples::at(std::size_t it, std::size_t node) const {
  const auto np = static_cast<std::size_t>(packed());
  return std::span<const double>(tangential).subspan((it * sphere.size() + node) * np, np);
}

BoundarySamples sample_boundary(const CompactMetric& e, const SphereQuadrature& sphere,
                                std::span<const double> t) {
  BoundarySamples out;
  out.d = e.dim();
  out.t.assign(t.begin(), t.end());
  out.sphere = sphere;
  const auto np = static_cast<std::size_t>(out.packed());
  out.tangential.resize(t.size() * sphere.size() * np);
  for (std::size_t it = 0; it < t.size(); ++it) {
    for (std::size_t k = 0; k < sphere.size(); ++k) {
      const auto c = e.column(t[it], sphere.nodes()[k]);
      std::copy(c.tangential.begin(), c.tangential.end(),
                out.tangential.begin() + static_cast<std::ptrdiff_t>((it * sphere.size() + k) * np));
    }
  }
  return out;
}

BoundaryData mass_and_aspect(const BoundarySamples& s, MassOptions opts) {
  const int d = s.d;
  check_dim(d);
  if (s.sphere.n() != d - 1) fail(ErrorKind::contract, "sphere quadrature dimension must be d - 1");
  std::vector<double> ts = s.t;
  std::sort(ts.begin(), ts.end());
  if (std::adjacent_find(ts.begin(), ts.end()) != ts.end() || ts.front() <= 0.0) {
    fail(ErrorKind::range, "boundary samples need distinct positive t values");
  }
  if (static_cast<int>(ts.size()) < d + 3) {
    fail(ErrorKind::range, "boundary fit needs at least d + 3 t samples");
  }
  const int degree = std::min(opts.degree, static_cast<int>(s.t.size()) - 2);
  std::vector<double> powers;
  for (int k = 0; k <= degree; ++k) powers.push_back(k);

  BoundaryData out;
  out.d = d;
  const int n = d - 1;
  const auto np = static_cast<std::size_t>(s.packed());
  out.aspect.assign(s.sphere.size(), std::vector<double>(np, 0.0));
  out.mu.assign(s.sphere.size(), 0.0);
  std::vector<double> q(s.t.size());
  for (std::size_t k = 0; k < s.sphere.size(); ++k) {
    for (std::size_t c = 0; c < np; ++c) {
      for (std::size_t it = 0; it < s.t.size(); ++it) {
        q[it] = s.at(it, k)[c] / std::pow(s.t[it], d);
      }
      const auto fit = fit_powers(s.t, q, powers);
      out.aspect[k][c] = fit.coef[0];
      const double rel = fit.residual / std::max(fit.scale, 1.0);
      out.fit_residual = std::max(out.fit_residual, rel);
    }
    out.mu[k] = packed_trace(out.aspect[k], n);
  }
  if (out.fit_residual > opts.residual_tol) {
    fail(ErrorKind::hypothesis,
         "not asymptotically hyperbolic: (h - h0) / t^d fit residual " +
             std::to_string(out.fit_residual));
  }
  out.mass = s.sphere.integrate(out.mu);
  out.mu_min = *std::min_element(out.mu.begin(), out.mu.end());
  out.mu_max = *std::max_element(out.mu.begin(), out.mu.end());
  return out;
}

// ---------------------------------------------------------------------------
// Gauge

namespace {

struct ThetaTrack {
  std::vector<double> t, x, dx;

  // Cubic Hermite interpolation of theta - 1.
  std::pair<double, double> at(double tq) const {
    if (tq <= t.front()) return {x.front() * std::pow(tq / t.front(), 4.0), 0.0};
    auto it = std::upper_bound(t.begin(), t.end(), tq);
    if (it == t.end()) fail(ErrorKind::range, "gauge query beyond the integrated range");
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    const double h = t[i + 1] - t[i];
    const double u = (tq - t[i]) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    const double v = h00 * x[i] + h10 * h * dx[i] + h01 * x[i + 1] + h11 * h * dx[i + 1];
    const double dv = (6 * u * u - 6 * u) / h * x[i] + (3 * u * u - 4 * u + 1) * dx[i] +
                      (6 * u - 6 * u * u) / h * x[i + 1] + (3 * u * u - 2 * u) * dx[i + 1];
    return {v, dv};
  }
};

double gauge_rate(const CompactMetric& e, SpherePoint x, double t, double vt) {
  const auto col = e.column(t, x);
  const double sh = std::sinh(t), ch = std::cosh(t);
  const double th = 1.0 + vt;
  const double a = sh * col.inv_tt;
  const double b = 2.0 * th * col.inv_tt * ch;
  const double c = th * th * (sh * vt * (vt + 2.0) + col.inv_tt_defect * ch * ch / sh);
  const double disc = b * b + 4.0 * a * c;
  const double den = b + std::sqrt(std::max(disc, 0.0));
  if (!(disc >= 0.0) || !(den > 0.0) || !std::isfinite(c)) {
    fail(ErrorKind::solver, "characteristic ODE blew up at t = " + std::to_string(t) +
                                "; reduce the t range or the step size");
  }
  return 2.0 * c / den;
}

ThetaTrack integrate_theta(const CompactMetric& e, SpherePoint x, double t_end,
                           const GaugeOptions& opts) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 1>;
  const double t0 = std::min(1e-6, 1e-4 * t_end);
  ThetaTrack track;
  track.t = geomspace(t0, t_end, std::max(opts.dense_points, 16));
  State state{0.0};
  auto rhs = [&](const State& v, State& dv, double t) { dv[0] = gauge_rate(e, x, t, v[0]); };
  auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol, ode::runge_kutta_dopri5<State>());
  track.x.reserve(track.t.size());
  ode::integrate_times(stepper, rhs, state, track.t.begin(), track.t.end(), 1e-3 * t0,
                       [&](const State& v, double) { track.x.push_back(v[0]); });
  track.dx.resize(track.t.size());
  for (std::size_t i = 0; i < track.t.size(); ++i) {
    track.dx[i] = gauge_rate(e, x, track.t[i], track.x[i]);
  }
  return track;
}

}  // namespace

std::vector<double> gauge_factor(const CompactMetric& e, SpherePoint x, std::span<const double> t,
                                 GaugeOptions opts) {
  if (t.empty()) return {};
  const double t_end = *std::max_element(t.begin(), t.end()) * 1.01;
  const auto track = integrate_theta(e, x, t_end, opts);
  std::vector<double> out;
  for (double tq : t) out.push_back(track.at(tq).first);
  return out;
}

GaugeSolution gauge_normalize(const CompactMetric& e, const SphereQuadrature& sphere,
                              std::span<const double> t_hat, GaugeOptions opts) {
  const int d = e.dim();
  check_dim(d);
  if (t_hat.empty()) fail(ErrorKind::range, "gauge needs sample values");
  if (!e.rotational() && !(d == 3)) {
    fail(ErrorKind::unsupported, "gauge normalization needs rotational or n = 2 data");
  }
  GaugeSolution out;
  out.d = d;
  out.t_hat.assign(t_hat.begin(), t_hat.end());
  out.sphere = sphere;
  const std::size_t nn = sphere.size(), nt = t_hat.size();
  out.t_source.assign(nt * nn, 0.0);
  out.theta_defect.assign(nt * nn, 0.0);
  out.normalized.d = d;
  out.normalized.t = out.t_hat;
  out.normalized.sphere = sphere;
  const auto np = static_cast<std::size_t>(out.normalized.packed());
  out.normalized.tangential.assign(nt * nn * np, 0.0);
  std::vector<double> eik(nn, 0.0);
  const double t_end = *std::max_element(t_hat.begin(), t_hat.end()) * 1.05 + 1e-3;
  const int n = d - 1;

  parallel_for(nn, [&](std::size_t k) {
    const SpherePoint x = sphere.nodes()[k];
    const auto track = integrate_theta(e, x, t_end, opts);
    for (std::size_t it = 0; it < nt; ++it) {
      const double th_hat = t_hat[it];
      double t = th_hat;
      for (int iter = 0; iter < 50; ++iter) {
        const double next = std::asinh(std::sinh(th_hat) / (1.0 + track.at(t).first));
        const bool done = std::abs(next - t) <= 1e-16 * t;
        t = next;
        if (done) break;
      }
      const auto [vt, dvt] = track.at(t);
      const double th = 1.0 + vt;
      out.t_source[it * nn + k] = t;
      out.theta_defect[it * nn + k] = vt;
      const auto col = e.column(t, x);
      const double th2m1 = vt * (2.0 + vt);
      double* dst = out.normalized.tangential.data() + (it * nn + k) * np;
      for (std::size_t c = 0; c < np; ++c) dst[c] = th * th * col.tangential[c];
      for (int i = 0; i < n; ++i) dst[packed_index(i, i, n)] += th2m1;
      const double sh = std::sinh(t), ch = std::cosh(t);
      const double rate = (dvt * sh + th * ch) / std::sqrt(1.0 + th * th * sh * sh);
      eik[k] = std::max(eik[k], std::abs(std::sqrt(col.inv_tt) * rate / th - 1.0));
    }
  });
  out.eikonal_defect = *std::max_element(eik.begin(), eik.end());
  return out;
}

namespace {

class GaussForm final : public CompactMetric {
 public:
  explicit GaussForm(GaugeSolution g) : g_(std::move(g)) {}
  int dim() const override { return g_.d; }
  ColumnSample column(double t, SpherePoint x) const override {
    const auto nodes = g_.sphere.nodes();
    std::size_t best = 0;
    double dist = 1e300;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double dd = std::abs(nodes[k].theta - x.theta) + std::abs(nodes[k].phi - x.phi);
      if (dd < dist) {
        dist = dd;
        best = k;
      }
    }
    const auto& ts = g_.t_hat;
    const auto np = static_cast<std::size_t>(g_.normalized.packed());
    ColumnSample c;
    c.tangential.assign(np, 0.0);
    if (t <= ts.front()) {
      const double w = std::pow(t / ts.front(), g_.d);
      const auto a = g_.normalized.at(0, best);
      for (std::size_t q = 0; q < np; ++q) c.tangential[q] = w * a[q];
      return c;
    }
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i = it == ts.end() ? ts.size() - 2 : static_cast<std::size_t>(it - ts.begin()) - 1;
    const double u = (t - ts[i]) / (ts[i + 1] - ts[i]);
    const auto a = g_.normalized.at(i, best), b = g_.normalized.at(i + 1, best);
    for (std::size_t q = 0; q < np; ++q) c.tangential[q] = (1.0 - u) * a[q] + u * b[q];
    return c;
  }

 private:
  GaugeSolution g_;
};

}  // namespace

CompactMetricPtr gauss_form(const GaugeSolution& g) {
  if (g.t_hat.size() < 2) fail(ErrorKind::range, "gauss_form needs at least two samples");
  return std::make_shared<GaussForm>(g);
}

BoundaryData boundary_mass(const CompactMetric& e, const SphereQuadrature& sphere,
                           BoundaryOptions opts) {
  const auto t = linspace(opts.t_lo, opts.t_hi, opts.samples);
  const auto g = gauge_normalize(e, sphere, t, opts.gauge);
  return mass_and_aspect(g.normalized, opts.mass);
}

// ---------------------------------------------------------------------------
// Barrier operators

double apply_lt(int d, double t, RadialJet w) {
  const double sh = std::sinh(t), ch = std::cosh(t);
  return -sh * sh * w.d2 + (d - 2.0) * sh * ch * w.d1 + d * w.v;
}

RadialJet barrier_profile(int d, double t) {
  const double td = std::pow(t, d);
  return {-td * (1.0 + d * t), -d * td / t - d * (d + 1.0) * td,
          -d * (d - 1.0) * td / (t * t) - d * d * (d + 1.0) * td / t};
}

double indicial_polynomial(int d, double a) { return -(a - d) * (a + 1.0); }

}  // namespace hypermass
