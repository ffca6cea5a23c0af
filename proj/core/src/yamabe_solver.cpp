#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "conformal_internal.hpp"
#include "hypermass/conformal_yamabe.hpp"
#include "hypermass/errors.hpp"
#include "hypermass/parallel.hpp"

namespace hypermass {

namespace detail {

std::vector<std::vector<double>> fornberg(double z, std::span<const double> x, int m) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(static_cast<std::size_t>(m + 1),
                                     std::vector<double>(x.size(), 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace {

Stencil window_stencil(int i, int n, double h, int width, int deriv) {
  const int start = std::clamp(i - width / 2, 0, n - width);
  std::vector<double> x(static_cast<std::size_t>(width));
  for (int q = 0; q < width; ++q) x[q] = (start + q - i) * h;
  const auto w = fornberg(0.0, x, deriv);
  Stencil st;
  for (int q = 0; q < width; ++q) st.emplace_back(start + q, w[deriv][q]);
  return st;
}

}  // namespace

AxisStencils axis_stencils(int n, double h, int order) {
  const int central = order + 1;
  if (n < central + 1) fail(ErrorKind::range, "too few nodes for the stencil order");
  AxisStencils out;
  for (int i = 0; i < n; ++i) {
    const bool inside = i - central / 2 >= 0 && i + central / 2 < n;
    out.first.push_back(window_stencil(i, n, h, central, 1));
    out.second.push_back(window_stencil(i, n, h, inside ? central : central + 1, 2));
  }
  return out;
}

PolarStencils polar_stencils(double h, int order) {
  const int half = order / 2;
  std::vector<double> x;
  for (int q = -half; q <= half; ++q) x.push_back(q * h);
  const auto w = fornberg(0.0, x, 2);
  PolarStencils out;
  for (int q = -half; q <= half; ++q) {
    out.first.emplace_back(q, w[1][q + half]);
    out.second.emplace_back(q, w[2][q + half]);
  }
  return out;
}

GridDerivatives grid_derivatives(const YamabeProblem& p, std::span<const double> f, int parity,
                                 int order) {
  const int ns = static_cast<int>(p.ns()), nt = static_cast<int>(p.nt());
  const double hs = p.s[1] - p.s[0];
  const auto ax = axis_stencils(ns, hs, order);
  GridDerivatives g;
  const std::size_t total = p.nodes.size();
  g.s.assign(total, 0.0);
  g.ss.assign(total, 0.0);
  g.x.assign(total, 0.0);
  g.xx.assign(total, 0.0);
  g.sx.assign(total, 0.0);
  auto value = [&](int i, int j) {
    const int r = reflect(j, nt);
    const double sign = (r != j) ? parity : 1.0;
    return sign * f[p.index(i, r)];
  };
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nt; ++j) {
      const auto k = p.index(i, j);
      for (const auto& [q, w] : ax.first[i]) g.s[k] += w * f[p.index(q, j)];
      for (const auto& [q, w] : ax.second[i]) g.ss[k] += w * f[p.index(q, j)];
    }
  }
  if (p.theta.empty()) return g;
  const double ht = p.theta[1] - p.theta[0];
  const auto pol = polar_stencils(ht, order);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nt; ++j) {
      const auto k = p.index(i, j);
      for (const auto& [q, w] : pol.first) g.x[k] += w * value(i, j + q);
      for (const auto& [q, w] : pol.second) g.xx[k] += w * value(i, j + q);
      for (const auto& [q, w] : pol.first) {
        double ds = 0.0;
        for (const auto& [r, ws] : ax.first[i]) ds += ws * value(r, j + q);
        g.sx[k] += w * ds;
      }
    }
  }
  return g;
}

YamabeProblem make_problem(int d, const YamabeGridSpec& spec,
                           const std::function<YamabeNode(double, double)>& node) {
  YamabeProblem p;
  p.d = d;
  const double s0 = std::log(spec.t_min), s1 = std::log(spec.t_max);
  p.s = linspace(s0, s1, spec.ns);
  for (int j = 0; j < spec.ntheta; ++j) {
    p.theta.push_back((j + 0.5) * std::numbers::pi / spec.ntheta);
  }
  p.nodes.resize(p.ns() * p.nt());
  parallel_for(p.ns(), [&](std::size_t i) {
    const double t = std::exp(p.s[i]);
    for (std::size_t j = 0; j < p.nt(); ++j) {
      p.nodes[p.index(i, j)] = node(t, p.theta.empty() ? std::numbers::pi / 2 : p.theta[j]);
    }
  });
  return p;
}

}  // namespace detail

namespace {

constexpr int kOrder = 4;
constexpr int kPolarOrder = 8;

double conformal_weight(int d) { return 4.0 * (d - 1.0) / (d - 2.0); }
double critical_power(int d) { return (d + 2.0) / (d - 2.0); }

YamabeNode rotational_node(const RotationalCompact& e, double t) {
  const int d = e.dim();
  const RadialJet ex = e.tt_excess(t), fx = e.sphere_excess(t);
  const double E = 1.0 + ex.v, F = 1.0 + fx.v;
  const double sh = std::sinh(t);
  YamabeNode node;
  node.scalar_excess = compact_scalar(e, t, {}).excess;
  const double kappa =
      t * ((2.0 - d) / std::tanh(t) + 0.5 * (d - 1.0) * fx.d1 / F - 0.5 * ex.d1 / E) - 1.0;
  node.lap.ss = sh * sh / (E * t * t);
  node.lap.s = node.lap.ss * kappa;
  return node;
}

// Sparse -Lap with the boundary rows (Robin at t_min, Neumann at t_max).
Eigen::SparseMatrix<double> operator_matrix(const YamabeProblem& p, bool boundary_rows) {
  const int ns = static_cast<int>(p.ns()), nt = static_cast<int>(p.nt());
  const double hs = p.s[1] - p.s[0];
  const auto ax = detail::axis_stencils(ns, hs, kOrder);
  detail::PolarStencils pol;
  if (!p.theta.empty()) pol = detail::polar_stencils(p.theta[1] - p.theta[0], kPolarOrder);
  std::vector<Eigen::Triplet<double>> trip;
  auto add = [&](int row, int i, int j, double w) {
    const int r = detail::reflect(j, nt);
    trip.emplace_back(row, static_cast<int>(p.index(i, r)), w);
  };
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nt; ++j) {
      const int row = static_cast<int>(p.index(i, j));
      if (boundary_rows && i == 0) {
        for (const auto& [q, w] : ax.first[0]) add(row, q, j, w);
        add(row, 0, j, -static_cast<double>(p.d));
        continue;
      }
      if (boundary_rows && i == ns - 1) {
        for (const auto& [q, w] : ax.first[ns - 1]) add(row, q, j, w);
        continue;
      }
      const auto& L = p.nodes[row].lap;
      for (const auto& [q, w] : ax.second[i]) add(row, q, j, -L.ss * w);
      for (const auto& [q, w] : ax.first[i]) add(row, q, j, -L.s * w);
      if (p.theta.empty()) continue;
      for (const auto& [q, w] : pol.second) add(row, i, j + q, -L.xx * w);
      for (const auto& [q, w] : pol.first) add(row, i, j + q, -L.x * w);
      for (const auto& [q, w] : pol.first) {
        for (const auto& [r, ws] : ax.first[i]) add(row, r, j + q, -L.sx * w * ws);
      }
    }
  }
  const auto n = static_cast<int>(p.nodes.size());
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

bool is_boundary_row(const YamabeProblem& p, std::size_t k) {
  const std::size_t i = k / p.nt();
  return i == 0 || i + 1 == p.ns();
}

Eigen::VectorXd newton_residual(const YamabeProblem& p, const Eigen::SparseMatrix<double>& a,
                                const Eigen::VectorXd& v) {
  const double p_crit = critical_power(p.d);
  const double lam = p.d * (p.d - 2.0) / 4.0;
  Eigen::VectorXd r = a * v;
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    if (is_boundary_row(p, k)) continue;
    r(k) += p.surplus(k) * (1.0 + v(k)) + lam * (std::expm1(p_crit * std::log1p(v(k))) - v(k));
  }
  return r;
}

class Solver {
 public:
  explicit Solver(const Eigen::SparseMatrix<double>& a) {
    lu_.analyzePattern(a);
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) fail(ErrorKind::solver, "sparse factorization failed");
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) { return lu_.solve(b); }

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

std::vector<double> column_of(const YamabeProblem& p, std::span<const double> f, std::size_t j) {
  std::vector<double> out(p.ns());
  for (std::size_t i = 0; i < p.ns(); ++i) out[i] = f[p.index(i, j)];
  return out;
}

}  // namespace

double YamabeProblem::t(std::size_t i) const { return std::exp(s[i]); }

double YamabeProblem::surplus(std::size_t k) const {
  return nodes[k].scalar_excess / conformal_weight(d);
}

YamabeGridSpec validated(YamabeGridSpec spec, int d) {
  if (d < 3 || d > 7) fail(ErrorKind::unsupported, "d must lie in [3, 7]");
  if (!(spec.t_min > 0.0) || !(spec.t_max > spec.t_min)) {
    fail(ErrorKind::range, "Yamabe grid needs 0 < t_min < t_max");
  }
  if (spec.ns < 16) fail(ErrorKind::range, "Yamabe grid needs at least 16 s nodes");
  if (spec.ntheta != 0 && spec.ntheta < 6) {
    fail(ErrorKind::range, "Yamabe grid needs at least 6 theta nodes");
  }
  return spec;
}

YamabeNode yamabe_node(const MetricJets<3>& compact, const std::array<double, 6>& excess, double t,
                       double theta) {
  const auto geo = detail::chart_geometry(compact, excess, t, theta);
  const double sh = std::sinh(t), ch = std::cosh(t);
  const double sh2 = sh * sh;
  const double gtt = sh2 * geo.inverse[0][0];
  const double gtx = sh2 * geo.inverse[0][1];
  const double gxx = sh2 * geo.inverse[1][1];
  const double ct = sh2 * geo.contracted[0] + sh * geo.inverse[0][0] * ch;
  const double cx = sh2 * geo.contracted[1] + sh * geo.inverse[1][0] * ch;
  YamabeNode node;
  node.scalar_excess = geo.scalar.excess;
  node.lap.ss = gtt / (t * t);
  node.lap.s = -gtt / (t * t) - ct / t;
  node.lap.sx = 2.0 * gtx / t;
  node.lap.xx = gxx;
  node.lap.x = -cx;
  return node;
}

YamabeProblem yamabe_problem(const CompactMetric& e, YamabeGridSpec spec) {
  const int d = e.dim();
  if (const auto* r = dynamic_cast<const RotationalCompact*>(&e)) {
    spec.ntheta = 0;
    spec = validated(spec, d);
    return detail::make_problem(d, spec, [r](double t, double) { return rotational_node(*r, t); });
  }
  const auto* c = dynamic_cast<const ChartCompact*>(&e);
  if (c == nullptr || !c->axisymmetric()) {
    fail(ErrorKind::unsupported, "Yamabe solver needs rotational or axisymmetric chart data");
  }
  if (spec.ntheta == 0) spec.ntheta = 16;
  spec = validated(spec, d);
  return detail::make_problem(d, spec, [c](double t, double theta) {
    const SpherePoint x{theta, 0.0};
    return yamabe_node(c->compact_jets(t, x), c->excess(t, x), t, theta);
  });
}

void prescribe_surplus(YamabeProblem& p, const std::function<double(double, double)>& s_hat) {
  for (std::size_t i = 0; i < p.ns(); ++i) {
    for (std::size_t j = 0; j < p.nt(); ++j) {
      const double th = p.theta.empty() ? std::numbers::pi / 2 : p.theta[j];
      p.nodes[p.index(i, j)].scalar_excess = conformal_weight(p.d) * s_hat(p.t(i), th);
    }
  }
}

PowerFit boundary_coefficient(const YamabeProblem& p, std::span<const double> field, std::size_t j,
                              double t_lo, double t_hi) {
  std::vector<double> t, v;
  for (std::size_t i = 0; i < p.ns(); ++i) {
    const double ti = p.t(i);
    if (ti >= t_lo * (1.0 - 1e-12) && ti <= t_hi * (1.0 + 1e-12)) {
      t.push_back(ti);
      v.push_back(field[p.index(i, j)]);
    }
  }
  if (t.size() < 4) fail(ErrorKind::range, "boundary fit window holds fewer than 4 nodes");
  const double powers[2] = {static_cast<double>(p.d), p.d + 1.0};
  return fit_powers(t, v, powers);
}

std::vector<double> boundary_coefficients(const YamabeProblem& p, std::span<const double> field,
                                          double t_lo, double t_hi) {
  std::vector<double> out;
  for (std::size_t j = 0; j < p.nt(); ++j) {
    out.push_back(boundary_coefficient(p, field, j, t_lo, t_hi).coef[0]);
  }
  return out;
}

YamabeSolution yamabe_solve(const YamabeProblem& p, YamabeOptions opts) {
  if (p.ns() < 16 || p.nodes.size() != p.ns() * p.nt()) {
    fail(ErrorKind::contract, "malformed Yamabe problem");
  }
  const auto n = static_cast<Eigen::Index>(p.nodes.size());
  const Eigen::SparseMatrix<double> a = operator_matrix(p, true);
  const double p_crit = critical_power(p.d);
  const double lam = p.d * (p.d - 2.0) / 4.0;

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = newton_residual(p, a, v);
  double norm = r.cwiseAbs().maxCoeff();
  int it = 0;
  for (; it < opts.max_iterations && norm > opts.tol; ++it) {
    Eigen::SparseMatrix<double> jac = a;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (is_boundary_row(p, static_cast<std::size_t>(k))) continue;
      const double u = 1.0 + v(k);
      jac.coeffRef(k, k) += p.surplus(k) + lam * (p_crit * std::pow(u, p_crit - 1.0) - 1.0);
    }
    jac.makeCompressed();
    Solver lu(jac);
    const Eigen::VectorXd step = lu.solve(-r);
    double damp = 1.0;
    bool accepted = false;
    for (int back = 0; back < 30; ++back, damp *= 0.5) {
      const Eigen::VectorXd trial = v + damp * step;
      if ((1.0 + trial.array()).minCoeff() <= 0.0) continue;
      const Eigen::VectorXd rt = newton_residual(p, a, trial);
      const double nt = rt.cwiseAbs().maxCoeff();
      if (nt < norm || damp < 1e-6) {
        v = trial;
        r = rt;
        accepted = nt < norm;
        norm = nt;
        break;
      }
    }
    if (!accepted || step.cwiseAbs().maxCoeff() < 1e-15) {
      ++it;
      break;
    }
  }
  if (!(norm <= std::max(opts.tol, 1e-9)) || !std::isfinite(norm)) {
    throw SolverError("Yamabe Newton iteration did not converge", norm);
  }

  YamabeSolution sol;
  sol.iterations = it;
  sol.v.assign(v.data(), v.data() + n);
  sol.u.resize(sol.v.size());
  for (std::size_t k = 0; k < sol.v.size(); ++k) sol.u[k] = 1.0 + sol.v[k];
  sol.u_min = *std::min_element(sol.u.begin(), sol.u.end());
  sol.u_max = *std::max_element(sol.u.begin(), sol.u.end());
  sol.residual = newton_residual(p, a, v).cwiseAbs().maxCoeff();

  const double lo = opts.fit_start > 0.0 ? opts.fit_start : p.t(0);
  for (std::size_t j = 0; j < p.nt(); ++j) {
    const auto fit = boundary_coefficient(p, sol.v, j, lo, 4.0 * lo);
    sol.v_d.push_back(fit.coef[0]);
    sol.fit_residual = std::max(sol.fit_residual, fit.residual / std::max(fit.scale, 1e-300));
    sol.v_d_half.push_back(boundary_coefficient(p, sol.v, j, lo, 2.0 * lo).coef[0]);
  }
  return sol;
}

std::vector<double> yamabe_residual(const YamabeProblem& p, std::span<const double> u) {
  if (u.size() != p.nodes.size()) fail(ErrorKind::contract, "field size mismatch");
  const auto a = operator_matrix(p, true);
  Eigen::VectorXd v(static_cast<Eigen::Index>(u.size()));
  for (std::size_t k = 0; k < u.size(); ++k) v(k) = u[k] - 1.0;
  const Eigen::VectorXd r = newton_residual(p, a, v);
  std::vector<double> out(u.size());
  const double c = conformal_weight(p.d);
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = is_boundary_row(p, k) ? r(k) : c * r(k);
  return out;
}

std::vector<double> apply_l(const YamabeProblem& p, std::span<const double> w) {
  if (w.size() != p.nodes.size()) fail(ErrorKind::contract, "field size mismatch");
  const auto a = operator_matrix(p, false);
  const Eigen::Map<const Eigen::VectorXd> x(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd y = a * x + p.d * x;
  return {y.data(), y.data() + y.size()};
}

std::vector<double> solve_linearized(const YamabeProblem& p, std::span<const double> rhs) {
  if (rhs.size() != p.nodes.size()) fail(ErrorKind::contract, "field size mismatch");
  Eigen::SparseMatrix<double> a = operator_matrix(p, true);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rhs.size()));
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    if (is_boundary_row(p, k)) {
      b(k) = 0.0;
    } else {
      a.coeffRef(k, k) += p.d;
      b(k) = rhs[k];
    }
  }
  a.makeCompressed();
  Solver lu(a);
  const Eigen::VectorXd x = lu.solve(b);
  return {x.data(), x.data() + x.size()};
}

std::vector<double> conformal_scalar_excess(const YamabeProblem& p, std::span<const double> u) {
  if (u.size() != p.nodes.size()) fail(ErrorKind::contract, "field size mismatch");
  const auto g = detail::grid_derivatives(p, u, 1, 6);
  const int d = p.d;
  const double c = conformal_weight(d), pc = critical_power(d);
  std::vector<double> out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto& L = p.nodes[k].lap;
    const double lap = L.ss * g.ss[k] + L.s * g.s[k] + L.sx * g.sx[k] + L.xx * g.xx[k] + L.x * g.x[k];
    const double sx = p.nodes[k].scalar_excess;
    out[k] = std::pow(u[k], -pc) *
             (-c * lap + sx * u[k] + d * (d - 1.0) * (std::pow(u[k], pc) - u[k]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conformal rescaling of tabulated solutions

namespace {

class TabulatedField {
 public:
  TabulatedField(const YamabeProblem& p, std::span<const double> v) : p_(&p), d_(p.d) {
    const double h = p.s[1] - p.s[0];
    for (std::size_t j = 0; j < p.nt(); ++j) {
      const auto col = column_of(p, v, j);
      splines_.emplace_back(col.begin(), col.end(), p.s.front(), h);
      const auto fit = boundary_coefficient(p, v, j, p.t(0), 4.0 * p.t(0));
      tail_.push_back(fit.coef);
    }
    theta_ = p.theta;
  }

  double at(double t, double theta) const {
    if (theta_.empty()) return column(0, t);
    const int nt = static_cast<int>(theta_.size());
    const double h = theta_[1] - theta_[0];
    const double pos = theta / h - 0.5;
    const int j0 = static_cast<int>(std::floor(pos)) - 1;
    std::vector<double> x, y;
    for (int q = 0; q < 4; ++q) {
      x.push_back((j0 + q + 0.5) * h);
      y.push_back(column(static_cast<std::size_t>(detail::reflect(j0 + q, nt)), t));
    }
    const auto w = detail::fornberg(theta, x, 0);
    double out = 0.0;
    for (int q = 0; q < 4; ++q) out += w[0][q] * y[q];
    return out;
  }

 private:
  double column(std::size_t j, double t) const {
    const double s = std::log(t);
    if (s <= p_->s.front()) return tail_[j][0] * std::pow(t, d_) + tail_[j][1] * std::pow(t, d_ + 1);
    if (s >= p_->s.back()) return splines_[j](p_->s.back());
    return splines_[j](s);
  }

  const YamabeProblem* p_;
  int d_;
  std::vector<boost::math::interpolators::cardinal_cubic_b_spline<double>> splines_;
  std::vector<std::vector<double>> tail_;
  std::vector<double> theta_;
};

class ConformalCompact final : public CompactMetric {
 public:
  ConformalCompact(CompactMetricPtr base, const YamabeProblem& p, const YamabeSolution& sol)
      : base_(std::move(base)), problem_(p), field_(problem_, sol.v) {}

  int dim() const override { return base_->dim(); }
  bool rotational() const override { return base_->rotational(); }
  bool axisymmetric() const override { return base_->axisymmetric(); }

  ColumnSample column(double t, SpherePoint x) const override {
    auto c = base_->column(t, x);
    const double v = field_.at(t, x.theta);
    // U - 1 with U = (1 + v)^(4 / (d - 2))
    const double um1 = std::expm1(4.0 / (dim() - 2.0) * std::log1p(v));
    const double u = 1.0 + um1;
    c.inv_tt_defect = (um1 + c.inv_tt_defect) / u;
    c.inv_tt /= u;
    const int n = dim() - 1;
    for (auto& q : c.tangential) q *= u;
    for (int i = 0; i < n; ++i) c.tangential[i * n - i * (i - 1) / 2] += um1;
    return c;
  }

 private:
  CompactMetricPtr base_;
  YamabeProblem problem_;
  TabulatedField field_;
};

}  // namespace

CompactMetricPtr conformal_compact(CompactMetricPtr base, const YamabeProblem& p,
                                   const YamabeSolution& sol) {
  if (sol.v.size() != p.nodes.size()) fail(ErrorKind::contract, "solution does not match the grid");
  return std::make_shared<ConformalCompact>(std::move(base), p, sol);
}

ReduceResult reduce_to_constant_scalar(CompactMetricPtr g, YamabeGridSpec grid, ReduceOptions opts) {
  const int d = g->dim();
  const auto p = yamabe_problem(*g, grid);
  ReduceResult out;
  out.yamabe = yamabe_solve(p, opts.yamabe);
  const auto sphere = SphereQuadrature::polar(d - 1, std::max<int>(8, static_cast<int>(p.theta.size())));
  const auto hat = conformal_compact(g, p, out.yamabe);
  out.before = boundary_mass(*g, sphere, opts.boundary);
  out.after = boundary_mass(*hat, sphere, opts.boundary);
  out.mass_shift = out.after.mass - out.before.mass;

  const double c = conformal_weight(d) * (1.0 + 1.0 / d);
  double scale = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < sphere.size(); ++k) {
    const double th = sphere.nodes()[k].theta;
    out.theta.push_back(th);
    double vd = out.yamabe.v_d[0];
    if (!p.theta.empty()) {
      // cubic interpolation of the per-node coefficients in theta
      const int nt = static_cast<int>(p.theta.size());
      const double h = p.theta[1] - p.theta[0];
      const int j0 = static_cast<int>(std::floor(th / h - 0.5)) - 1;
      std::vector<double> x, y;
      for (int q = 0; q < 4; ++q) {
        x.push_back((j0 + q + 0.5) * h);
        y.push_back(out.yamabe.v_d[detail::reflect(j0 + q, nt)]);
      }
      const auto w = detail::fornberg(th, x, 0);
      vd = 0.0;
      for (int q = 0; q < 4; ++q) vd += w[0][q] * y[q];
    }
    out.mu_shift.push_back(out.after.mu[k] - out.before.mu[k]);
    out.predicted_shift.push_back(c * vd);
    scale = std::max(scale, std::abs(c * vd));
    worst = std::max(worst, std::abs(out.mu_shift.back() - out.predicted_shift.back()));
  }
  out.shift_error = worst / std::max(scale, 1e-300);

  const auto sx = conformal_scalar_excess(p, out.yamabe.u);
  const std::size_t margin = p.ns() / 20;
  for (std::size_t i = margin; i + margin < p.ns(); ++i) {
    for (std::size_t j = 0; j < p.nt(); ++j) {
      out.scalar_error = std::max(out.scalar_error, std::abs(sx[p.index(i, j)]));
    }
  }
  return out;
}

}  // namespace hypermass
