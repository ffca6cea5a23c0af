#include "hypermass/brane_action.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss.hpp>

#include "hypermass/errors.hpp"

namespace hypermass {

namespace {

using Kernel = std::vector<std::pair<int, double>>;

Kernel fourth_order_first(double h) {
  return {{1, 8.0 / (12.0 * h)}, {-1, -8.0 / (12.0 * h)}, {2, -1.0 / (12.0 * h)}, {-2, 1.0 / (12.0 * h)}};
}

Kernel fourth_order_second(double h) {
  const double s = 1.0 / (12.0 * h * h);
  return {{0, -30.0 * s}, {1, 16.0 * s}, {-1, 16.0 * s}, {2, -s}, {-2, -s}};
}

Kernel spectral_first(int N, double L) {
  Kernel k;
  const double pi = std::numbers::pi;
  for (int m = 1; m < N; ++m) {
    const double sign = m % 2 == 0 ? 1.0 : -1.0;
    k.emplace_back(m, -(pi / L) * sign / std::tan(m * pi / N));
  }
  return k;
}

Kernel spectral_second(int N, double L) {
  Kernel k;
  const double pi = std::numbers::pi;
  const double scale = (2.0 * pi / L) * (2.0 * pi / L);
  const double h = 2.0 * pi / N;
  k.emplace_back(0, scale * (-pi * pi / (3.0 * h * h) - 1.0 / 6.0));
  for (int m = 1; m < N; ++m) {
    const double sign = m % 2 == 0 ? 1.0 : -1.0;
    const double s = std::sin(m * pi / N);
    k.emplace_back(m, scale * (-sign / (2.0 * s * s)));
  }
  return k;
}

double bump_profile(double s, double* d1, double* d2) {
  if (std::abs(s) >= 1.0) {
    *d1 = *d2 = 0.0;
    return 0.0;
  }
  const double q = 1.0 - s * s;
  const double b = std::exp(-1.0 / q);
  const double g1 = -2.0 * s / (q * q);
  const double g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
  *d1 = b * g1;
  *d2 = b * (g1 * g1 + g2);
  return b;
}

void check_height(const CuspModel& model, double t) {
  if (t < model.t_min || t > model.t_max) {
    fail(ErrorKind::range, "graph leaves the cusp interval at t = " + std::to_string(t));
  }
}

void check_surface(const GraphSurface& s, const CuspModel& model) {
  model.validate();
  if (s.grid.dim() != model.n) fail(ErrorKind::contract, "torus grid dimension differs from model");
  for (int a = 0; a < model.n; ++a) {
    if (std::abs(s.grid.sides()[a] - model.sides[a]) > 1e-12 * model.sides[a]) {
      fail(ErrorKind::contract, "torus grid sides differ from model");
    }
  }
  if (s.u.size() != s.grid.size()) fail(ErrorKind::contract, "graph samples do not match grid");
}

struct GraphDerivatives {
  std::vector<std::vector<double>> d1;
  std::vector<std::vector<double>> d2;  // [a * n + b]
};

GraphDerivatives graph_derivatives(const TorusGrid& grid, std::span<const double> u) {
  const int n = grid.dim();
  GraphDerivatives g;
  g.d1.resize(n);
  g.d2.resize(n * n);
  for (int a = 0; a < n; ++a) g.d1[a] = grid.derivative(u, a);
  for (int a = 0; a < n; ++a) {
    g.d2[a * n + a] = grid.second(u, a, a);
    for (int b = a + 1; b < n; ++b) {
      g.d2[a * n + b] = grid.derivative(g.d1[b], a);
      g.d2[b * n + a] = g.d2[a * n + b];
    }
  }
  return g;
}

}  // namespace

TorusGrid::TorusGrid(std::vector<int> dims, std::vector<double> sides, TorusStencil stencil)
    : dims_(std::move(dims)), sides_(std::move(sides)), stencil_(stencil) {
  if (dims_.empty() || dims_.size() > static_cast<std::size_t>(kMaxTorusDim) ||
      dims_.size() != sides_.size()) {
    fail(ErrorKind::contract, "torus grid needs 1..6 axes with matching side lengths");
  }
  const int n = dim();
  stride_.assign(n, 1);
  for (int a = n - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * dims_[a + 1];
  size_ = stride_[0] * dims_[0];
  for (int a = 0; a < n; ++a) {
    if (dims_[a] < 5) fail(ErrorKind::contract, "torus grid needs at least 5 nodes per axis");
    if (!(sides_[a] > 0.0)) fail(ErrorKind::contract, "torus side lengths must be positive");
    if (stencil_ == TorusStencil::spectral) {
      if (dims_[a] % 2 != 0) fail(ErrorKind::contract, "spectral stencil needs even node counts");
      k1_.push_back(spectral_first(dims_[a], sides_[a]));
      k2_.push_back(spectral_second(dims_[a], sides_[a]));
    } else {
      k1_.push_back(fourth_order_first(spacing(a)));
      k2_.push_back(fourth_order_second(spacing(a)));
    }
  }
}

double TorusGrid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= spacing(a);
  return v;
}

double TorusGrid::volume() const {
  return std::accumulate(sides_.begin(), sides_.end(), 1.0, std::multiplies<>());
}

std::array<double, kMaxTorusDim> TorusGrid::point(std::size_t i) const {
  std::array<double, kMaxTorusDim> x{};
  for (int a = 0; a < dim(); ++a) {
    x[a] = static_cast<double>((i / stride_[a]) % dims_[a]) * spacing(a);
  }
  return x;
}

std::size_t TorusGrid::shift(std::size_t i, int axis, int offset) const {
  const int N = dims_[axis];
  const int j = static_cast<int>((i / stride_[axis]) % N);
  const int jn = ((j + offset) % N + N) % N;
  return i + (static_cast<std::ptrdiff_t>(jn) - j) * static_cast<std::ptrdiff_t>(stride_[axis]);
}

std::vector<double> TorusGrid::apply(std::span<const double> f, int axis, const Kernel& kernel) const {
  std::vector<double> out(size_, 0.0);
  for (std::size_t i = 0; i < size_; ++i) {
    double s = 0.0;
    for (const auto& [off, c] : kernel) s += c * f[shift(i, axis, off)];
    out[i] = s;
  }
  return out;
}

std::vector<double> TorusGrid::derivative(std::span<const double> f, int axis) const {
  return apply(f, axis, k1_[axis]);
}

std::vector<double> TorusGrid::second(std::span<const double> f, int a, int b) const {
  if (a == b) return apply(f, a, k2_[a]);
  return derivative(derivative(f, b), a);
}

std::vector<double> TorusGrid::laplacian(std::span<const double> f) const {
  std::vector<double> out(size_, 0.0);
  for (int a = 0; a < dim(); ++a) {
    const auto d = apply(f, a, k2_[a]);
    for (std::size_t i = 0; i < size_; ++i) out[i] += d[i];
  }
  return out;
}

double TorusGrid::integrate(std::span<const double> f) const {
  return std::accumulate(f.begin(), f.end(), 0.0) * cell_volume();
}

void CuspModel::validate() const {
  if (n < 1 || n > kMaxTorusDim) fail(ErrorKind::unsupported, "cusp torus dimension must be 1..6");
  if (static_cast<int>(sides.size()) != n) fail(ErrorKind::contract, "cusp model needs n side lengths");
  for (double s : sides)
    if (!(s > 0.0)) fail(ErrorKind::contract, "cusp side lengths must be positive");
  if (!(t_min < t_max)) fail(ErrorKind::contract, "cusp interval is empty");
  if (bump.amplitude != 0.0 && !(bump.width > 0.0)) fail(ErrorKind::contract, "bump width must be positive");
}

double CuspModel::flat_area() const {
  return std::accumulate(sides.begin(), sides.end(), 1.0, std::multiplies<>());
}

WarpJet CuspModel::warp(double t, std::span<const double> x) const {
  WarpJet w;
  w.value = t;
  if (bump.amplitude == 0.0) return w;
  double b1, b2;
  const double b = bump_profile((t - bump.center) / bump.width, &b1, &b2);
  if (b == 0.0) return w;
  const double k = 2.0 * std::numbers::pi / sides[0];
  const double m = 1.0 + 0.5 * std::cos(k * x[0]);
  const double m1 = -0.5 * k * std::sin(k * x[0]);
  const double m2 = -0.5 * k * k * std::cos(k * x[0]);
  const double e = bump.amplitude;
  w.value += e * b * m;
  w.t += e * b1 / bump.width * m;
  w.tt = e * b2 / (bump.width * bump.width) * m;
  w.x[0] = e * b * m1;
  w.x_laplacian = e * b * m2;
  return w;
}

ActionBreakdown brane_action(const GraphSurface& s, const CuspModel& model) {
  check_surface(s, model);
  const int n = model.n;
  const auto& grid = s.grid;
  const auto du = graph_derivatives(grid, s.u).d1;
  double area = 0.0, volume = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = s.t0 + s.u[i];
    check_height(model, t);
    const auto x = grid.point(i);
    const WarpJet w = model.warp(t, x);
    double q = 0.0;
    for (int a = 0; a < n; ++a) q += du[a][i] * du[a][i];
    area += std::exp(n * w.value) * std::sqrt(1.0 + std::exp(-2.0 * w.value) * q);
    if (model.bump.amplitude == 0.0) {
      volume += (std::exp(n * t) - std::exp(n * s.t0)) / n;
    } else {
      volume += boost::math::quadrature::gauss<double, 20>::integrate(
          [&](double tt) { return std::exp(n * model.warp(tt, x).value); }, s.t0, t);
    }
  }
  ActionBreakdown out;
  out.area = area * grid.cell_volume();
  out.volume = volume * grid.cell_volume() + std::exp(n * s.t0) * model.flat_area() / n;
  out.action = out.area - n * out.volume;
  return out;
}

std::vector<double> mean_curvature_graph(const GraphSurface& s, const CuspModel& model) {
  check_surface(s, model);
  const int n = model.n;
  const auto& grid = s.grid;
  const auto d = graph_derivatives(grid, s.u);
  std::vector<double> H(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = s.t0 + s.u[i];
    check_height(model, t);
    const WarpJet w = model.warp(t, grid.point(i));
    const double E = std::exp(-2.0 * w.value);
    double q = 0.0, pu = 0.0, lap = 0.0, uuu = 0.0;
    for (int a = 0; a < n; ++a) {
      const double ua = d.d1[a][i];
      q += ua * ua;
      pu += w.x[a] * ua;
      lap += d.d2[a * n + a][i];
      for (int b = 0; b < n; ++b) uuu += ua * d.d1[b][i] * d.d2[a * n + b][i];
    }
    const double W = std::sqrt(1.0 + E * q);
    const double W3 = W * W * W;
    H[i] = n * w.t / W + w.t * E * q / W3 - (n - 2) * E * pu / W - E * lap / W +
           E * E * (uuu - pu * q) / W3;
  }
  return H;
}

double first_variation(const GraphSurface& s, const CuspModel& model,
                       std::span<const double> direction) {
  if (direction.size() != s.u.size()) fail(ErrorKind::contract, "variation size mismatch");
  const auto H = mean_curvature_graph(s, model);
  double sum = 0.0;
  for (std::size_t i = 0; i < H.size(); ++i) {
    const WarpJet w = model.warp(s.t0 + s.u[i], s.grid.point(i));
    sum += (H[i] - model.n) * direction[i] * std::exp(model.n * w.value);
  }
  return sum * s.grid.cell_volume();
}

std::vector<double> TorusSlice::laplacian(std::span<const double> f) const {
  const int nn = n();
  auto out = grid.laplacian(f);
  for (int a = 0; a < nn; ++a) {
    const auto d = grid.derivative(f, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (nn - 2) * sigma_grad[i * nn + a] * d[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(-2.0 * sigma[i]);
  return out;
}

std::vector<double> TorusSlice::gradient_sq(std::span<const double> f) const {
  std::vector<double> out(grid.size(), 0.0);
  for (int a = 0; a < n(); ++a) {
    const auto d = grid.derivative(f, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i] * d[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(-2.0 * sigma[i]);
  return out;
}

TorusSlice cusp_slice(const CuspModel& model, const TorusGrid& grid, double t) {
  model.validate();
  check_height(model, t);
  if (grid.dim() != model.n) fail(ErrorKind::contract, "torus grid dimension differs from model");
  const int n = model.n;
  const std::size_t N = grid.size();
  TorusSlice s{grid, {}, {}, {}, {}, {}, {}, {}};
  s.sigma.resize(N);
  s.sigma_grad.resize(N * n);
  s.slice_scalar.resize(N);
  s.ambient_scalar.resize(N);
  s.mean.resize(N);
  s.second_form_sq.resize(N);
  s.trace_free_sq.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const WarpJet w = model.warp(t, grid.point(i));
    s.sigma[i] = w.value;
    double g2 = 0.0;
    for (int a = 0; a < n; ++a) {
      s.sigma_grad[i * n + a] = w.x[a];
      g2 += w.x[a] * w.x[a];
    }
    s.slice_scalar[i] =
        -std::exp(-2.0 * w.value) * (2.0 * (n - 1) * w.x_laplacian + (n - 2.0) * (n - 1) * g2);
    s.mean[i] = n * w.t;
    s.second_form_sq[i] = n * w.t * w.t;
    s.ambient_scalar[i] = s.slice_scalar[i] - n * (n + 1.0) * w.t * w.t - 2.0 * n * w.tt;
  }
  return s;
}

std::vector<double> stability_potential(const TorusSlice& s, StabilityForm form) {
  const int n = s.n();
  std::vector<double> v(s.grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (form == StabilityForm::stationary) {
      if (std::abs(s.mean[i] - n) > 1e-10 * n) {
        fail(ErrorKind::contract, "stationary form of the stability operator requires H = n");
      }
      const double sn = s.ambient_scalar[i] + n * (n + 1.0);
      v[i] = 0.5 * (s.slice_scalar[i] - sn - s.trace_free_sq[i]);
    } else {
      v[i] = 0.5 * (s.slice_scalar[i] - s.ambient_scalar[i] - s.second_form_sq[i] -
                    s.mean[i] * s.mean[i]);
    }
  }
  return v;
}

std::vector<double> stability_operator_apply(std::span<const double> phi, const TorusSlice& s,
                                             StabilityForm form) {
  if (phi.size() != s.grid.size()) fail(ErrorKind::contract, "field size mismatch");
  const auto v = stability_potential(s, form);
  auto out = s.laplacian(phi);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i] + v[i] * phi[i];
  return out;
}

Eigen::SparseMatrix<double> stability_matrix(const TorusSlice& s, StabilityForm form) {
  const int n = s.n();
  const auto v = stability_potential(s, form);
  const std::size_t N = s.grid.size();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < N; ++i) {
    const double e = std::exp(-2.0 * s.sigma[i]);
    trip.emplace_back(i, i, v[i]);
    for (int a = 0; a < n; ++a) {
      for (const auto& [off, c] : s.grid.second_kernel(a)) trip.emplace_back(i, s.grid.shift(i, a, off), -e * c);
      const double g = (n - 2) * s.sigma_grad[i * n + a];
      if (g != 0.0) {
        for (const auto& [off, c] : s.grid.first_kernel(a)) trip.emplace_back(i, s.grid.shift(i, a, off), -e * g * c);
      }
    }
  }
  Eigen::SparseMatrix<double> L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

StabilityData principal_eigenvalue(const TorusSlice& s, StabilityForm form, EigenOptions opts) {
  StabilityData out;
  out.potential = stability_potential(s, form);
  const auto L = stability_matrix(s, form);
  const auto N = static_cast<Eigen::Index>(s.grid.size());
  const double shift = *std::min_element(out.potential.begin(), out.potential.end()) - 1.0;
  Eigen::SparseMatrix<double> I(N, N);
  I.setIdentity();
  Eigen::SparseMatrix<double> M = L - shift * I;
  M.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw SolverError("stability matrix factorization failed", INFINITY);

  // residuals below roundoff of L x cannot be resolved
  double norm = 0.0;
  for (Eigen::Index k = 0; k < L.outerSize(); ++k) {
    double col = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator e(L, k); e; ++e) col += std::abs(e.value());
    norm = std::max(norm, col);
  }
  auto converged = [&](double res, double rho) { return res <= opts.tol * std::max(1.0 + std::abs(rho), norm); };

  Eigen::VectorXd x = Eigen::VectorXd::Ones(N) / std::sqrt(static_cast<double>(N));
  double rho = 0.0, res = INFINITY;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    x = lu.solve(x);
    x /= x.norm();
    const Eigen::VectorXd Lx = L * x;
    rho = x.dot(Lx);
    res = (Lx - rho * x).lpNorm<Eigen::Infinity>() / x.lpNorm<Eigen::Infinity>();
    out.iterations = it;
    if (converged(res, rho)) break;
  }
  out.residual = res;
  if (!converged(res, rho)) {
    throw SolverError("inverse iteration did not converge", res);
  }
  if (x.sum() < 0.0) x = -x;
  x /= x.maxCoeff();
  out.lambda1 = rho;
  out.eigfn.assign(x.data(), x.data() + N);
  out.eigfn_positive = x.minCoeff() > 0.0;
  const Eigen::VectorXd Lx = L * x;
  out.witness_min = Lx.minCoeff();
  return out;
}

RescaledScalar conformal_rescale_slice(std::span<const double> phi, const TorusSlice& s) {
  const int n = s.n();
  if (n < 3) fail(ErrorKind::unsupported, "conformal rescale needs slice dimension n >= 3");
  if (phi.size() != s.grid.size()) fail(ErrorKind::contract, "field size mismatch");
  for (double p : phi)
    if (!(p > 0.0)) fail(ErrorKind::contract, "conformal factor must be positive");
  const auto lap = s.laplacian(phi);
  const auto grad2 = s.gradient_sq(phi);
  const auto Lphi = stability_operator_apply(phi, s, StabilityForm::stationary);
  const double c = (n - 1.0) / (n - 2.0);
  RescaledScalar out;
  out.direct.resize(phi.size());
  out.via_operator.resize(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double p = phi[i];
    out.direct[i] = std::pow(p, -n / (n - 2.0)) * (-2.0 * lap[i] + s.slice_scalar[i] * p + c * grad2[i] / p);
    const double sn = s.ambient_scalar[i] + n * (n + 1.0);
    out.via_operator[i] = std::pow(p, -2.0 / (n - 2.0)) *
                          (2.0 * Lphi[i] / p + sn + s.trace_free_sq[i] + c * grad2[i] / (p * p));
  }
  return out;
}

std::vector<FoliationLeaf> cmc_foliation(const CuspModel& model, const TorusGrid& grid, double t0,
                                         std::span<const double> taus, NewtonOptions opts) {
  model.validate();
  const std::size_t N = grid.size();
  const int n = model.n;
  std::vector<double> weight(N);
  for (std::size_t i = 0; i < N; ++i) {
    weight[i] = std::exp(n * model.warp(t0, grid.point(i)).value) * grid.cell_volume();
  }

  std::vector<FoliationLeaf> leaves;
  for (double tau : taus) {
    GraphSurface s{grid, std::vector<double>(N, 0.0), t0};
    double k = n;
    auto residual = [&](const GraphSurface& surf, double kk) {
      const auto H = mean_curvature_graph(surf, model);
      Eigen::VectorXd F(N + 1);
      double mass = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        F[i] = H[i] - kk;
        mass += weight[i] * surf.u[i];
      }
      F[N] = mass - tau;
      return F;
    };

    Eigen::VectorXd F = residual(s, k);
    double res = F.lpNorm<Eigen::Infinity>();
    int it = 0;
    while (res > opts.tol) {
      if (++it > opts.max_iterations) throw SolverError("CMC Newton did not converge", res);
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N + 1, N + 1);
      GraphSurface probe = s;
      for (std::size_t j = 0; j < N; ++j) {
        probe.u[j] = s.u[j] + opts.fd_step;
        const auto Hp = mean_curvature_graph(probe, model);
        probe.u[j] = s.u[j] - opts.fd_step;
        const auto Hm = mean_curvature_graph(probe, model);
        probe.u[j] = s.u[j];
        for (std::size_t i = 0; i < N; ++i) J(i, j) = (Hp[i] - Hm[i]) / (2.0 * opts.fd_step);
        J(N, j) = weight[j];
      }
      for (std::size_t i = 0; i < N; ++i) J(i, N) = -1.0;
      const Eigen::VectorXd step = J.partialPivLu().solve(-F);

      double damping = 1.0;
      bool accepted = false;
      for (int halving = 0; halving < 30 && !accepted; ++halving, damping *= 0.5) {
        GraphSurface trial = s;
        for (std::size_t i = 0; i < N; ++i) trial.u[i] += damping * step[i];
        const double ktrial = k + damping * step[N];
        try {
          const Eigen::VectorXd Ft = residual(trial, ktrial);
          const double rt = Ft.lpNorm<Eigen::Infinity>();
          if (rt < res || rt <= opts.tol) {
            s = std::move(trial);
            k = ktrial;
            F = Ft;
            res = rt;
            accepted = true;
          }
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::range) throw;
        }
      }
      if (!accepted) throw SolverError("CMC Newton step halving failed", res);
    }
    leaves.push_back({tau, std::move(s.u), k, it, res});
  }
  return leaves;
}

}  // namespace hypermass
