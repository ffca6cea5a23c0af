#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

namespace hypermass {

inline constexpr int kMaxTorusDim = 6;

enum class TorusStencil { fourth_order, spectral };

// Uniform periodic grid on the flat torus prod_a [0, side_a), last axis fastest.
class TorusGrid {
 public:
  TorusGrid(std::vector<int> dims, std::vector<double> sides,
            TorusStencil stencil = TorusStencil::fourth_order);

  int dim() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return size_; }
  std::span<const int> dims() const { return dims_; }
  std::span<const double> sides() const { return sides_; }
  TorusStencil stencil() const { return stencil_; }
  double spacing(int axis) const { return sides_[axis] / dims_[axis]; }
  double cell_volume() const;
  double volume() const;
  std::array<double, kMaxTorusDim> point(std::size_t i) const;

  std::vector<double> derivative(std::span<const double> f, int axis) const;
  std::vector<double> second(std::span<const double> f, int a, int b) const;
  std::vector<double> laplacian(std::span<const double> f) const;
  double integrate(std::span<const double> f) const;

  // Periodic 1-D kernels as (offset, coefficient) pairs.
  const std::vector<std::pair<int, double>>& first_kernel(int axis) const { return k1_[axis]; }
  const std::vector<std::pair<int, double>>& second_kernel(int axis) const { return k2_[axis]; }
  std::size_t shift(std::size_t i, int axis, int offset) const;

 private:
  std::vector<double> apply(std::span<const double> f, int axis,
                            const std::vector<std::pair<int, double>>& kernel) const;

  std::vector<int> dims_;
  std::vector<double> sides_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  TorusStencil stencil_;
  std::vector<std::vector<std::pair<int, double>>> k1_, k2_;
};

// Compact perturbation phi(t, x) = t + amplitude B((t - center) / width) (1 + cos(2 pi x_0 / L_0) / 2)
// of the cusp warping, with B(s) = exp(-1 / (1 - s^2)).
struct CuspBump {
  double amplitude = 0.0;
  double center = 0.5;
  double width = 0.5;
};

struct WarpJet {
  double value = 0.0;
  double t = 1.0;
  double tt = 0.0;
  std::array<double, kMaxTorusDim> x{};
  double x_laplacian = 0.0;
};

// dt^2 + e^(2 phi(t, x)) h_flat on [t_min, t_max] x T^n, phi = t unless bumped.
struct CuspModel {
  int n = 2;
  std::vector<double> sides;
  double t_min = -4.0;
  double t_max = 4.0;
  CuspBump bump{};

  void validate() const;
  double flat_area() const;
  WarpJet warp(double t, std::span<const double> x) const;
};

// Graph t = t0 + u(x) over the torus grid.
struct GraphSurface {
  TorusGrid grid;
  std::vector<double> u;
  double t0 = 0.0;
};

struct ActionBreakdown {
  double area = 0.0;
  double volume = 0.0;  // relative to t0 plus the cusp volume e^(n t0) |T| / n below it
  double action = 0.0;  // area - n volume
};

ActionBreakdown brane_action(const GraphSurface& surface, const CuspModel& model);

// Mean curvature of the graph with respect to the normal on the increasing-t side.
std::vector<double> mean_curvature_graph(const GraphSurface& surface, const CuspModel& model);

// Integral of (H - n) against the normal speed of the variation u -> u + s v.
double first_variation(const GraphSurface& surface, const CuspModel& model,
                       std::span<const double> direction);

// Slice data on a torus grid with conformally flat slice metric e^(2 sigma) h_flat.
struct TorusSlice {
  TorusGrid grid;
  std::vector<double> sigma;
  std::vector<double> sigma_grad;  // [i * n + a]
  std::vector<double> slice_scalar;
  std::vector<double> ambient_scalar;
  std::vector<double> mean;
  std::vector<double> second_form_sq;
  std::vector<double> trace_free_sq;

  int n() const { return grid.dim(); }
  std::vector<double> laplacian(std::span<const double> f) const;
  std::vector<double> gradient_sq(std::span<const double> f) const;
};

// The slice t = const of the cusp model.
TorusSlice cusp_slice(const CuspModel& model, const TorusGrid& grid, double t);

enum class StabilityForm {
  general,     // -Lap + (S_slice - S - |A|^2 - H^2) / 2
  stationary,  // -Lap + (S_slice - S_n - |A_0|^2) / 2, valid on H = n
};

std::vector<double> stability_potential(const TorusSlice& slice, StabilityForm form);
std::vector<double> stability_operator_apply(std::span<const double> phi, const TorusSlice& slice,
                                             StabilityForm form);
Eigen::SparseMatrix<double> stability_matrix(const TorusSlice& slice, StabilityForm form);

struct StabilityData {
  std::vector<double> potential;
  double lambda1 = 0.0;
  std::vector<double> eigfn;  // positive, unit max
  double witness_min = 0.0;   // min of L(eigfn)
  bool eigfn_positive = false;
  int iterations = 0;
  double residual = 0.0;
};

struct EigenOptions {
  int max_iterations = 500;
  double tol = 1e-12;  // residual relative to max(1 + |lambda|, ||L||_1)
};

// Principal eigenvalue by shifted inverse iteration.
StabilityData principal_eigenvalue(const TorusSlice& slice, StabilityForm form,
                                   EigenOptions opts = {});

struct RescaledScalar {
  std::vector<double> direct;         // from -2 Lap phi + S_slice phi + ...
  std::vector<double> via_operator;   // from 2 L(phi) / phi + S_n + |A_0|^2 + ...
};

// Scalar curvature of phi^(2/(n-2)) h in both displayed forms. n >= 3.
RescaledScalar conformal_rescale_slice(std::span<const double> phi, const TorusSlice& slice);

struct FoliationLeaf {
  double tau = 0.0;
  std::vector<double> u;
  double k = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct NewtonOptions {
  int max_iterations = 30;
  double tol = 1e-10;
  double fd_step = 1e-6;
};

// Solves H(u) = k, integral of u over the t0 slice = tau for each tau by damped Newton
// started from the slice u = 0.
std::vector<FoliationLeaf> cmc_foliation(const CuspModel& model, const TorusGrid& grid, double t0,
                                         std::span<const double> taus, NewtonOptions opts = {});

}  // namespace hypermass
