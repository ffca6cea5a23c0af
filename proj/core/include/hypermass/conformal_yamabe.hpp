#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hypermass/curvature.hpp"
#include "hypermass/fd_oracle.hpp"
#include "hypermass/fields.hpp"
#include "hypermass/grid.hpp"
#include "hypermass/jet.hpp"

namespace hypermass {

// Volume of the unit round S^n.
double sphere_volume(int n);

// Quadrature on the round S^n. latlon is the n = 2 product rule (Fejer in
// theta, uniform in phi); polar integrates functions of the polar angle only.
class SphereQuadrature {
 public:
  static SphereQuadrature latlon(int ntheta, int nphi);
  static SphereQuadrature polar(int n, int ntheta);

  int n() const { return n_; }
  std::size_t size() const { return nodes_.size(); }
  std::span<const SpherePoint> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  double integrate(std::span<const double> f) const;
  double volume() const;

 private:
  int n_ = 2;
  std::vector<SpherePoint> nodes_;
  std::vector<double> weights_;
};

// Fejer first-rule weights for the integral over [-1, 1] on x_j = cos((j + 1/2) pi / N).
std::vector<double> fejer_weights(int ntheta);

// Packed upper triangle of an n x n symmetric matrix, row-major.
inline int packed_size(int n) { return n * (n + 1) / 2; }
double packed_trace(std::span<const double> packed, int n);

// What the boundary analysis reads from a compactified metric e at one point
// without differentiating.
struct ColumnSample {
  double inv_tt = 1.0;         // e^{tt}
  double inv_tt_defect = 0.0;  // 1 - e^{tt}, formed without cancellation
  std::vector<double> tangential;  // h - h0 in an h0-orthonormal frame, packed
};

// Compactified metric e on [0, T) x S^n with physical metric g = sinh(t)^-2 e, d = n + 1.
class CompactMetric {
 public:
  virtual ~CompactMetric() = default;
  virtual int dim() const = 0;
  virtual bool rotational() const { return false; }
  virtual bool axisymmetric() const { return rotational(); }
  virtual ColumnSample column(double t, SpherePoint x) const = 0;
};
using CompactMetricPtr = std::shared_ptr<const CompactMetric>;

// E dt^2 + F h0 with E - 1 and F - 1 given as profiles in t; 3 <= d <= 7.
class RotationalCompact final : public CompactMetric {
 public:
  RotationalCompact(int d, ProfilePtr tt_excess, ProfilePtr sphere_excess);
  int dim() const override { return d_; }
  bool rotational() const override { return true; }
  ColumnSample column(double t, SpherePoint x) const override;
  RadialJet tt_excess(double t) const { return tt_->eval(t); }
  RadialJet sphere_excess(double t) const { return sphere_->eval(t); }

 private:
  int d_;
  ProfilePtr tt_;
  ProfilePtr sphere_;
};

// Symmetric 3x3 excess {tt, t theta, t phi, theta theta, theta phi, phi phi}.
using ExcessJets = std::array<Jet3, 6>;
using ExcessFn = std::function<ExcessJets(const Jet3& t, const Jet3& theta, const Jet3& phi)>;

// d = 3 metric in the chart (t, theta, phi): e = dt^2 + round + P, P closed form.
class ChartCompact final : public CompactMetric {
 public:
  ChartCompact(ExcessFn excess, bool axisymmetric);
  int dim() const override { return 3; }
  bool axisymmetric() const override { return axisymmetric_; }
  ColumnSample column(double t, SpherePoint x) const override;

  std::array<double, 6> excess(double t, SpherePoint x) const;
  MetricJets<3> compact_jets(double t, SpherePoint x) const;
  MetricJets<3> physical_jets(double t, SpherePoint x) const;

 private:
  ExcessJets eval(double t, SpherePoint x) const;
  ExcessFn fn_;
  bool axisymmetric_;
};

CompactMetricPtr hyperbolic_compact(int d);
// E = 1 + tt_coef t^d, F = 1 + sphere_coef t^d, optionally damped by exp(-(t / width)^2).
CompactMetricPtr power_compact(int d, double tt_coef, double sphere_coef, double width = 0.0);
// e = phi^(4/(d-2)) (dt^2 + h0), phi = 1 + amplitude tanh(t)^d: conformally hyperbolic with S >= -d(d-1).
CompactMetricPtr conformal_bump_compact(int d, double amplitude);

// d = 3 planted tensor P = t^3 chi(t) [q (dtheta^2 - sin^2 dphi^2) + tau h0] with
// q = tracefree sin^2(theta), tau = sum_l trace_modes[l] P_{2l}(cos theta) and
// chi = exp(-(t / width)^2) (chi = 1 when width = 0).
struct PlantedTensor {
  double tracefree = 0.0;
  std::vector<double> trace_modes;
  double width = 0.0;
  double tt = 0.0;  // adds tt t^3 chi to e_tt
  // adds t^4 chi sin^2(theta) sum_l subleading[l] P_{2l}(cos theta) to q; gamma is unchanged
  std::vector<double> subleading;
};
std::shared_ptr<const ChartCompact> planted_chart_compact(const PlantedTensor& p);
// gamma at t = 0 in the orthonormal frame, packed {theta theta, theta phi, phi phi}.
std::array<double, 3> planted_boundary_tensor(const PlantedTensor& p, double theta);

// Scalar curvature of g = rho^-2 e, rho = sinh t, split into the three terms of the
// conformal formula, each with its hyperbolic value removed.
struct CompactScalar {
  int d = 3;
  double excess = 0.0;     // S + d(d-1)
  double gradient = 0.0;   // -d(d-1) |d rho|^2 + d(d-1) sinh^2 t ... minus hyperbolic part
  double laplacian = 0.0;  // 2(d-1) rho Lap_e rho minus its hyperbolic part
  double intrinsic = 0.0;  // rho^2 S_e minus its hyperbolic part
  double scalar() const { return excess - d * (d - 1.0); }
};
CompactScalar compact_scalar(const CompactMetric& e, double t, SpherePoint x);

// rho^2 times the traceless Ricci tensor of g in chart components (d = 3 charts).
struct CompactRicci {
  CompactScalar scalar;
  std::array<std::array<double, 3>, 3> traceless{};
};
CompactRicci compact_ricci(const ChartCompact& e, double t, SpherePoint x);

// Physical metric samples: chart (t, theta, phi) for d = 3 charts, (t, chi_1..chi_n)
// hyperspherical coordinates for rotational metrics.
MetricSampler physical_sampler(CompactMetricPtr e);
double compact_scalar_fd_oracle(CompactMetricPtr e, double t, SpherePoint x, double rel_step = 1e-2);

// Least-squares fit of values against t^p for the given powers.
struct PowerFit {
  std::vector<double> coef;
  double residual = 0.0;  // max misfit
  double scale = 0.0;     // max |value|
};
PowerFit fit_powers(std::span<const double> t, std::span<const double> values,
                    std::span<const double> powers);
// Coefficients of t^order .. t^(order + terms - 1) of fn from samples on [t_lo, t_hi].
PowerFit series_coefficients(const std::function<double(double)>& fn, int order, int terms,
                             double t_lo, double t_hi, int samples = 24);

struct BoundarySamples {
  int d = 3;
  std::vector<double> t;
  SphereQuadrature sphere;
  std::vector<double> tangential;  // [(it * nodes + node) * packed + c]

  int packed() const { return packed_size(d - 1); }
  std::span<const double> at(std::size_t it, std::size_t node) const;
};

BoundarySamples sample_boundary(const CompactMetric& e, const SphereQuadrature& sphere,
                                std::span<const double> t);

struct MassOptions {
  int degree = 4;               // polynomial degree of the (h - h0) / t^d fit
  double residual_tol = 1e-6;   // misfit over max(|(h - h0) / t^d|, 1) above which the data is rejected
};

struct BoundaryData {
  int d = 3;
  std::vector<std::vector<double>> aspect;  // k per node, packed frame components
  std::vector<double> mu;                   // tr k per node
  double mass = 0.0;                        // normalizing constant 1
  double mu_min = 0.0;
  double mu_max = 0.0;
  double fit_residual = 0.0;
};

// Throws hypothesis when the fit residual shows the data is not asymptotically hyperbolic.
BoundaryData mass_and_aspect(const BoundarySamples& samples, MassOptions opts = {});

struct GaugeOptions {
  double rel_tol = 1e-13;
  double abs_tol = 1e-22;
  int dense_points = 1500;
};

struct GaugeSolution {
  int d = 3;
  std::vector<double> t_hat;
  SphereQuadrature sphere;
  std::vector<double> t_source;      // [it * nodes + node], preimage of t_hat
  std::vector<double> theta_defect;  // theta - 1 at t_source
  BoundarySamples normalized;        // h_hat - h0 at t_hat
  double eikonal_defect = 0.0;       // max | |d t_hat|_{theta^2 e} - 1 |
};

// Conformal gauge change e -> theta^2 e, rho -> theta rho making t_hat = asinh(theta rho)
// a distance function; integrated along t per sphere node.
GaugeSolution gauge_normalize(const CompactMetric& e, const SphereQuadrature& sphere,
                              std::span<const double> t_hat, GaugeOptions opts = {});
// theta - 1 along one node at the given t values.
std::vector<double> gauge_factor(const CompactMetric& e, SpherePoint x, std::span<const double> t,
                                 GaugeOptions opts = {});
// Gauss-form metric dt^2 + h_hat rebuilt from normalized samples (linear in t between samples).
CompactMetricPtr gauss_form(const GaugeSolution& g);

struct BoundaryOptions {
  double t_lo = 0.01;
  double t_hi = 0.08;
  int samples = 8;
  MassOptions mass{};
  GaugeOptions gauge{};
};

// Gauge normalization followed by mass_and_aspect.
BoundaryData boundary_mass(const CompactMetric& e, const SphereQuadrature& sphere,
                           BoundaryOptions opts = {});

// Mass aspect of e = (1 + b t^d) dt^2 + h0 + t^d k after the gauge change, to first order.
inline double gauge_corrected_aspect(int d, double trace_k, double tt_b) {
  return trace_k + (d - 1.0) / d * tt_b;
}

// L_t w = -sinh^2 w'' + (d - 2) sinh cosh w' + d w.
double apply_lt(int d, double t, RadialJet w);
// Barrier w = -t^d (1 + d t).
RadialJet barrier_profile(int d, double t);
// t^-a L_t t^a as t -> 0; vanishes at the indicial exponents -1 and d.
double indicial_polynomial(int d, double a);

// Laplacian in (s = log t, theta): ss u_ss + s u_s + sx u_s,theta + xx u_theta,theta + x u_theta.
struct LaplaceStencil {
  double ss = 0.0, s = 0.0, sx = 0.0, xx = 0.0, x = 0.0;
};

struct YamabeNode {
  double scalar_excess = 0.0;  // S + d(d-1)
  LaplaceStencil lap;
};

struct YamabeGridSpec {
  double t_min = 1e-3;
  double t_max = 5.0;
  int ns = 801;
  int ntheta = 0;  // 0 for rotational data
};

// Discretized problem on a uniform s grid times the polar nodes theta_j = (j + 1/2) pi / N.
struct YamabeProblem {
  int d = 3;
  std::vector<double> s;
  std::vector<double> theta;  // empty for rotational data
  std::vector<YamabeNode> nodes;  // [i * nt + j]

  std::size_t ns() const { return s.size(); }
  std::size_t nt() const { return theta.empty() ? 1 : theta.size(); }
  std::size_t index(std::size_t i, std::size_t j) const { return i * nt() + j; }
  double t(std::size_t i) const;
  double surplus(std::size_t k) const;  // (d-2) / (4(d-1)) (S + d(d-1))
};

YamabeGridSpec validated(YamabeGridSpec spec, int d);
// Rotational or axisymmetric chart metrics.
YamabeProblem yamabe_problem(const CompactMetric& e, YamabeGridSpec spec);
// Node data from compact jets and excess e - e0 at one point (d = 3 chart).
YamabeNode yamabe_node(const MetricJets<3>& compact, const std::array<double, 6>& excess, double t,
                       double theta);
// Replaces the scalar curvature by a prescribed surplus s_hat(t, theta).
void prescribe_surplus(YamabeProblem& p, const std::function<double(double, double)>& s_hat);

struct YamabeOptions {
  int max_iterations = 60;
  double tol = 1e-12;
  double fit_start = 0.0;  // 0 selects t_min; fit window [fit_start, 4 fit_start]
};

struct YamabeSolution {
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> v_d;       // per theta node
  std::vector<double> v_d_half;  // from the window [fit_start, 2 fit_start]
  double fit_residual = 0.0;
  double residual = 0.0;         // max |v-form residual| over all rows
  int iterations = 0;
  double u_min = 0.0;
  double u_max = 0.0;
};

// Damped Newton on -Lap v + s_hat (1 + v) + d(d-2)/4 ((1 + v)^p - 1 - v) = 0, u = 1 + v.
YamabeSolution yamabe_solve(const YamabeProblem& p, YamabeOptions opts = {});
// -(4(d-1)/(d-2)) Lap u + S u + d(d-1) u^((d+2)/(d-2)) at interior nodes, boundary rows
// hold the Robin and Neumann conditions.
std::vector<double> yamabe_residual(const YamabeProblem& p, std::span<const double> u);
// (-Lap + d) w with one-sided stencils at the ends.
std::vector<double> apply_l(const YamabeProblem& p, std::span<const double> w);
// Solves (-Lap + d) w = rhs with the solver's boundary rows.
std::vector<double> solve_linearized(const YamabeProblem& p, std::span<const double> rhs);
// Coefficient of t^d per theta node from a {t^d, t^(d+1)} fit on [t_lo, t_hi].
PowerFit boundary_coefficient(const YamabeProblem& p, std::span<const double> field,
                              std::size_t j, double t_lo, double t_hi);
std::vector<double> boundary_coefficients(const YamabeProblem& p, std::span<const double> field,
                                          double t_lo, double t_hi);
// S + d(d-1) of u^(4/(d-2)) g, evaluated with a sixth-order stencil independent of the solver's.
std::vector<double> conformal_scalar_excess(const YamabeProblem& p, std::span<const double> u);

// e scaled by u^(4/(d-2)) with u tabulated on the problem grid.
CompactMetricPtr conformal_compact(CompactMetricPtr base, const YamabeProblem& p,
                                   const YamabeSolution& sol);

struct ReduceOptions {
  YamabeOptions yamabe{};
  BoundaryOptions boundary{};
  double shift_tol = 1e-3;  // relative
};

struct ReduceResult {
  YamabeSolution yamabe;
  BoundaryData before;
  BoundaryData after;
  std::vector<double> theta;            // nodes of the boundary quadrature
  std::vector<double> mu_shift;         // mu[g_hat] - mu[g]
  std::vector<double> predicted_shift;  // (4(d-1)/(d-2)) (1 + 1/d) u_d
  double shift_error = 0.0;             // max relative mismatch
  double scalar_error = 0.0;            // max |S[g_hat] + d(d-1)| away from the ends
  double mass_shift = 0.0;
};

ReduceResult reduce_to_constant_scalar(CompactMetricPtr g, YamabeGridSpec grid,
                                       ReduceOptions opts = {});

struct RicciProbeOptions {
  double amplitude = 0.1;   // trace-free part of the planted tensor
  double width = 1.0;       // decay width of the planted tensor
  int ns = 241;
  int ntheta = 24;
  double t_min = 2e-3;
  double t_max = 5.0;
  double step = 0.05;       // s step of the central difference
  int correction_modes = 4;  // subleading modes removing P_2 .. P_{2m} of the reduced aspect
  int correction_iterations = 3;
  double fit_lo = 1e-3;     // window for the leading traceless Ricci coefficient
  double fit_hi = 1e-2;
  YamabeOptions yamabe{};
};

struct RicciProbeReport {
  std::vector<double> theta;
  double ricci_fit_error = 0.0;        // max |fit - (-d/2) gamma| / max |gamma|
  std::vector<double> correction_modes;  // final subleading correction
  std::vector<double> mu_reduced;      // mu of the reduced metric per node
  double mu_mean = 0.0;                // mean of mu_reduced over the sphere
  double scalar_error = 0.0;           // max |S + 6| of the reduced metric
  std::vector<double> dmu_fd;          // central difference of mu_s
  std::vector<double> alpha_ricci;     // fitted traceless Ricci contribution
  std::vector<double> ubar_d;          // linearized solve with the derived right side
  std::vector<double> predicted;       // (4(d-1)/(d-2)) (1 + 1/d) ubar_d
  std::vector<double> predicted_literal;  // same with -Lap w + d w = -|Ric0|^2
  double match_error = 0.0;            // max |dmu_fd - predicted| / |predicted|
  bool conclusive = true;
  std::string note;
};

RicciProbeReport ricci_probe(const RicciProbeOptions& opts = {});

}  // namespace hypermass
