#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "hypermass/grid.hpp"
#include "hypermass/jet.hpp"

namespace hypermass {

// Value and first two derivatives of a function of r.
struct RadialJet {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Value, radial derivatives and sphere-chart derivatives (theta, phi) of a
// field on S^n x [R, inf). xx holds {theta theta, theta phi, phi phi}.
struct FieldJet {
  double v = 0.0;
  double r = 0.0;
  double rr = 0.0;
  std::array<double, 2> x{};
  std::array<double, 3> xx{};
};

// Jet3 with variable order (r, theta, phi).
FieldJet to_field_jet(const Jet3& j);

class RadialProfile {
 public:
  virtual ~RadialProfile() = default;
  virtual RadialJet eval(double r) const = 0;
  double operator()(double r) const { return eval(r).v; }
};

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual FieldJet jet(SpherePoint x, double r) const = 0;
  virtual double value(SpherePoint x, double r) const { return jet(x, r).v; }
  virtual bool x_independent() const { return false; }
};

// Symmetric 2-tensor on the sphere factor. Components are given in the n = 2
// chart as {theta theta, theta phi, phi phi}; isotropic fields c(r) * omega
// are supported in every dimension.
class AlphaField {
 public:
  virtual ~AlphaField() = default;
  virtual std::array<FieldJet, 3> jet(SpherePoint x, double r) const = 0;
  virtual std::array<double, 3> value(SpherePoint x, double r) const;
  virtual std::optional<RadialJet> isotropic(double) const { return std::nullopt; }
  // Trace against the round metric as r -> inf, with sphere derivatives.
  virtual FieldJet mass_aspect(SpherePoint x, int n) const = 0;
};

using ProfilePtr = std::shared_ptr<const RadialProfile>;
using ScalarFieldPtr = std::shared_ptr<const ScalarField>;
using AlphaFieldPtr = std::shared_ptr<const AlphaField>;

class ConstantProfile final : public RadialProfile {
 public:
  explicit ConstantProfile(double c) : c_(c) {}
  RadialJet eval(double) const override { return {c_, 0.0, 0.0}; }

 private:
  double c_;
};

// Cubic B-spline through samples on a uniform radial mesh.
class TableProfile final : public RadialProfile {
 public:
  TableProfile(double r_min, double r_max, std::vector<double> values);
  ~TableProfile() override;
  RadialJet eval(double r) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

template <class Fn>
class ClosedFormProfile final : public RadialProfile {
 public:
  explicit ClosedFormProfile(Fn fn) : fn_(std::move(fn)) {}
  RadialJet eval(double r) const override {
    const Jet<1> j = fn_(Jet<1>::variable(r, 0));
    return {j.v, j.g[0], j.h[0]};
  }

 private:
  Fn fn_;
};

template <class Fn>
ProfilePtr make_profile(Fn fn) {
  return std::make_shared<ClosedFormProfile<Fn>>(std::move(fn));
}

class ConstantScalar final : public ScalarField {
 public:
  explicit ConstantScalar(double c) : c_(c) {}
  FieldJet jet(SpherePoint, double) const override { return FieldJet{c_}; }
  double value(SpherePoint, double) const override { return c_; }
  bool x_independent() const override { return true; }

 private:
  double c_;
};

class RadialScalar final : public ScalarField {
 public:
  explicit RadialScalar(ProfilePtr p) : p_(std::move(p)) {}
  FieldJet jet(SpherePoint, double r) const override;
  double value(SpherePoint, double r) const override { return p_->eval(r).v; }
  bool x_independent() const override { return true; }

 private:
  ProfilePtr p_;
};

// fn(r, theta, phi) written generically so it accepts both double and Jet3.
template <class Fn>
class ClosedFormScalar final : public ScalarField {
 public:
  explicit ClosedFormScalar(Fn fn) : fn_(std::move(fn)) {}
  FieldJet jet(SpherePoint x, double r) const override {
    return to_field_jet(fn_(Jet3::variable(r, 0), Jet3::variable(x.theta, 1),
                            Jet3::variable(x.phi, 2)));
  }
  double value(SpherePoint x, double r) const override { return fn_(r, x.theta, x.phi); }

 private:
  Fn fn_;
};

template <class Fn>
ScalarFieldPtr make_scalar_field(Fn fn) {
  return std::make_shared<ClosedFormScalar<Fn>>(std::move(fn));
}

// alpha = c(r) * omega. mu = n * c_limit.
class IsotropicAlpha final : public AlphaField {
 public:
  IsotropicAlpha(ProfilePtr c, double c_limit) : c_(std::move(c)), c_limit_(c_limit) {}
  std::array<FieldJet, 3> jet(SpherePoint x, double r) const override;
  std::optional<RadialJet> isotropic(double r) const override { return c_->eval(r); }
  FieldJet mass_aspect(SpherePoint, int n) const override { return FieldJet{n * c_limit_}; }

 private:
  ProfilePtr c_;
  double c_limit_;
};

AlphaFieldPtr make_zero_alpha();
// Constant isotropic tensor with prescribed trace mu (the "constant_trace" kind).
AlphaFieldPtr make_constant_trace_alpha(double mu, int n);

// fn(r, theta, phi) -> std::array<T, 3> of chart components; limit_fn(theta,
// phi) gives the r -> inf chart components used for the mass aspect.
template <class Fn, class LimitFn>
class ClosedFormAlpha final : public AlphaField {
 public:
  ClosedFormAlpha(Fn fn, LimitFn limit) : fn_(std::move(fn)), limit_(std::move(limit)) {}
  std::array<FieldJet, 3> jet(SpherePoint x, double r) const override {
    const auto c = fn_(Jet3::variable(r, 0), Jet3::variable(x.theta, 1),
                       Jet3::variable(x.phi, 2));
    return {to_field_jet(c[0]), to_field_jet(c[1]), to_field_jet(c[2])};
  }
  std::array<double, 3> value(SpherePoint x, double r) const override {
    return fn_(r, x.theta, x.phi);
  }
  FieldJet mass_aspect(SpherePoint x, int) const override {
    const Jet3 th = Jet3::variable(x.theta, 1);
    const Jet3 ph = Jet3::variable(x.phi, 2);
    const auto c = limit_(th, ph);
    const Jet3 s = sin(th);
    return to_field_jet(c[0] + c[2] / (s * s));
  }

 private:
  Fn fn_;
  LimitFn limit_;
};

template <class Fn, class LimitFn>
AlphaFieldPtr make_alpha_field(Fn fn, LimitFn limit) {
  return std::make_shared<ClosedFormAlpha<Fn, LimitFn>>(std::move(fn), std::move(limit));
}

// Samples on a uniform radial mesh times the latitude-longitude sphere grid.
// Radial derivatives come from cubic B-splines, sphere derivatives from
// fourth-order central differences (reflected across the poles). Only sphere
// grid nodes may be queried.
class SphereTable {
 public:
  // values[c][ir][j * nphi + k]; parity[c] is the sign picked up by component
  // c under the pole reflection theta -> -theta.
  SphereTable(double r_min, double r_max, int ntheta, int nphi,
              std::vector<std::vector<std::vector<double>>> values,
              std::vector<int> parity);
  ~SphereTable();
  SphereTable(SphereTable&&) noexcept;
  SphereTable& operator=(SphereTable&&) noexcept;

  FieldJet component(int c, SpherePoint x, double r) const;
  double component_value(int c, SpherePoint x, double r) const;
  // Component at the outermost radial sample, with sphere derivatives.
  FieldJet component_at_rmax(int c, SpherePoint x) const;
  int ntheta() const { return ntheta_; }
  int nphi() const { return nphi_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int ntheta_ = 0;
  int nphi_ = 0;
};

class TableScalar final : public ScalarField {
 public:
  explicit TableScalar(SphereTable table) : table_(std::move(table)) {}
  FieldJet jet(SpherePoint x, double r) const override { return table_.component(0, x, r); }
  double value(SpherePoint x, double r) const override {
    return table_.component_value(0, x, r);
  }

 private:
  SphereTable table_;
};

class TableAlpha final : public AlphaField {
 public:
  explicit TableAlpha(SphereTable table) : table_(std::move(table)) {}
  std::array<FieldJet, 3> jet(SpherePoint x, double r) const override;
  std::array<double, 3> value(SpherePoint x, double r) const override;
  FieldJet mass_aspect(SpherePoint x, int n) const override;

 private:
  SphereTable table_;
};

// Round metric components in the n = 2 chart with theta derivatives.
struct RoundChart {
  std::array<double, 3> g;
  std::array<double, 3> g_theta;
  std::array<double, 3> g_thetatheta;
};
RoundChart round_metric_chart(double theta);

}  // namespace hypermass
