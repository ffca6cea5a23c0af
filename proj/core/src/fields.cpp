#include "hypermass/fields.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "hypermass/errors.hpp"

namespace hypermass {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

FieldJet to_field_jet(const Jet3& j) {
  FieldJet f;
  f.v = j.v;
  f.r = j.g[0];
  f.rr = j.dd(0, 0);
  f.x = {j.g[1], j.g[2]};
  f.xx = {j.dd(1, 1), j.dd(1, 2), j.dd(2, 2)};
  return f;
}

namespace {

Jet3 from_field_jet(const FieldJet& f) {
  Jet3 j(f.v);
  j.g = {f.r, f.x[0], f.x[1]};
  j.h[Jet3::idx(0, 0)] = f.rr;
  j.h[Jet3::idx(1, 1)] = f.xx[0];
  j.h[Jet3::idx(1, 2)] = f.xx[1];
  j.h[Jet3::idx(2, 2)] = f.xx[2];
  return j;
}

void check_radius(double r, double lo, double hi) {
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (r < lo - slack || r > hi + slack) {
    fail(ErrorKind::range, "radius " + std::to_string(r) + " outside table range [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

std::array<double, 3> AlphaField::value(SpherePoint x, double r) const {
  const auto j = jet(x, r);
  return {j[0].v, j[1].v, j[2].v};
}

struct TableProfile::Impl {
  Spline spline;
  double lo, hi;
};

TableProfile::TableProfile(double r_min, double r_max, std::vector<double> values) {
  if (values.size() < 5) fail(ErrorKind::range, "radial table needs at least 5 samples");
  if (!(r_max > r_min)) fail(ErrorKind::range, "radial table range is empty");
  const double h = (r_max - r_min) / static_cast<double>(values.size() - 1);
  impl_ = std::make_unique<Impl>(
      Impl{Spline(values.data(), values.size(), r_min, h), r_min, r_max});
}

TableProfile::~TableProfile() = default;

RadialJet TableProfile::eval(double r) const {
  check_radius(r, impl_->lo, impl_->hi);
  return {impl_->spline(r), impl_->spline.prime(r), impl_->spline.double_prime(r)};
}

FieldJet RadialScalar::jet(SpherePoint, double r) const {
  const RadialJet p = p_->eval(r);
  FieldJet f;
  f.v = p.v;
  f.r = p.d1;
  f.rr = p.d2;
  return f;
}

RoundChart round_metric_chart(double theta) {
  const double s = std::sin(theta);
  return {{1.0, 0.0, s * s}, {0.0, 0.0, std::sin(2.0 * theta)},
          {0.0, 0.0, 2.0 * std::cos(2.0 * theta)}};
}

std::array<FieldJet, 3> IsotropicAlpha::jet(SpherePoint x, double r) const {
  const RadialJet c = c_->eval(r);
  const RoundChart w = round_metric_chart(x.theta);
  std::array<FieldJet, 3> out;
  for (int k = 0; k < 3; ++k) {
    out[k].v = c.v * w.g[k];
    out[k].r = c.d1 * w.g[k];
    out[k].rr = c.d2 * w.g[k];
    out[k].x = {c.v * w.g_theta[k], 0.0};
    out[k].xx = {c.v * w.g_thetatheta[k], 0.0, 0.0};
  }
  return out;
}

AlphaFieldPtr make_zero_alpha() {
  return std::make_shared<IsotropicAlpha>(std::make_shared<ConstantProfile>(0.0), 0.0);
}

AlphaFieldPtr make_constant_trace_alpha(double mu, int n) {
  const double c = mu / n;
  return std::make_shared<IsotropicAlpha>(std::make_shared<ConstantProfile>(c), c);
}

struct SphereTable::Impl {
  double lo, hi;
  int nr;
  std::vector<std::vector<Spline>> splines;  // [component][node]
  std::vector<std::vector<double>> last;     // [component][node], value at r_max
  std::vector<int> parity;
};

SphereTable::SphereTable(double r_min, double r_max, int ntheta, int nphi,
                         std::vector<std::vector<std::vector<double>>> values,
                         std::vector<int> parity)
    : ntheta_(ntheta), nphi_(nphi) {
  if (ntheta < 5 || nphi < 5) fail(ErrorKind::range, "sphere table needs >= 5 nodes per direction");
  if (nphi % 2 != 0) fail(ErrorKind::range, "sphere table needs an even phi count");
  if (values.size() != parity.size()) fail(ErrorKind::range, "parity count mismatch");
  auto impl = std::make_unique<Impl>();
  impl->lo = r_min;
  impl->hi = r_max;
  impl->parity = std::move(parity);
  const std::size_t nodes = static_cast<std::size_t>(ntheta) * nphi;
  for (auto& comp : values) {
    const std::size_t nr = comp.size();
    if (nr < 5) fail(ErrorKind::range, "sphere table needs >= 5 radial samples");
    impl->nr = static_cast<int>(nr);
    const double h = (r_max - r_min) / static_cast<double>(nr - 1);
    std::vector<Spline> splines;
    std::vector<double> last(nodes);
    splines.reserve(nodes);
    for (std::size_t node = 0; node < nodes; ++node) {
      std::vector<double> column(nr);
      for (std::size_t i = 0; i < nr; ++i) {
        if (comp[i].size() != nodes) fail(ErrorKind::range, "sphere table row has wrong length");
        column[i] = comp[i][node];
      }
      last[node] = column.back();
      splines.emplace_back(column.data(), nr, r_min, h);
    }
    impl->splines.push_back(std::move(splines));
    impl->last.push_back(std::move(last));
  }
  impl_ = std::move(impl);
}

SphereTable::~SphereTable() = default;
SphereTable::SphereTable(SphereTable&&) noexcept = default;
SphereTable& SphereTable::operator=(SphereTable&&) noexcept = default;

namespace {

struct NodeIndex {
  int j, k;
};

NodeIndex locate(SpherePoint x, int ntheta, int nphi) {
  const double jf = x.theta * ntheta / std::numbers::pi - 0.5;
  double phi = std::fmod(x.phi, 2.0 * std::numbers::pi);
  if (phi < 0) phi += 2.0 * std::numbers::pi;
  const double kf = phi * nphi / (2.0 * std::numbers::pi);
  const int j = static_cast<int>(std::lround(jf));
  const int k = static_cast<int>(std::lround(kf)) % nphi;
  if (std::abs(jf - j) > 1e-7 || std::abs(kf - std::lround(kf)) > 1e-7 || j < 0 || j >= ntheta) {
    fail(ErrorKind::range, "tabulated fields can only be evaluated at sphere grid nodes");
  }
  return {j, k};
}

// Sample (j, k) with theta index possibly across a pole; returns the mapped
// node and the reflection sign.
NodeIndex reflect(int j, int k, int ntheta, int nphi, bool& flipped) {
  flipped = false;
  if (j < 0) {
    j = -j - 1;
    k += nphi / 2;
    flipped = true;
  } else if (j >= ntheta) {
    j = 2 * ntheta - j - 1;
    k += nphi / 2;
    flipped = true;
  }
  k = ((k % nphi) + nphi) % nphi;
  return {j, k};
}

}  // namespace

double SphereTable::component_value(int c, SpherePoint x, double r) const {
  check_radius(r, impl_->lo, impl_->hi);
  const NodeIndex n = locate(x, ntheta_, nphi_);
  return impl_->splines[c][static_cast<std::size_t>(n.j) * nphi_ + n.k](r);
}

namespace {

template <class Sample>
FieldJet sphere_differences(Sample sample, double dth, double dph) {
  FieldJet f;
  const double c = sample(0, 0);
  f.v = c;
  const double tp1 = sample(1, 0), tm1 = sample(-1, 0), tp2 = sample(2, 0), tm2 = sample(-2, 0);
  const double pp1 = sample(0, 1), pm1 = sample(0, -1), pp2 = sample(0, 2), pm2 = sample(0, -2);
  f.x[0] = (-tp2 + 8.0 * tp1 - 8.0 * tm1 + tm2) / (12.0 * dth);
  f.x[1] = (-pp2 + 8.0 * pp1 - 8.0 * pm1 + pm2) / (12.0 * dph);
  f.xx[0] = (-tp2 + 16.0 * tp1 - 30.0 * c + 16.0 * tm1 - tm2) / (12.0 * dth * dth);
  f.xx[2] = (-pp2 + 16.0 * pp1 - 30.0 * c + 16.0 * pm1 - pm2) / (12.0 * dph * dph);
  const double d1 = (sample(1, 1) - sample(1, -1) - sample(-1, 1) + sample(-1, -1)) / (4.0 * dth * dph);
  const double d2 = (sample(2, 2) - sample(2, -2) - sample(-2, 2) + sample(-2, -2)) / (16.0 * dth * dph);
  f.xx[1] = (4.0 * d1 - d2) / 3.0;
  return f;
}

}  // namespace

FieldJet SphereTable::component(int c, SpherePoint x, double r) const {
  check_radius(r, impl_->lo, impl_->hi);
  const NodeIndex n = locate(x, ntheta_, nphi_);
  const auto& splines = impl_->splines[c];
  const int parity = impl_->parity[c];
  auto sample = [&](int dj, int dk) {
    bool flipped = false;
    const NodeIndex m = reflect(n.j + dj, n.k + dk, ntheta_, nphi_, flipped);
    const double v = splines[static_cast<std::size_t>(m.j) * nphi_ + m.k](r);
    return flipped ? parity * v : v;
  };
  FieldJet f = sphere_differences(sample, std::numbers::pi / ntheta_, 2.0 * std::numbers::pi / nphi_);
  const auto& s = splines[static_cast<std::size_t>(n.j) * nphi_ + n.k];
  f.r = s.prime(r);
  f.rr = s.double_prime(r);
  return f;
}

FieldJet SphereTable::component_at_rmax(int c, SpherePoint x) const {
  const NodeIndex n = locate(x, ntheta_, nphi_);
  const auto& last = impl_->last[c];
  const int parity = impl_->parity[c];
  auto sample = [&](int dj, int dk) {
    bool flipped = false;
    const NodeIndex m = reflect(n.j + dj, n.k + dk, ntheta_, nphi_, flipped);
    const double v = last[static_cast<std::size_t>(m.j) * nphi_ + m.k];
    return flipped ? parity * v : v;
  };
  return sphere_differences(sample, std::numbers::pi / ntheta_, 2.0 * std::numbers::pi / nphi_);
}

std::array<FieldJet, 3> TableAlpha::jet(SpherePoint x, double r) const {
  return {table_.component(0, x, r), table_.component(1, x, r), table_.component(2, x, r)};
}

std::array<double, 3> TableAlpha::value(SpherePoint x, double r) const {
  return {table_.component_value(0, x, r), table_.component_value(1, x, r),
          table_.component_value(2, x, r)};
}

FieldJet TableAlpha::mass_aspect(SpherePoint x, int) const {
  const Jet3 a = from_field_jet(table_.component_at_rmax(0, x));
  const Jet3 c = from_field_jet(table_.component_at_rmax(2, x));
  const Jet3 s = sin(Jet3::variable(x.theta, 1));
  return to_field_jet(a + c / (s * s));
}

}  // namespace hypermass
