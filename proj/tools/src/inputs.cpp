#include "inputs.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "hypermass/errors.hpp"
#include "hypermass/fields.hpp"

namespace hypermass::cli {
namespace {

using nlohmann::json;

int override_or(std::span<const int> grid, std::size_t i, int fallback) {
  return i < grid.size() && grid[i] > 0 ? grid[i] : fallback;
}

std::vector<std::vector<double>> matrix(const json& j) {
  return j.get<std::vector<std::vector<double>>>();
}

ProfilePtr profile_from(const json& j, double fallback) {
  if (j.is_null()) return std::make_shared<ConstantProfile>(fallback);
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return std::make_shared<ConstantProfile>(j.at("value").get<double>());
  if (kind == "table") {
    return std::make_shared<TableProfile>(j.at("r_min").get<double>(), j.at("r_max").get<double>(),
                                          j.at("values").get<std::vector<double>>());
  }
  if (kind == "tanh") {
    const double c = j.at("center").get<double>(), w = j.at("width").get<double>();
    if (!(w > 0.0)) fail(ErrorKind::io, "psi width must be positive");
    return make_profile([c, w](auto r) {
      using std::tanh;
      return 0.5 * (1.0 + tanh((c - r) / w));
    });
  }
  fail(ErrorKind::io, "unknown profile kind '" + kind + "'");
}

SphereTable sphere_table(const json& j, std::vector<std::vector<std::vector<double>>> values,
                         std::vector<int> parity) {
  return SphereTable(j.at("r_min").get<double>(), j.at("r_max").get<double>(),
                     j.at("ntheta").get<int>(), j.at("nphi").get<int>(), std::move(values),
                     std::move(parity));
}

struct RandomScalar {
  double amp, p1, p2, p3, R;
  template <class T>
  T operator()(const T& r, const T& th, const T& ph) const {
    using std::cos;
    using std::sin;
    return 1.0 + amp * (p1 * sin(th) * cos(ph) + p2 * cos(th) + p3 * sin(th) * sin(ph)) * (R / r);
  }
};

struct RandomAlpha {
  double a0, a1, a2, b, c0, c1, R;
  template <class T>
  std::array<T, 3> operator()(const T& r, const T& th, const T& ph) const {
    using std::cos;
    using std::sin;
    const T s = sin(th);
    return {a0 + a1 * cos(ph) * s + a2 * R / r, b * s * s * sin(ph) * R / r,
            (c0 + c1 * cos(th)) * s * s};
  }
  template <class T>
  std::array<T, 3> limit(const T& th, const T& ph) const {
    using std::cos;
    using std::sin;
    const T s = sin(th);
    return {a0 + a1 * cos(ph) * s, 0.0 * s, (c0 + c1 * cos(th)) * s * s};
  }
};

ScalarFieldPtr random_scalar(std::mt19937_64& rng, double R, double amplitude) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double amp = amplitude * (0.75 + 0.25 * u(rng));
  const double p1 = u(rng), p2 = u(rng), p3 = u(rng);
  return make_scalar_field(RandomScalar{amp, p1, p2, p3, R});
}

AlphaFieldPtr random_alpha(std::mt19937_64& rng, double R) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RandomAlpha a{1.0 + 0.3 * u(rng), 0.2 * u(rng), 0.2 * u(rng), 0.3 * u(rng), 0.7 + 0.2 * u(rng),
                0.1 * u(rng), R};
  return make_alpha_field([a](auto r, auto th, auto ph) { return a(r, th, ph); },
                          [a](auto th, auto ph) { return a.limit(th, ph); });
}

ScalarFieldPtr scalar_from(const json& j, std::mt19937_64& rng, double R) {
  if (j.is_null()) return std::make_shared<ConstantScalar>(1.0);
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return std::make_shared<ConstantScalar>(j.at("value").get<double>());
  if (kind == "random") return random_scalar(rng, R, j.value("amplitude", 0.3));
  if (kind == "table") {
    if (!j.contains("ntheta")) return std::make_shared<RadialScalar>(profile_from(j, 1.0));
    return std::make_shared<TableScalar>(sphere_table(j, {matrix(j.at("values"))}, {1}));
  }
  fail(ErrorKind::io, "unknown f kind '" + kind + "'");
}

AlphaFieldPtr alpha_from(const json& j, std::mt19937_64& rng, int n, double R) {
  if (j.is_null()) return make_zero_alpha();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "zero") return make_zero_alpha();
  if (kind == "constant_trace") return make_constant_trace_alpha(j.at("mu").get<double>(), n);
  if (kind == "random") return random_alpha(rng, R);
  if (kind == "table") {
    const auto& c = j.at("components");
    if (c.size() != 3) fail(ErrorKind::io, "alpha table needs 3 components");
    return std::make_shared<TableAlpha>(
        sphere_table(j, {matrix(c[0]), matrix(c[1]), matrix(c[2])}, {1, -1, 1}));
  }
  fail(ErrorKind::io, "unknown alpha kind '" + kind + "'");
}

template <class Fn>
auto guarded(const char* what, Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string(what) + ": " + e.what());
  }
}

}  // namespace

Grid WarpedInput::grid() const {
  auto r = geometric ? geomspace(metric.R, r_max, nr) : linspace(metric.R, r_max, nr);
  if (metric.n != 2 || ntheta == 0) return Grid::radial(std::move(r));
  return Grid::product(std::move(r), ntheta, nphi);
}

Grid WarpedInput::sphere() const {
  auto r = linspace(metric.R, 2.0 * metric.R, 5);
  if (metric.n != 2 || ntheta == 0 || metric.rotational()) return Grid::radial(std::move(r));
  return Grid::product(std::move(r), ntheta, nphi);
}

RadialMetricSpec random_warped_metric(std::mt19937_64& rng, double R, double amplitude) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RadialMetricSpec spec;
  spec.n = 2;
  spec.R = R;
  spec.f = random_scalar(rng, R, amplitude);
  const double c = R * (1.5 + 1.5 * u(rng)), w = 0.5 + 1.5 * u(rng);
  spec.psi = make_profile([c, w](auto r) {
    using std::tanh;
    return 0.5 * (1.0 + tanh((c - r) / w));
  });
  spec.alpha = random_alpha(rng, R);
  return spec;
}

WarpedInput warped_input(const json& j, std::span<const int> grid, std::uint64_t seed) {
  return guarded("metric input", [&] {
    WarpedInput in;
    std::mt19937_64 rng(seed);
    auto& m = in.metric;
    m.n = j.at("n").get<int>();
    m.R = j.at("R").get<double>();
    if (!(m.R > 0.0)) fail(ErrorKind::io, "R must be positive");
    const json none;
    if (j.contains("random")) {
      if (m.n != 2) fail(ErrorKind::io, "random metrics are n = 2");
      m = random_warped_metric(rng, m.R, j["random"].value("amplitude", 0.3));
    } else {
      m.f = scalar_from(j.contains("f") ? j["f"] : none, rng, m.R);
      m.psi = profile_from(j.contains("psi") ? j["psi"] : none, 1.0);
      m.alpha = alpha_from(j.contains("alpha") ? j["alpha"] : none, rng, m.n, m.R);
    }
    m.validate();
    const json g = j.contains("grid") ? j["grid"] : json::object();
    in.r_max = g.value("r_max", 10.0 * m.R);
    in.nr = override_or(grid, 0, g.value("nr", 16));
    in.ntheta = override_or(grid, 1, g.value("ntheta", 8));
    in.nphi = override_or(grid, 2, g.value("nphi", 8));
    in.geometric = g.value("spacing", std::string("uniform")) == "geometric";
    if (!(in.r_max > m.R)) fail(ErrorKind::io, "grid r_max must exceed R");
    return in;
  });
}

std::function<double(double, double)> surplus_field(int d, std::vector<SurplusBump> bumps) {
  return [d, bumps = std::move(bumps)](double t, double theta) {
    const double c2 = std::cos(theta) * std::cos(theta);
    const double edge = std::pow(std::tanh(t), d + 2);
    double s = 0.0;
    for (const auto& b : bumps) {
      const double z = (t - b.center) / b.width;
      s += b.amplitude * edge * std::exp(-z * z) * (1.0 + b.tilt * c2);
    }
    return s;
  };
}

SphereQuadrature CompactInput::sphere() const {
  return SphereQuadrature::polar(d - 1, quadrature_nodes);
}

CompactInput compact_input(const json& j, std::span<const int> grid) {
  return guarded("compact metric input", [&] {
    CompactInput in;
    in.d = j.value("d", 3);
    const json& m = j.at("metric");
    const auto kind = m.at("kind").get<std::string>();
    if (kind == "hyperbolic") {
      in.metric = hyperbolic_compact(in.d);
    } else if (kind == "power") {
      in.metric = power_compact(in.d, m.value("tt", 0.0), m.value("sphere", 0.0), m.value("width", 0.0));
    } else if (kind == "conformal_bump") {
      in.metric = conformal_bump_compact(in.d, m.at("amplitude").get<double>());
    } else if (kind == "planted") {
      if (in.d != 3) fail(ErrorKind::io, "planted metrics are d = 3");
      PlantedTensor p;
      p.tracefree = m.value("tracefree", 0.0);
      p.trace_modes = m.value("trace_modes", std::vector<double>{});
      p.width = m.value("width", 0.0);
      p.tt = m.value("tt", 0.0);
      p.subleading = m.value("subleading", std::vector<double>{});
      in.metric = planted_chart_compact(p);
    } else {
      fail(ErrorKind::io, "unknown compact metric kind '" + kind + "'");
    }
    const json none = json::object();
    const json& g = j.contains("grid") ? j["grid"] : none;
    in.grid.t_min = g.value("t_min", in.grid.t_min);
    in.grid.t_max = g.value("t_max", in.grid.t_max);
    in.grid.ns = override_or(grid, 0, g.value("ns", in.grid.ns));
    const int nt = override_or(grid, 1, g.value("ntheta", 16));
    in.grid.ntheta = in.metric->rotational() ? 0 : nt;
    const json& q = j.contains("quadrature") ? j["quadrature"] : none;
    in.quadrature_nodes = override_or(grid, 1, q.value("ntheta", 16));
    const json& b = j.contains("boundary") ? j["boundary"] : none;
    in.boundary.t_lo = b.value("t_lo", in.boundary.t_lo);
    in.boundary.t_hi = b.value("t_hi", in.boundary.t_hi);
    in.boundary.samples = b.value("samples", in.boundary.samples);
    in.boundary.mass.degree = b.value("degree", in.boundary.mass.degree);
    in.boundary.mass.residual_tol = b.value("residual_tol", in.boundary.mass.residual_tol);
    const json& y = j.contains("yamabe") ? j["yamabe"] : none;
    in.yamabe.tol = y.value("tol", in.yamabe.tol);
    in.yamabe.max_iterations = y.value("max_iterations", in.yamabe.max_iterations);
    in.shift_tol = j.value("shift_tol", in.shift_tol);
    if (j.contains("surplus")) {
      for (const auto& s : j["surplus"]) {
        SurplusBump bump{s.at("amplitude").get<double>(), s.value("center", 1.0), s.value("width", 0.5),
                         s.value("tilt", 0.0)};
        if (!(bump.width > 0.0)) fail(ErrorKind::io, "surplus width must be positive");
        in.surplus.push_back(bump);
      }
    }
    return in;
  });
}

CuspInput cusp_input(const json& j, std::span<const int> grid) {
  return guarded("cusp model input", [&] {
    CuspModel model;
    model.n = j.value("n", 2);
    model.sides = j.value("sides", std::vector<double>(static_cast<std::size_t>(model.n), 1.0));
    model.t_min = j.value("t_min", model.t_min);
    model.t_max = j.value("t_max", model.t_max);
    if (j.contains("bump")) {
      const auto& b = j["bump"];
      model.bump = {b.value("amplitude", 0.0), b.value("center", 0.5), b.value("width", 0.5)};
    }
    model.validate();
    const json none = json::object();
    const json& g = j.contains("grid") ? j["grid"] : none;
    auto dims = g.value("dims", std::vector<int>(static_cast<std::size_t>(model.n), 16));
    if (static_cast<int>(dims.size()) != model.n) fail(ErrorKind::io, "grid dims need one count per torus axis");
    for (std::size_t a = 0; a < dims.size(); ++a) dims[a] = override_or(grid, a, dims[a]);
    const auto stencil = g.value("stencil", std::string("fourth_order"));
    if (stencil != "fourth_order" && stencil != "spectral") fail(ErrorKind::io, "unknown stencil '" + stencil + "'");
    TorusGrid tg(dims, model.sides,
                 stencil == "spectral" ? TorusStencil::spectral : TorusStencil::fourth_order);
    const double t0 = j.value("t0", 0.0);
    auto taus = j.value("taus", std::vector<double>{-0.1, 0.0, 0.1});
    return CuspInput{std::move(model), std::move(tg), t0, std::move(taus)};
  });
}

std::vector<double> read_surface(const std::filesystem::path& path, std::size_t size) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> u;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cell = line.substr(line.find_last_of(',') + 1);
    try {
      std::size_t used = 0;
      u.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      fail(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  if (u.size() != size) {
    fail(ErrorKind::io, path.string() + ": expected " + std::to_string(size) + " rows, got " +
                            std::to_string(u.size()));
  }
  return u;
}

RicciProbeOptions ricci_input(const json& j, std::span<const int> grid) {
  return guarded("ricci probe input", [&] {
    RicciProbeOptions o;
    o.amplitude = j.value("amplitude", o.amplitude);
    o.width = j.value("width", o.width);
    o.ns = override_or(grid, 0, j.value("ns", o.ns));
    o.ntheta = override_or(grid, 1, j.value("ntheta", o.ntheta));
    o.t_min = j.value("t_min", o.t_min);
    o.t_max = j.value("t_max", o.t_max);
    o.step = j.value("step", o.step);
    o.correction_modes = j.value("correction_modes", o.correction_modes);
    o.correction_iterations = j.value("correction_iterations", o.correction_iterations);
    o.fit_lo = j.value("fit_lo", o.fit_lo);
    o.fit_hi = j.value("fit_hi", o.fit_hi);
    return o;
  });
}

}  // namespace hypermass::cli
