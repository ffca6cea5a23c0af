#include "scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "hypermass/brane_action.hpp"
#include "hypermass/conformal_yamabe.hpp"
#include "hypermass/deformation.hpp"
#include "hypermass/fd_oracle.hpp"
#include "hypermass/parallel.hpp"
#include "hypermass/warped_geometry.hpp"
#include "inputs.hpp"

namespace hypermass::cli {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> thetas(const SphereQuadrature& q) {
  std::vector<double> out;
  for (const auto& x : q.nodes()) out.push_back(x.theta);
  return out;
}

Coordinates node_coords(const NodeRef& n, int dim) {
  if (dim != 2) return {{"r", n.r}};
  return {{"r", n.r}, {"theta", n.theta}, {"phi", n.phi}};
}

// ----- curvature -----

RunReport curvature(RunReport rep, const json& input) {
  const auto& c = rep.config;
  const auto in = warped_input(input, c.grid, c.seed);
  const auto& spec = in.metric;
  const Grid grid = in.grid();
  const auto r = grid.r();
  const auto sphere = grid.sphere();
  const std::size_t ns = sphere.size();
  const auto exact = scalar_curvature_on_grid(spec, grid);
  std::vector<double> oracle(grid.size(), kNaN);
  parallel_for(r.size(), [&](std::size_t ir) {
    for (std::size_t is = 0; is < ns; ++is) {
      try {
        oracle[ir * ns + is] = warped_scalar_oracle(spec, sphere[is], r[ir], spec.R, in.r_max);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::boundary) throw;
      }
    }
  });

  const double target = -spec.n * (spec.n + 1.0);
  double worst = -1.0, excess = 0.0, lo = INFINITY, hi = -INFINITY;
  std::size_t worst_at = 0, interior = 0;
  CsvTable table{"curvature", {}, {}};
  table.columns = spec.n == 2 && !grid.single_sphere_node()
                      ? std::vector<std::string>{"r", "theta", "phi", "S_exact", "S_oracle", "J"}
                      : std::vector<std::string>{"r", "S_exact", "S_oracle", "J"};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double s = exact.exact[k];
    excess = std::max(excess, std::abs(s - target));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    const SpherePoint x = sphere[k % ns];
    const double rr = r[k / ns];
    if (table.columns.size() == 6) {
      table.rows.push_back({rr, x.theta, x.phi, s, oracle[k], s - exact.leading[k]});
    } else {
      table.rows.push_back({rr, s, oracle[k], s - exact.leading[k]});
    }
    if (std::isnan(oracle[k])) continue;
    ++interior;
    const double err = std::abs(s - oracle[k]) / (1.0 + std::abs(s));
    if (err > worst) {
      worst = err;
      worst_at = k;
    }
  }
  const SpherePoint wx = sphere[worst_at % ns];
  const NodeRef wn{r[worst_at / ns], wx.theta, wx.phi};
  rep.checks.push_back(upper_bound_check("oracle_equivalence", interior ? worst : INFINITY,
                                         c.tol.value_or(1e-6), node_coords(wn, spec.n)));
  rep.results = {{"n", spec.n},
                 {"R", spec.R},
                 {"r_max", in.r_max},
                 {"nodes", grid.size()},
                 {"interior_nodes", interior},
                 {"max_oracle_error", interior ? worst : kNaN},
                 {"max_abs_scalar_excess", excess},
                 {"scalar_min", lo},
                 {"scalar_max", hi}};
  rep.tables.push_back(std::move(table));
  return rep;
}

// ----- deformation -----

json plan_json(const DeformationPlan& p) {
  return {{"n", p.n},
          {"R", p.R},
          {"R1", p.R1},
          {"lambda", p.lambda},
          {"a", p.a},
          {"inv_a_minus_one", p.excess},
          {"inv_a_interval", {p.inv_a_lower, p.inv_a_upper}},
          {"alpha_bound", p.alpha_bound},
          {"alpha_observed", p.alpha_observed},
          {"mu_max", p.mu_max},
          {"mu_min", p.mu_min},
          {"cutoff_b", p.cutoff_b},
          {"cutoff_c", p.cutoff_c},
          {"safety", p.safety},
          {"envelope", p.envelope}};
}

RunReport deformation(RunReport rep, const json& input) {
  const auto& c = rep.config;
  const auto in = warped_input(input, c.grid, c.seed);
  DeformationOptions opts;
  if (input.contains("deformation")) {
    const auto& d = input["deformation"];
    opts.r1_hint = d.value("r1_hint", opts.r1_hint);
    opts.safety = d.value("safety", opts.safety);
    opts.max_safety = d.value("max_safety", opts.max_safety);
    opts.max_r1_factor = d.value("max_r1_factor", opts.max_r1_factor);
    opts.alpha_bound = d.value("alpha_bound", opts.alpha_bound);
    opts.radial_nodes = d.value("radial_nodes", opts.radial_nodes);
    opts.envelope_radii = d.value("envelope_radii", opts.envelope_radii);
  }
  if (c.r1) opts.r1_hint = *c.r1;
  if (c.tol) opts.tol_rel = *c.tol;
  const auto res = build_deformation(in.metric, in.sphere(), opts);
  const int n = in.metric.n;
  for (const auto& k : res.report.checks) {
    rep.checks.push_back({k.name, k.pass, k.margin, k.tolerance, node_coords(k.worst, n)});
  }
  json history = json::array();
  for (const auto& h : res.history) history.push_back({{"R1", h.R1}, {"safety", h.safety}, {"failed", h.failed}});
  double min_margin = INFINITY;
  for (const auto& row : res.report.margins) min_margin = std::min(min_margin, row.bound_margin);
  const auto& plan = res.report.plan;
  rep.results = {{"plan", plan_json(plan)},
                 {"history", history},
                 {"glue_radius_observed", res.report.glue_radius_observed},
                 {"min_scalar_margin", min_margin},
                 {"margins_csv_path", "margins.csv"},
                 {"functions_csv_path", "functions.csv"}};

  CsvTable margins{"margins", {"r", "theta", "phi", "scalar", "chain", "bound_margin"}, {}};
  for (const auto& row : res.report.margins) {
    margins.rows.push_back({row.node.r, row.node.theta, row.node.phi, row.scalar, row.chain, row.bound_margin});
  }
  CsvTable functions{"functions",
                     {"mu_abs", "r", "psi", "bump", "blend", "eta1", "eta2", "eta", "f", "A1"},
                     {}};
  const auto radii = verification_radii(plan, 400);
  for (double mu : {plan.mu_min, plan.mu_max}) {
    for (const auto& s : sample_functions(*res.deformation, mu, radii)) {
      functions.rows.push_back(
          {mu, s.r, s.psi, s.bump, s.blend, s.inner, s.outer, s.potential, s.f, s.envelope_primitive});
    }
  }
  rep.tables.push_back(std::move(margins));
  rep.tables.push_back(std::move(functions));
  return rep;
}

// ----- brane -----

std::vector<double> variation_direction(const TorusGrid& g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    v[i] = 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * g.point(i)[0] / g.sides()[0]);
  }
  return v;
}

void add_point_columns(CsvTable& t, int n) {
  for (int a = 0; a < n; ++a) t.columns.push_back("x" + std::to_string(a));
}

std::vector<double> point_row(const TorusGrid& g, std::size_t i) {
  const auto p = g.point(i);
  return {p.begin(), p.begin() + g.dim()};
}

RunReport brane(RunReport rep, const json& input) {
  const auto& c = rep.config;
  auto in = cusp_input(input, c.grid);
  const auto& g = in.grid;
  std::vector<double> u = c.surface.empty() ? std::vector<double>(g.size(), 0.0)
                                            : read_surface(c.surface, g.size());
  const GraphSurface surface{g, u, in.t0};
  const auto action = brane_action(surface, in.model);
  const auto H = mean_curvature_graph(surface, in.model);
  double h_dev = 0.0;
  for (double h : H) h_dev = std::max(h_dev, std::abs(h - in.model.n));
  rep.results = {{"task", brane_task_name(c.task)},
                 {"action", action.action},
                 {"area", action.area},
                 {"volume", action.volume},
                 {"residuals", {{"mean_curvature", h_dev}}}};

  switch (c.task) {
    case BraneTask::action:
      break;
    case BraneTask::variation: {
      const auto v = variation_direction(g);
      const double h = 1e-4;
      GraphSurface sp = surface, sm = surface;
      for (std::size_t i = 0; i < g.size(); ++i) {
        sp.u[i] += h * v[i];
        sm.u[i] -= h * v[i];
      }
      const double fd = (brane_action(sp, in.model).action - brane_action(sm, in.model).action) / (2 * h);
      const double an = first_variation(surface, in.model, v);
      rep.results["first_variation"] = an;
      rep.results["action_derivative_fd"] = fd;
      rep.results["residuals"]["first_variation"] = std::abs(fd - an);
      rep.checks.push_back(upper_bound_check("first_variation_identity", std::abs(fd - an),
                                             c.tol.value_or(1e-6) * (std::abs(an) + 1e-3)));
      break;
    }
    case BraneTask::stability: {
      const auto slice = cusp_slice(in.model, g, in.t0);
      const auto st = principal_eigenvalue(slice, StabilityForm::general);
      rep.results["lambda1"] = st.lambda1;
      rep.results["iterations"] = st.iterations;
      rep.results["witness_min"] = st.witness_min;
      rep.results["residuals"]["eigen"] = st.residual;
      rep.checks.push_back(upper_bound_check("eigen_residual", st.residual, c.tol.value_or(1e-8)));
      Check pos{"eigenfunction_positive", st.eigfn_positive, st.eigfn_positive ? 0.0 : -1.0, 0.0, {}};
      rep.checks.push_back(pos);
      CsvTable t{"eigenfunction", {}, {}};
      add_point_columns(t, g.dim());
      t.columns.push_back("phi");
      for (std::size_t i = 0; i < g.size(); ++i) {
        auto row = point_row(g, i);
        row.push_back(st.eigfn[i]);
        t.rows.push_back(std::move(row));
      }
      rep.tables.push_back(std::move(t));
      break;
    }
    case BraneTask::foliate: {
      NewtonOptions opts;
      if (c.tol) opts.tol = *c.tol;
      const auto leaves = cmc_foliation(in.model, g, in.t0, in.taus, opts);
      json out = json::array();
      int iters = 0;
      double resid = 0.0;
      CsvTable t{"leaves", {"tau"}, {}};
      add_point_columns(t, g.dim());
      t.columns.push_back("u");
      for (const auto& leaf : leaves) {
        out.push_back({{"tau", leaf.tau}, {"k", leaf.k}, {"iterations", leaf.iterations}, {"residual", leaf.residual}});
        iters = std::max(iters, leaf.iterations);
        resid = std::max(resid, leaf.residual);
        for (std::size_t i = 0; i < g.size(); ++i) {
          std::vector<double> row{leaf.tau};
          for (double x : point_row(g, i)) row.push_back(x);
          row.push_back(leaf.u[i]);
          t.rows.push_back(std::move(row));
        }
      }
      rep.results["leaves"] = out;
      rep.results["residuals"]["foliation"] = resid;
      rep.checks.push_back(upper_bound_check("newton_residual", resid, opts.tol));
      rep.checks.push_back(upper_bound_check("newton_iterations", iters, 5.0));
      rep.tables.push_back(std::move(t));
      break;
    }
  }
  return rep;
}

// ----- conformal -----

CsvTable profile_table(const YamabeGridSpec& spec, const YamabeSolution& sol) {
  CsvTable t{"profiles", {"t", "theta", "u", "v"}, {}};
  const auto s = linspace(std::log(spec.t_min), std::log(spec.t_max), spec.ns);
  const int nt = std::max(spec.ntheta, 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int j = 0; j < nt; ++j) {
      const double th = spec.ntheta ? (j + 0.5) * std::numbers::pi / spec.ntheta : std::numbers::pi / 2;
      const std::size_t k = i * nt + j;
      t.rows.push_back({std::exp(s[i]), th, sol.u[k], sol.v[k]});
    }
  }
  return t;
}

json boundary_json(const BoundaryData& b) {
  return {{"mass", b.mass}, {"mu_min", b.mu_min}, {"mu_max", b.mu_max}, {"mu", b.mu}, {"fit_residual", b.fit_residual}};
}

RunReport mass(RunReport rep, const json& input) {
  const auto in = compact_input(input, rep.config.grid);
  const auto sphere = in.sphere();
  const auto b = boundary_mass(*in.metric, sphere, in.boundary);
  rep.results = boundary_json(b);
  rep.results["d"] = in.d;
  rep.results["theta"] = thetas(sphere);
  rep.results["fit_residuals"] = {{"boundary", b.fit_residual}};
  rep.checks.push_back(upper_bound_check("expansion_fit", b.fit_residual, in.boundary.mass.residual_tol));
  CsvTable t{"aspect", {"theta", "mu"}, {}};
  for (std::size_t i = 0; i < sphere.size(); ++i) t.rows.push_back({sphere.nodes()[i].theta, b.mu[i]});
  rep.tables.push_back(std::move(t));
  return rep;
}

RunReport yamabe(RunReport rep, const json& input) {
  const auto& c = rep.config;
  const auto in = compact_input(input, c.grid);
  const auto spec = validated(in.grid, in.d);
  auto p = yamabe_problem(*in.metric, spec);
  if (!in.surplus.empty()) prescribe_surplus(p, surplus_field(in.d, in.surplus));
  const auto sol = yamabe_solve(p, in.yamabe);
  bool nonnegative = true, trivial = true;
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    nonnegative = nonnegative && p.surplus(k) >= 0.0;
    trivial = trivial && p.surplus(k) == 0.0;
  }
  rep.results = {{"d", in.d},
                 {"iterations", sol.iterations},
                 {"residual", sol.residual},
                 {"u_min", sol.u_min},
                 {"u_max", sol.u_max},
                 {"theta", p.theta.empty() ? std::vector<double>{std::numbers::pi / 2} : p.theta},
                 {"v_d", sol.v_d},
                 {"v_d_half_window", sol.v_d_half},
                 {"surplus_nonnegative", nonnegative},
                 {"fit_residuals", {{"v_d", sol.fit_residual}}}};
  rep.checks.push_back(upper_bound_check("newton_residual", sol.residual, c.tol.value_or(1e-9)));
  if (nonnegative && !trivial) {
    rep.checks.push_back(upper_bound_check("u_at_most_one", sol.u_max, 1.0 + 1e-12));
    const double vd = *std::max_element(sol.v_d.begin(), sol.v_d.end());
    rep.checks.push_back(upper_bound_check("v_d_negative", vd, 0.0));
  }
  rep.tables.push_back(profile_table(spec, sol));
  return rep;
}

RunReport reduce(RunReport rep, const json& input) {
  const auto& c = rep.config;
  const auto in = compact_input(input, c.grid);
  const auto spec = validated(in.grid, in.d);
  ReduceOptions opts;
  opts.yamabe = in.yamabe;
  opts.boundary = in.boundary;
  opts.shift_tol = in.shift_tol;
  const auto res = reduce_to_constant_scalar(in.metric, spec, opts);
  rep.results = {{"d", in.d},
                 {"before", boundary_json(res.before)},
                 {"after", boundary_json(res.after)},
                 {"mass", res.after.mass},
                 {"mu_min", res.after.mu_min},
                 {"mu_max", res.after.mu_max},
                 {"mass_shift", res.mass_shift},
                 {"theta", res.theta},
                 {"v_d", res.yamabe.v_d},
                 {"mu_shift", res.mu_shift},
                 {"predicted_shift", res.predicted_shift},
                 {"shift_error", res.shift_error},
                 {"scalar_error", res.scalar_error},
                 {"fit_residuals",
                  {{"before", res.before.fit_residual},
                   {"after", res.after.fit_residual},
                   {"v_d", res.yamabe.fit_residual},
                   {"yamabe", res.yamabe.residual}}}};
  rep.checks.push_back(upper_bound_check("constant_scalar", res.scalar_error, c.tol.value_or(1e-6)));
  rep.checks.push_back(upper_bound_check("shift_matches_prediction", res.shift_error, in.shift_tol));
  rep.checks.push_back(upper_bound_check("mass_nonincreasing", res.mass_shift, 1e-10));
  CsvTable t{"shift", {"theta", "mu_before", "mu_after", "mu_shift", "predicted"}, {}};
  for (std::size_t i = 0; i < res.theta.size(); ++i) {
    t.rows.push_back({res.theta[i], res.before.mu[i], res.after.mu[i], res.mu_shift[i], res.predicted_shift[i]});
  }
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(profile_table(spec, res.yamabe));
  return rep;
}

RunReport ricci(RunReport rep, const json& input) {
  const auto& c = rep.config;
  const auto opts = ricci_input(input, c.grid);
  const auto r = ricci_probe(opts);
  rep.results = {{"theta", r.theta},
                 {"ricci_fit_error", r.ricci_fit_error},
                 {"correction_modes", r.correction_modes},
                 {"mu_reduced", r.mu_reduced},
                 {"mu_mean", r.mu_mean},
                 {"scalar_error", r.scalar_error},
                 {"dmu_fd", r.dmu_fd},
                 {"alpha_ricci", r.alpha_ricci},
                 {"ubar_d", r.ubar_d},
                 {"predicted", r.predicted},
                 {"predicted_literal", r.predicted_literal},
                 {"match_error", r.match_error},
                 {"conclusive", r.conclusive},
                 {"note", r.note}};
  rep.checks.push_back(upper_bound_check("ricci_leading_coefficient", r.ricci_fit_error, 0.05));
  rep.checks.push_back(upper_bound_check("dmu_negative", *std::max_element(r.dmu_fd.begin(), r.dmu_fd.end()), 0.0));
  rep.checks.push_back(upper_bound_check("dmu_matches_prediction", r.match_error, c.tol.value_or(0.10)));
  rep.checks.push_back({"conclusive", r.conclusive, r.conclusive ? 0.0 : -1.0, 0.0, {}});
  CsvTable t{"probe", {"theta", "mu_reduced", "dmu_fd", "alpha_ricci", "ubar_d", "predicted", "predicted_literal"}, {}};
  for (std::size_t i = 0; i < r.theta.size(); ++i) {
    t.rows.push_back({r.theta[i], r.mu_reduced[i], r.dmu_fd[i], r.alpha_ricci[i], r.ubar_d[i], r.predicted[i],
                      r.predicted_literal[i]});
  }
  rep.tables.push_back(std::move(t));
  return rep;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::hypothesis:
    case ErrorKind::degenerate_metric:
      return 2;
    case ErrorKind::solver:
    case ErrorKind::construction:
    case ErrorKind::boundary:
      return 3;
    default:
      return 4;
  }
}

RunReport run_scenario(const ScenarioConfig& config, const json& input) {
  config.validate();
  const std::string name(scenario_name(config.kind));
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.config = config;
  try {
    switch (config.kind) {
      case Scenario::curvature: rep = curvature(std::move(rep), input); break;
      case Scenario::brane: rep = brane(std::move(rep), input); break;
      case Scenario::deformation: rep = deformation(std::move(rep), input); break;
      case Scenario::yamabe: rep = yamabe(std::move(rep), input); break;
      case Scenario::mass: rep = mass(std::move(rep), input); break;
      case Scenario::reduce: rep = reduce(std::move(rep), input); break;
      case Scenario::ricci_probe: rep = ricci(std::move(rep), input); break;
    }
  } catch (const SolverError& e) {
    throw SolverError(name + ": " + e.what(), e.residual());
  } catch (const Error& e) {
    throw Error(e.kind(), name + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::io, name + ": " + e.what());
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

RunReport run_scenario(const ScenarioConfig& config) {
  if (config.input.empty()) {
    if (config.kind != Scenario::ricci_probe) fail(ErrorKind::io, "--input is required");
    return run_scenario(config, json::object());
  }
  return run_scenario(config, read_json(config.input));
}

}  // namespace hypermass::cli
