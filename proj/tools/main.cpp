#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "report.hpp"
#include "scenarios.hpp"

namespace fs = std::filesystem;
using namespace hypermass;
using namespace hypermass::cli;

namespace {

constexpr const char* kCsvHelp = R"(CSV dumps written to --out:
  curvature.csv    r, theta, phi, S_exact, S_oracle, J   (S_oracle empty near the radial ends; J = S - leading terms)
  margins.csv      r, theta, phi, scalar, chain, bound_margin
  functions.csv    mu_abs, r, psi, bump, blend, eta1, eta2, eta, f, A1
  eigenfunction.csv  x0.., phi
  leaves.csv       tau, x0.., u
  aspect.csv       theta, mu
  profiles.csv     t, theta, u, v
  shift.csv        theta, mu_before, mu_after, mu_shift, predicted
  probe.csv        theta, mu_reduced, dmu_fd, alpha_ricci, ubar_d, predicted, predicted_literal
Exit status: 0 all checks pass, 1 a check failed, 2 hypothesis violated, 3 solver failure, 4 input or I/O error.)";

struct Flags {
  std::string input, surface, out = "out", grid, output, task = "action";
  double tol = 0.0, r1 = 0.0;
  std::uint64_t seed = 0;
  bool timing = false, quiet = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--input,-i", f.input, "Input JSON")->check(CLI::ExistingFile);
  sub->add_option("--out,-o", f.out, "Output directory");
  sub->add_option("--tol", f.tol, "Scenario tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "Seed for generated fields");
  sub->add_option("--grid", f.grid, "Grid counts nr,ntheta,nphi (0 keeps the input value)");
  sub->add_flag("--timing", f.timing, "Record wall time in the report");
  sub->add_flag("--quiet,-q", f.quiet, "Do not print the summary");
}

ScenarioConfig to_config(Scenario kind, const Flags& f) {
  ScenarioConfig c;
  c.kind = kind;
  c.input = f.input;
  c.surface = f.surface;
  c.out = f.out;
  if (f.tol > 0.0) c.tol = f.tol;
  if (f.r1 > 0.0) c.r1 = f.r1;
  c.seed = f.seed;
  if (!f.grid.empty()) c.grid = parse_grid(f.grid);
  c.task = parse_brane_task(f.task);
  c.timing = f.timing;
  return c;
}

bool emit(const RunReport& rep, const fs::path& extra_report, bool quiet) {
  for (auto format : {Format::json, Format::csv, Format::summary}) emit_report(rep, format, rep.config.out);
  if (!extra_report.empty()) {
    if (extra_report.has_parent_path()) fs::create_directories(extra_report.parent_path());
    fs::copy_file(rep.config.out / "report.json", extra_report, fs::copy_options::overwrite_existing);
  }
  if (!quiet) std::cout << summary_table(rep);
  return rep.pass();
}

int run_batch(const fs::path& manifest, bool quiet) {
  const auto j = read_json(manifest);
  if (!j.contains("runs") || !j["runs"].is_array()) fail(ErrorKind::io, manifest.string() + ": missing runs array");
  int status = 0;
  for (const auto& entry : j["runs"]) {
    const auto config = config_from_json(entry, manifest.parent_path());
    int code = 0;
    try {
      code = emit(run_scenario(config), {}, quiet) ? 0 : 1;
    } catch (const Error& e) {
      std::cerr << "hypermass: " << e.what() << "\n";
      code = exit_code(e.kind());
    }
    status = std::max(status, code);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypermass: scalar curvature, brane action, deformation and conformal reduction checks"};
  app.footer(kCsvHelp);
  app.require_subcommand(1);
  Flags f;
  std::vector<std::pair<CLI::App*, Scenario>> subs;

  auto* curvature = app.add_subcommand("curvature", "Exact scalar curvature against the finite-difference oracle");
  add_common(curvature, f);
  subs.emplace_back(curvature, Scenario::curvature);

  auto* brane = app.add_subcommand("brane", "Brane action, first variation, stability and CMC foliation on the cusp");
  brane->add_option("--model,-i,--input", f.input, "Cusp model JSON")->check(CLI::ExistingFile);
  brane->add_option("--surface", f.surface, "Grid CSV of u (last column)")->check(CLI::ExistingFile);
  brane->add_option("--task", f.task, "action|variation|stability|foliate")
      ->check(CLI::IsMember({"action", "variation", "stability", "foliate"}));
  brane->add_option("--out,-o", f.out, "Output directory");
  brane->add_option("--tol", f.tol, "Scenario tolerance")->check(CLI::PositiveNumber);
  brane->add_option("--seed", f.seed, "Seed for generated fields");
  brane->add_option("--grid", f.grid, "Torus counts per axis");
  brane->add_flag("--timing", f.timing, "Record wall time in the report");
  brane->add_flag("--quiet,-q", f.quiet, "Do not print the summary");
  subs.emplace_back(brane, Scenario::brane);

  auto* deformation = app.add_subcommand("deformation", "Build and verify the corner-rounding deformation");
  deformation->alias("verify-deformation");
  add_common(deformation, f);
  deformation->add_option("--r1", f.r1, "Starting R1")->check(CLI::PositiveNumber);
  deformation->add_option("--output", f.output, "Extra copy of report.json");
  subs.emplace_back(deformation, Scenario::deformation);

  for (auto [name, kind, help] :
       {std::tuple{"mass", Scenario::mass, "Mass aspect and mass of a compactified metric"},
        std::tuple{"yamabe", Scenario::yamabe, "Solve the constant scalar curvature equation"},
        std::tuple{"reduce", Scenario::reduce, "Conformal reduction to constant scalar curvature"},
        std::tuple{"ricci-probe", Scenario::ricci_probe, "Traceless Ricci asymptotics and the Einstein probe curve"}}) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, f);
    subs.emplace_back(sub, kind);
  }

  std::string manifest;
  auto* batch = app.add_subcommand("batch", "Run every entry of a manifest {\"runs\": [...]} in order");
  batch->add_option("manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  batch->add_flag("--quiet,-q", f.quiet, "Do not print summaries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (batch->parsed()) return run_batch(manifest, f.quiet);
    for (auto [sub, kind] : subs) {
      if (!sub->parsed()) continue;
      const auto config = to_config(kind, f);
      config.validate();
      return emit(run_scenario(config), f.output, f.quiet) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "hypermass: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hypermass: " << e.what() << "\n";
    return 4;
  }
  return 4;
}
