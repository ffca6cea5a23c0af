#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "hypermass/errors.hpp"
#include "report.hpp"
#include "scenarios.hpp"

namespace hypermass::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "hypermass_cli_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioConfig config(Scenario kind, const std::string& out) {
  ScenarioConfig c;
  c.kind = kind;
  c.out = scratch(out);
  return c;
}

const json kHyperbolic = {{"n", 2}, {"R", 2.0}, {"f", {{"kind", "constant"}, {"value", 1.0}}},
                          {"grid", {{"nr", 8}, {"r_max", 12.0}, {"ntheta", 6}, {"nphi", 6}}}};

const json kPlanted = {{"n", 2}, {"R", 4.0}, {"alpha", {{"kind", "constant_trace"}, {"mu", -2.0}}},
                       {"grid", {{"ntheta", 0}}}};

const CsvTable* table(const RunReport& r, const std::string& name) {
  for (const auto& t : r.tables)
    if (t.name == name) return &t;
  return nullptr;
}

std::size_t column(const CsvTable& t, const std::string& name) {
  return static_cast<std::size_t>(std::find(t.columns.begin(), t.columns.end(), name) - t.columns.begin());
}

TEST(CliConfig, ScenarioNamesRoundTrip) {
  for (auto s : {Scenario::curvature, Scenario::brane, Scenario::deformation, Scenario::yamabe, Scenario::mass,
                 Scenario::reduce, Scenario::ricci_probe}) {
    EXPECT_EQ(parse_scenario(scenario_name(s)), s);
  }
  EXPECT_EQ(parse_scenario("verify-deformation"), Scenario::deformation);
  EXPECT_THROW(parse_scenario("nope"), Error);
}

TEST(CliConfig, GridAndTolerances) {
  EXPECT_EQ(parse_grid("64,32,32"), (std::vector<int>{64, 32, 32}));
  EXPECT_EQ(parse_grid("12"), (std::vector<int>{12}));
  EXPECT_THROW(parse_grid("12,x"), Error);
  ScenarioConfig c;
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c.tol = 1e-3;
  c.grid = {1, 2, 3, 4};
  EXPECT_THROW(c.validate(), Error);
}

TEST(CliConfig, ParseErrorsCarryLineAndColumn) {
  try {
    parse_json("{\n  \"n\": 2,\n  \"R\": ,\n}", "metric.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("metric.json:3:8"), std::string::npos) << e.what();
  }
}

TEST(CliConfig, ManifestEntriesResolveRelativePaths) {
  const json entry = {{"scenario", "mass"}, {"input", "b.json"}, {"out", "runs/m"}, {"grid", "0,12"}};
  const auto c = config_from_json(entry, "/data");
  EXPECT_EQ(c.kind, Scenario::mass);
  EXPECT_EQ(c.input, fs::path("/data/b.json"));
  EXPECT_EQ(c.out, fs::path("/data/runs/m"));
  EXPECT_EQ(c.grid, (std::vector<int>{0, 12}));
}

TEST(CliScenario, HyperbolicCurvature) {
  const auto r = run_scenario(config(Scenario::curvature, "curv"), kHyperbolic);
  EXPECT_TRUE(r.pass());
  EXPECT_LT(r.results["max_abs_scalar_excess"].get<double>(), 1e-10);
  EXPECT_GT(r.results["interior_nodes"].get<int>(), 0);
}

TEST(CliScenario, PlantedDeformationPasses) {
  const auto r = run_scenario(config(Scenario::deformation, "defm"), kPlanted);
  EXPECT_TRUE(r.pass());
  const auto& plan = r.results["plan"];
  const double floor = 6.0 / plan["a"].get<double>();
  EXPECT_GT(r.results["min_scalar_margin"].get<double>(), -1e-6 * floor);

  // eta rounds the corner of max(eta1, eta2): it starts on eta1, ends on eta2
  // and above R1 never drops below either
  const auto* f = table(r, "functions");
  ASSERT_NE(f, nullptr);
  const auto i1 = column(*f, "eta1"), i2 = column(*f, "eta2"), ie = column(*f, "eta");
  const auto ir = column(*f, "r");
  const double R1 = plan["R1"].get<double>(), end = 6.0 * plan["lambda"].get<double>() * R1;
  int crossings = 0;
  double prev = 0.0;
  for (const auto& row : f->rows) {
    const double hi = std::max(row[i1], row[i2]);
    if (row[ir] >= R1) EXPECT_GE(row[ie], hi * (1.0 - 1e-12));
    if (row[ir] <= R1) EXPECT_NEAR(row[ie], row[i1], 1e-12 * hi);
    if (row[ir] >= end) EXPECT_NEAR(row[ie], row[i2], 1e-9 * hi);
    const double gap = row[i1] - row[i2];
    if (prev > 0.0 && gap < 0.0) ++crossings;
    prev = gap;
  }
  EXPECT_GE(crossings, 1);
}

TEST(CliScenario, TraceFreeMassVanishes) {
  const json in = {{"d", 3}, {"metric", {{"kind", "planted"}, {"tracefree", 0.2}, {"width", 1.0}}}};
  const auto r = run_scenario(config(Scenario::mass, "mass"), in);
  EXPECT_TRUE(r.pass());
  EXPECT_NEAR(r.results["mass"].get<double>(), 0.0, 1e-10);
}

TEST(CliScenario, ErrorsKeepKindAndContext) {
  json in = kPlanted;
  in["alpha"]["mu"] = 2.0;
  try {
    run_scenario(config(Scenario::deformation, "bad"), in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e.kind()), 2);
    EXPECT_EQ(std::string(e.what()).rfind("deformation: ", 0), 0u);
  }
  try {
    run_scenario(config(Scenario::mass, "bad"), json{{"d", 3}, {"metric", {{"kind", "torus"}}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e.kind()), 4);
  }
  EXPECT_EQ(exit_code(ErrorKind::solver), 3);
}

TEST(CliReport, SameConfigGivesIdenticalFiles) {
  auto c = config(Scenario::curvature, "det_a");
  c.seed = 5;
  const json in = {{"n", 2}, {"R", 2.0}, {"random", {{"amplitude", 0.3}}},
                   {"grid", {{"nr", 6}, {"r_max", 10.0}, {"ntheta", 5}, {"nphi", 6}}}};
  auto d = c;
  d.out = c.out;
  const auto a = run_scenario(c, in);
  const auto b = run_scenario(d, in);
  const auto da = scratch("det_1"), db = scratch("det_2");
  for (auto fmt : {Format::json, Format::csv, Format::summary}) {
    emit_report(a, fmt, da);
    emit_report(b, fmt, db);
  }
  for (const char* f : {"report.json", "curvature.csv", "summary.txt"}) {
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
  c.seed = 6;
  const auto other = run_scenario(c, in);
  EXPECT_NE(report_json(other).dump(), report_json(a).dump());
}

TEST(CliReport, SummaryListsWorstNode) {
  RunReport r;
  r.config.kind = Scenario::deformation;
  r.checks.push_back(upper_bound_check("scalar_bound", 2.0, 1.0, {{"r", 12.5}, {"theta", 0.25}, {"phi", 1.5}}));
  EXPECT_FALSE(r.pass());
  const auto s = summary_table(r);
  EXPECT_NE(s.find("FAIL"), std::string::npos);
  EXPECT_NE(s.find("r=1.250e+01 theta=2.500e-01 phi=1.500e+00"), std::string::npos) << s;
  EXPECT_EQ(report_json(r)["schema"], kReportSchema);
  EXPECT_FALSE(report_json(r).contains("timing"));
}

}  // namespace
}  // namespace hypermass::cli
