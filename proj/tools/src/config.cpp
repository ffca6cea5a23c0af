#include "config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <utility>

#include "hypermass/errors.hpp"

namespace hypermass::cli {
namespace {

constexpr std::array<std::pair<Scenario, std::string_view>, 7> kScenarios{{
    {Scenario::curvature, "curvature"},
    {Scenario::brane, "brane"},
    {Scenario::deformation, "deformation"},
    {Scenario::yamabe, "yamabe"},
    {Scenario::mass, "mass"},
    {Scenario::reduce, "reduce"},
    {Scenario::ricci_probe, "ricci-probe"},
}};

constexpr std::array<std::pair<BraneTask, std::string_view>, 4> kTasks{{
    {BraneTask::action, "action"},
    {BraneTask::variation, "variation"},
    {BraneTask::stability, "stability"},
    {BraneTask::foliate, "foliate"},
}};

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

Scenario parse_scenario(std::string_view name) {
  if (name == "verify-deformation") return Scenario::deformation;
  for (const auto& [s, n] : kScenarios)
    if (n == name) return s;
  fail(ErrorKind::io, "unknown scenario '" + std::string(name) + "'");
}

std::string_view scenario_name(Scenario s) {
  for (const auto& [k, n] : kScenarios)
    if (k == s) return n;
  return "?";
}

BraneTask parse_brane_task(std::string_view name) {
  for (const auto& [t, n] : kTasks)
    if (n == name) return t;
  fail(ErrorKind::io, "unknown brane task '" + std::string(name) + "'");
}

std::string_view brane_task_name(BraneTask t) {
  for (const auto& [k, n] : kTasks)
    if (k == t) return n;
  return "?";
}

void ScenarioConfig::validate() const {
  if (tol && !(*tol > 0.0)) fail(ErrorKind::io, "--tol must be positive");
  if (r1 && !(*r1 > 0.0)) fail(ErrorKind::io, "--r1 must be positive");
  if (grid.size() > 3) fail(ErrorKind::io, "--grid takes at most three counts");
  for (int g : grid)
    if (g < 0) fail(ErrorKind::io, "--grid counts must be non-negative");
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) fail(ErrorKind::io, "bad --grid entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

nlohmann::json parse_json(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorKind::io, origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                            ": JSON parse error");
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path.string());
}

ScenarioConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_relative() ? base / path : path;
  };
  ScenarioConfig c;
  try {
    c.kind = parse_scenario(j.at("scenario").get<std::string>());
    if (j.contains("input")) c.input = resolve(j["input"].get<std::string>());
    if (j.contains("surface")) c.surface = resolve(j["surface"].get<std::string>());
    c.out = resolve(j.value("out", std::string(scenario_name(c.kind))));
    if (j.contains("tol")) c.tol = j["tol"].get<double>();
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("grid")) c.grid = parse_grid(j["grid"].get<std::string>());
    if (j.contains("task")) c.task = parse_brane_task(j["task"].get<std::string>());
    if (j.contains("r1")) c.r1 = j["r1"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, std::string("manifest entry: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["kind"] = scenario_name(c.kind);
  j["input"] = c.input.string();
  j["out"] = c.out.string();
  j["seed"] = c.seed;
  j["grid"] = c.grid;
  j["tol"] = c.tol ? nlohmann::json(*c.tol) : nlohmann::json(nullptr);
  if (c.kind == Scenario::brane) {
    j["task"] = brane_task_name(c.task);
    j["surface"] = c.surface.string();
  }
  if (c.kind == Scenario::deformation) j["r1"] = c.r1 ? nlohmann::json(*c.r1) : nlohmann::json(nullptr);
  return j;
}

}  // namespace hypermass::cli
