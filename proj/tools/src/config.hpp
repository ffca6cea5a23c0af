#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hypermass::cli {

enum class Scenario { curvature, brane, deformation, yamabe, mass, reduce, ricci_probe };

Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario s);

enum class BraneTask { action, variation, stability, foliate };

BraneTask parse_brane_task(std::string_view name);
std::string_view brane_task_name(BraneTask t);

struct ScenarioConfig {
  Scenario kind = Scenario::curvature;
  std::filesystem::path input;    // empty selects built-in defaults where supported
  std::filesystem::path surface;  // brane only: CSV of u
  std::filesystem::path out = ".";
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::vector<int> grid;  // nr, ntheta, nphi; 0 keeps the input value
  BraneTask task = BraneTask::action;
  std::optional<double> r1;
  bool timing = false;

  // Throws io on non-positive tolerances or grid counts.
  void validate() const;
};

// "64,32,32" -> {64, 32, 32}; fewer entries are allowed.
std::vector<int> parse_grid(const std::string& text);

// Parse errors are reported with line and column.
nlohmann::json parse_json(const std::string& text, const std::string& origin);
nlohmann::json read_json(const std::filesystem::path& path);

// One manifest entry; relative paths resolve against base.
ScenarioConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base);

nlohmann::json to_json(const ScenarioConfig& c);

}  // namespace hypermass::cli
