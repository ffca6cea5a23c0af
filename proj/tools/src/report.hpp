#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace hypermass::cli {

inline constexpr const char* kReportSchema = "hypermass.report/1";

using Coordinates = std::vector<std::pair<std::string, double>>;

struct Check {
  std::string name;
  bool pass = true;
  double margin = 0.0;  // allowed - observed at the worst node
  double tolerance = 0.0;
  Coordinates worst_node;
};

// pass iff observed <= allowed.
Check upper_bound_check(std::string name, double observed, double allowed, Coordinates worst = {});

struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunReport {
  ScenarioConfig config;
  nlohmann::json results = nlohmann::json::object();
  std::vector<Check> checks;
  std::vector<CsvTable> tables;
  double seconds = 0.0;

  bool pass() const;
};

enum class Format { json, csv, summary };

nlohmann::json report_json(const RunReport& r);
std::string summary_table(const RunReport& r);
void write_csv(const CsvTable& t, const std::filesystem::path& path);

// Writes into dir; returns the files written.
std::vector<std::filesystem::path> emit_report(const RunReport& r, Format format,
                                               const std::filesystem::path& dir);

}  // namespace hypermass::cli
