#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hypermass/errors.hpp"

namespace hypermass::cli {
namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v + 0.0);
  return buf;
}

nlohmann::json coords_json(const Coordinates& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : c) j[k] = v;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace

Check upper_bound_check(std::string name, double observed, double allowed, Coordinates worst) {
  Check c;
  c.name = std::move(name);
  c.margin = allowed - observed;
  c.pass = c.margin >= 0.0;
  c.tolerance = allowed;
  c.worst_node = std::move(worst);
  return c;
}

bool RunReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::json report_json(const RunReport& r) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["scenario"] = to_json(r.config);
  j["pass"] = r.pass();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"pass", c.pass},
                           {"margin", c.margin},
                           {"tolerance", c.tolerance},
                           {"worst_node", coords_json(c.worst_node)}});
  }
  j["results"] = r.results;
  j["artifacts"] = nlohmann::json::array();
  for (const auto& t : r.tables) j["artifacts"].push_back(t.name + ".csv");
  if (r.config.timing) j["timing"] = {{"seconds", r.seconds}};
  return j;
}

std::string summary_table(const RunReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-28s %s\n", "scenario",
                std::string(scenario_name(r.config.kind)).c_str(), r.pass() ? "PASS" : "FAIL");
  out << line;
  std::snprintf(line, sizeof line, "%-32s %-5s %12s %12s  %s\n", "check", "pass", "margin",
                "tolerance", "worst node");
  out << line;
  for (const auto& c : r.checks) {
    std::string node;
    for (const auto& [k, v] : c.worst_node) {
      if (!node.empty()) node += " ";
      node += k + "=" + short_number(v);
    }
    std::snprintf(line, sizeof line, "%-32s %-5s %12s %12s  %s\n", c.name.c_str(),
                  c.pass ? "yes" : "NO", short_number(c.margin).c_str(),
                  short_number(c.tolerance).c_str(), node.c_str());
    out << line;
  }
  return out.str();
}

void write_csv(const CsvTable& t, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << number(row[i]);
    out << '\n';
  }
  write_text(path, out.str());
}

std::vector<std::filesystem::path> emit_report(const RunReport& r, Format format,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  switch (format) {
    case Format::json:
      files.push_back(dir / "report.json");
      write_text(files.back(), report_json(r).dump(2) + "\n");
      break;
    case Format::csv:
      for (const auto& t : r.tables) {
        files.push_back(dir / (t.name + ".csv"));
        write_csv(t, files.back());
      }
      break;
    case Format::summary:
      files.push_back(dir / "summary.txt");
      write_text(files.back(), summary_table(r));
      break;
  }
  return files;
}

}  // namespace hypermass::cli
