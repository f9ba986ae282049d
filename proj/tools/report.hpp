#pragma once

// Report assembly: one JSON document per run plus optional CSV extracts.
// Everything except the "timing" object is a deterministic function of the
// config and seed.

#include "phsurgery/suites.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace phsurgery::cli {

constexpr const char* kReportSchema = "phsurgery.report/1";

struct RunResult {
  std::string subcommand;
  suites::Config config;
  bool strict = false;
  std::vector<suites::SuiteResult> suites;
  double total_seconds = 0.0;
  bool passed() const;
};

nlohmann::ordered_json report_json(const RunResult& run);
/// Shortest decimal that parses back to the same double.
std::string shortest(double v);
/// Writes checks.csv, constants.csv and one file per table into `dir`.
void write_csv(const RunResult& run, const std::filesystem::path& dir);

}  // namespace phsurgery::cli
