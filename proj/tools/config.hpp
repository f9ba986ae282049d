#pragma once

// JSON campaign configuration: parsing with line/field diagnostics and
// serialization back to the same schema.

#include "phsurgery/suites.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace phsurgery::cli {

constexpr int kConfigSchema = 1;

/// Parse or validation failure; `field` is the dotted path ("" for syntax
/// errors) and `line` is 1-based (0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, int column, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string field_;
  int line_;
  int column_;
};

suites::Config parse_config(const std::string& text);
suites::Config load_config(const std::string& path);
nlohmann::ordered_json to_json(const suites::Config& cfg);
bool operator==(const suites::Config& a, const suites::Config& b);

}  // namespace phsurgery::cli
