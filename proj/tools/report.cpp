#include "report.hpp"

#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace phsurgery::cli {

using oj = nlohmann::ordered_json;

bool RunResult::passed() const {
  for (const auto& s : suites)
    if (!s.passed(strict)) return false;
  return true;
}

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

oj number(double v) { return std::isfinite(v) ? oj(v) : oj(shortest(v)); }

oj witness_json(const suites::Witness& w) {
  oj out;
  out["description"] = w.description;
  if (!w.point.empty()) out["point"] = w.point;
  out["value"] = number(w.value);
  out["threshold"] = number(w.threshold);
  out["time"] = number(w.time);
  if (w.chart >= 0) out["chart"] = w.chart;
  return out;
}

oj suite_json(const suites::SuiteResult& s, bool strict) {
  oj checks = oj::array();
  for (const auto& c : s.checks) {
    oj j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["value"] = number(c.value);
    j["relation"] = c.relation;
    j["threshold"] = number(c.threshold);
    if (c.advisory) j["advisory"] = true;
    if (!c.witnesses.empty()) {
      oj ws = oj::array();
      for (const auto& w : c.witnesses) ws.push_back(witness_json(w));
      j["witnesses"] = std::move(ws);
    }
    checks.push_back(std::move(j));
  }
  oj constants = oj::array();
  for (const auto& c : s.constants) constants.push_back({{"name", c.name}, {"anchor", c.anchor}, {"value", number(c.value)}});
  oj tables = oj::array();
  for (const auto& t : s.tables) {
    oj rows = oj::array();
    for (const auto& r : t.rows) {
      oj row = oj::array();
      for (double v : r) row.push_back(number(v));
      rows.push_back(std::move(row));
    }
    tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}});
  }
  oj out;
  out["name"] = s.name;
  out["passed"] = s.passed(strict);
  out["checks"] = std::move(checks);
  out["constants"] = std::move(constants);
  out["tables"] = std::move(tables);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

oj report_json(const RunResult& run) {
  oj out;
  out["schema"] = kReportSchema;
  out["subcommand"] = run.subcommand;
  out["strict"] = run.strict;
  out["passed"] = run.passed();
  out["config"] = to_json(run.config);
  oj suites = oj::array();
  std::size_t failed = 0, total = 0;
  for (const auto& s : run.suites) {
    suites.push_back(suite_json(s, run.strict));
    for (const auto& c : s.checks) {
      ++total;
      failed += !c.passed && (run.strict || !c.advisory);
    }
  }
  out["summary"] = {{"checks", total}, {"failed", failed}};
  out["suites"] = std::move(suites);
  oj timing;
  timing["total_seconds"] = run.total_seconds;
  for (const auto& s : run.suites) {
    oj stages;
    for (const auto& [k, v] : s.seconds) stages[k] = v;
    timing[s.name] = std::move(stages);
  }
  out["timing"] = std::move(timing);
  return out;
}

void write_csv(const RunResult& run, const std::filesystem::path& dir) {
  std::ofstream checks(dir / "checks.csv");
  checks << "suite,check,passed,value,relation,threshold,advisory,witnesses\n";
  std::ofstream constants(dir / "constants.csv");
  constants << "suite,name,anchor,value\n";
  for (const auto& s : run.suites) {
    for (const auto& c : s.checks)
      checks << s.name << ',' << c.name << ',' << (c.passed ? 1 : 0) << ',' << shortest(c.value) << ','
             << c.relation << ',' << shortest(c.threshold) << ',' << (c.advisory ? 1 : 0) << ',' << c.witnesses.size()
             << '\n';
    for (const auto& c : s.constants)
      constants << s.name << ',' << csv_field(c.name) << ',' << csv_field(c.anchor) << ',' << shortest(c.value) << '\n';
    for (const auto& t : s.tables) {
      std::ofstream out(dir / (t.name + ".csv"));
      for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
      out << '\n';
      for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << shortest(r[i]);
        out << '\n';
      }
    }
  }
}

}  // namespace phsurgery::cli
