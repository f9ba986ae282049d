#include "config.hpp"
#include "report.hpp"

#include "phsurgery/parallel.hpp"
#include "phsurgery/suites.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace phsurgery;

namespace {

void print_summary(const cli::RunResult& run) {
  for (const auto& s : run.suites) {
    std::size_t failed = 0;
    for (const auto& c : s.checks) failed += !c.passed && (run.strict || !c.advisory);
    std::cout << (s.passed(run.strict) ? "PASS " : "FAIL ") << s.name << " (" << s.checks.size() << " checks, "
              << failed << " failed)\n";
    for (const auto& c : s.checks) {
      if (c.passed) continue;
      std::cout << "  " << (c.advisory && !run.strict ? "warn " : "fail ") << c.name << ": "
                << cli::shortest(c.value) << " " << c.relation << " " << cli::shortest(c.threshold)
                << " does not hold";
      if (!c.witnesses.empty()) std::cout << "; witness: " << c.witnesses.front().description;
      std::cout << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of the blow-up and slow-down surgery constructions"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "phsurgery-out";
  bool csv = false;
  bool strict = false;
  app.add_option("--config", config_path, "JSON campaign config")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_dir, "directory for report.json and CSV extracts");
  app.add_flag("--csv", csv, "also write CSV extracts");
  app.add_flag("--strict", strict, "advisory checks also fail the run");

  std::vector<std::string> commands = suites::suite_names();
  commands.push_back("all");
  for (const auto& c : commands) app.add_subcommand(c, c == "all" ? "run every suite" : "run the " + c.substr(7) + " suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  cli::RunResult run;
  run.subcommand = sub;
  run.strict = strict;
  try {
    run.config = cli::load_config(config_path);
  } catch (const cli::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return 2;
  }
  if (seed) run.config.seed = *seed;

  std::cerr << "phsurgery " << sub << ": seed " << run.config.seed << ", " << thread_count() << " thread(s)\n";
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::vector<std::string> todo = sub == "all" ? suites::suite_names() : std::vector<std::string>{sub};
    for (const auto& s : todo) run.suites.push_back(suites::run(s, run.config));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  run.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path report = fs::path(out_dir) / "report.json";
  std::ofstream out(report);
  if (!out) {
    std::cerr << "error: cannot write " << report << '\n';
    return 1;
  }
  out << cli::report_json(run).dump(2) << '\n';
  if (csv) cli::write_csv(run, out_dir);

  print_summary(run);
  std::cout << (run.passed() ? "PASS" : "FAIL") << " " << sub << " -> " << report.string() << '\n';
  return run.passed() ? 0 : 1;
}
