#pragma once

// Verification suites run by the command-line tool: each suite evaluates a
// list of named checks with thresholds, records measured constants, and keeps
// witnesses for failing checks. Suites are deterministic for a fixed config.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phsurgery::suites {

struct Samples {
  std::size_t commutation = 1000;
  std::size_t densities = 300;
  std::size_t transits = 1000;
  std::size_t lemma1 = 1000;
  std::size_t lemma1_reversed = 200;
  std::size_t lemma1_negative = 120;
  std::size_t lemma3 = 300;
  std::size_t chain = 200;
  std::size_t volume_probes = 1000;
  std::size_t moser_probes = 30;
  std::size_t moser_commutation = 10;
  std::size_t homogeneous = 100;
  std::size_t oracle = 20;
};

struct Tolerances {
  double commutation = 1e-7;
  double density = 1e-6;
  double distortion_factor = 2.0;
  double expansion = 0.05;
  double kappa = 1.0;
  double constant_factor = 2.0;
  double volume = 1e-10;
  double volume_control = 1e-3;
  double moser_identity = 1e-10;
  double moser_beta = 1e-9;
  double moser_transport = 1e-6;
  double moser_commutation = 1e-6;
  double moser_bracket = 1e-8;
  double group = 1e-10;
  double identity = 1e-9;
  double conjugation = 1e-9;
  double jacobian = 1e-5;
  double richardson = 1e-8;
};

struct Config {
  std::string suite = "all";
  std::vector<double> saddle_rates{-1.0, -1.0, 1.0, 1.0};
  std::vector<double> anosov_stable{-2.0};
  std::vector<double> anosov_unstable{2.0};
  std::optional<double> lambda;  ///< empty: exp(max stable rate)
  std::optional<double> mu;      ///< empty: exp(min unstable rate)
  std::optional<double> rho0;    ///< empty: midpoint of the feasible interval
  double negative_rho0 = 1.5;
  double delta = 0.1;
  std::vector<double> deltas{1e-1, 1e-2, 1e-3};
  std::vector<double> lemma3_deltas{0.1, 0.05, 0.02};
  double omega = 0.1;
  std::optional<double> alpha;   ///< empty: −(k−1)/k
  std::vector<int> n{2};
  std::uint64_t seed = 0;
  Samples samples;
  Tolerances tol;
};

struct Witness {
  std::string description;
  std::vector<double> point;
  double value = 0.0;
  double threshold = 0.0;
  double time = 0.0;
  int chart = -1;
};

struct Check {
  std::string name;
  std::string relation;  ///< one of < <= > >=
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  bool advisory = false;  ///< fails the run only under --strict
  std::vector<Witness> witnesses;
};

struct Constant {
  std::string name;
  std::string anchor;  ///< the quantity of the construction this measures
  double value = 0.0;
};

/// Flat table extracted to CSV.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;
  std::vector<Constant> constants;
  std::vector<Table> tables;
  std::map<std::string, double> seconds;  ///< wall time per stage; excluded from comparisons
  bool passed(bool strict = false) const;
  const Check* find(const std::string& check) const;
  const Constant* constant(const std::string& name) const;
};

/// Suite names in execution order (without "all").
const std::vector<std::string>& suite_names();

/// ρ₀ from the config, or the midpoint of the feasible interval.
double resolved_rho0(const Config& cfg);
double resolved_alpha(const Config& cfg);

SuiteResult verify_saddle(const Config& cfg);
SuiteResult verify_blowup(const Config& cfg);
SuiteResult verify_cones(const Config& cfg);
SuiteResult verify_volume(const Config& cfg);
SuiteResult verify_moser(const Config& cfg);
SuiteResult verify_homogeneous(const Config& cfg);

/// Dispatches by suite name; DomainError on an unknown name.
SuiteResult run(const std::string& suite, const Config& cfg);

}  // namespace phsurgery::suites
