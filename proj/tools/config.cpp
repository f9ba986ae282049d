#include "config.hpp"

#include "phsurgery/blowup.hpp"
#include "phsurgery/errors.hpp"
#include "phsurgery/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace phsurgery::cli {

using json = nlohmann::json;
using suites::Config;

#define PHS_SAMPLE_FIELDS(X)                                                                              \
  X(commutation) X(densities) X(transits) X(lemma1) X(lemma1_reversed) X(lemma1_negative) X(lemma3) X(chain) \
      X(volume_probes) X(moser_probes) X(moser_commutation) X(homogeneous) X(oracle)

#define PHS_TOLERANCE_FIELDS(X)                                                                                  \
  X(commutation) X(density) X(distortion_factor) X(expansion) X(kappa) X(constant_factor) X(volume)              \
      X(volume_control) X(moser_identity) X(moser_beta) X(moser_transport) X(moser_commutation) X(moser_bracket) \
          X(group) X(identity) X(conjugation) X(jacobian) X(richardson)

ConfigError::ConfigError(std::string field, int line, int column, const std::string& message)
    : std::runtime_error([&] {
        std::ostringstream m;
        if (line > 0) m << "line " << line << (column > 0 ? ":" + std::to_string(column) : "") << ": ";
        if (!field.empty()) m << "field '" << field << "': ";
        m << message;
        return m.str();
      }()),
      field_(std::move(field)),
      line_(line),
      column_(column) {}

namespace {

// Line of the key at a dotted path, found by scanning the text for each
// segment in turn; 0 when the key does not appear.
int locate(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::stringstream ss(path);
  std::string seg;
  while (std::getline(ss, seg, '.')) {
    seg = seg.substr(0, seg.find('['));
    const std::string quoted = "\"" + seg + "\"";
    std::size_t at = pos;
    while (true) {
      at = text.find(quoted, at);
      if (at == std::string::npos) return 0;
      std::size_t after = at + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at += quoted.size();
    }
    pos = at;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ConfigError(path, locate(text_, path), 0, msg);
  }

  void only(const json& obj, const std::string& prefix, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(prefix, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) fail(join(prefix, k), "unknown field");
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
  }

  double positive(const json& v, const std::string& path) const {
    const double d = number(v, path);
    if (!(d > 0.0)) fail(path, "must be positive");
    return d;
  }

  std::optional<double> auto_or_number(const json& v, const std::string& path) const {
    if (v.is_string()) {
      if (v.get<std::string>() == "auto") return std::nullopt;
      fail(path, "expected a number or \"auto\"");
    }
    return number(v, path);
  }

  std::size_t count(const json& v, const std::string& path) const {
    if (!v.is_number_integer() || v.get<long long>() < 1) fail(path, "expected a positive integer");
    return v.get<std::size_t>();
  }

  std::vector<double> numbers(const json& v, const std::string& path) const {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  static std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

 private:
  const std::string& text_;
};

void validate_delta(const Reader& r, double d, const std::string& path) {
  if (!(d > 0.0 && d <= 0.5)) r.fail(path, "delta must lie in (0, 0.5]");
}

}  // namespace

Config parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto begin = text.begin();
    const int line = 1 + static_cast<int>(std::count(begin, begin + static_cast<std::ptrdiff_t>(byte ? byte - 1 : 0), '\n'));
    const std::size_t nl = byte ? text.rfind('\n', byte - 1) : std::string::npos;
    const int column = static_cast<int>(nl == std::string::npos ? byte : byte - nl - 1);
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError("", line, column, msg);
  }

  const Reader r(text);
  Config cfg;
  r.only(doc, "", {"schema_version", "suite", "seed", "model", "samples", "tolerances"});

  if (doc.contains("schema_version")) {
    const auto& v = doc["schema_version"];
    if (!v.is_number_integer() || v.get<int>() != kConfigSchema)
      r.fail("schema_version", "unsupported schema version (expected " + std::to_string(kConfigSchema) + ")");
  }
  if (doc.contains("suite")) {
    const auto& v = doc["suite"];
    if (!v.is_string()) r.fail("suite", "expected a string");
    const auto names = suites::suite_names();
    const std::string s = v.get<std::string>();
    if (s != "all" && std::find(names.begin(), names.end(), s) == names.end()) r.fail("suite", "unknown suite '" + s + "'");
    cfg.suite = s;
  }
  if (doc.contains("seed")) {
    const auto& v = doc["seed"];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      r.fail("seed", "expected a non-negative integer");
    cfg.seed = v.get<std::uint64_t>();
  }

  if (doc.contains("model")) {
    const json& m = doc["model"];
    r.only(m, "model",
           {"saddle_rates", "anosov_stable", "anosov_unstable", "lambda", "mu", "rho0", "negative_rho0", "delta",
            "deltas", "lemma3_deltas", "omega", "alpha", "n"});
    if (m.contains("saddle_rates")) {
      cfg.saddle_rates = r.numbers(m["saddle_rates"], "model.saddle_rates");
      if (cfg.saddle_rates.size() < 2 || cfg.saddle_rates.size() > 6)
        r.fail("model.saddle_rates", "the saddle dimension k must lie in 2..6");
    }
    if (m.contains("anosov_stable")) cfg.anosov_stable = r.numbers(m["anosov_stable"], "model.anosov_stable");
    if (m.contains("anosov_unstable")) cfg.anosov_unstable = r.numbers(m["anosov_unstable"], "model.anosov_unstable");
    if (m.contains("lambda")) cfg.lambda = r.auto_or_number(m["lambda"], "model.lambda");
    if (m.contains("mu")) cfg.mu = r.auto_or_number(m["mu"], "model.mu");
    if (m.contains("rho0")) {
      cfg.rho0 = r.auto_or_number(m["rho0"], "model.rho0");
      if (cfg.rho0 && !(*cfg.rho0 > 0.0)) r.fail("model.rho0", "must be positive");
    }
    if (m.contains("negative_rho0")) cfg.negative_rho0 = r.positive(m["negative_rho0"], "model.negative_rho0");
    if (m.contains("delta")) {
      cfg.delta = r.number(m["delta"], "model.delta");
      validate_delta(r, cfg.delta, "model.delta");
    }
    for (const char* key : {"deltas", "lemma3_deltas"})
      if (m.contains(key)) {
        const std::string path = std::string("model.") + key;
        auto v = r.numbers(m[key], path);
        for (double d : v) validate_delta(r, d, path);
        (std::string(key) == "deltas" ? cfg.deltas : cfg.lemma3_deltas) = std::move(v);
      }
    if (m.contains("omega")) {
      cfg.omega = r.number(m["omega"], "model.omega");
      if (!(cfg.omega > 0.0 && cfg.omega < std::atan(1.0))) r.fail("model.omega", "must lie in (0, pi/4)");
    }
    if (m.contains("alpha")) cfg.alpha = r.auto_or_number(m["alpha"], "model.alpha");
    if (m.contains("n")) {
      const json& v = m["n"];
      std::vector<int> ns;
      if (v.is_array()) {
        if (v.empty()) r.fail("model.n", "expected a nonempty array");
        for (const auto& e : v) {
          if (!e.is_number_integer()) r.fail("model.n", "expected integers");
          ns.push_back(e.get<int>());
        }
      } else if (v.is_number_integer()) {
        ns.push_back(v.get<int>());
      } else {
        r.fail("model.n", "expected an integer or an array of integers");
      }
      for (int n : ns)
        if (n < 2 || n > 6) r.fail("model.n", "n must lie in 2..6");
      cfg.n = ns;
    }
  }

  if (doc.contains("samples")) {
    const json& s = doc["samples"];
#define PHS_KEY(f) #f,
    r.only(s, "samples", {PHS_SAMPLE_FIELDS(PHS_KEY)});
#define PHS_READ(f) \
  if (s.contains(#f)) cfg.samples.f = r.count(s[#f], "samples." #f);
    PHS_SAMPLE_FIELDS(PHS_READ)
#undef PHS_READ
  }
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    r.only(t, "tolerances", {PHS_TOLERANCE_FIELDS(PHS_KEY)});
#undef PHS_KEY
#define PHS_READ(f) \
  if (t.contains(#f)) cfg.tol.f = r.positive(t[#f], "tolerances." #f);
    PHS_TOLERANCE_FIELDS(PHS_READ)
#undef PHS_READ
  }

  // Model-level consistency, reported against the field that carries it.
  try {
    saddle::SaddleSpec spec(cfg.saddle_rates);
  } catch (const DomainError& e) {
    r.fail("model.saddle_rates", e.what());
  }
  try {
    const double smax = *std::max_element(cfg.anosov_stable.begin(), cfg.anosov_stable.end());
    const double umin = *std::min_element(cfg.anosov_unstable.begin(), cfg.anosov_unstable.end());
    saddle::AnosovModel(cfg.anosov_stable, cfg.anosov_unstable, cfg.lambda.value_or(std::exp(smax)),
                        cfg.mu.value_or(std::exp(umin)));
  } catch (const DomainError& e) {
    r.fail(cfg.lambda || cfg.mu ? "model.lambda" : "model.anosov_stable", e.what());
  }
  try {
    suites::resolved_rho0(cfg);
  } catch (const DomainError& e) {
    r.fail("model.rho0", e.what());
  }
  try {
    blowup::KLStructure(static_cast<int>(cfg.saddle_rates.size()), suites::resolved_alpha(cfg));
  } catch (const DomainError& e) {
    r.fail("model.alpha", e.what());
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, 0, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

nlohmann::ordered_json to_json(const Config& cfg) {
  using oj = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? oj(*v) : oj("auto"); };
  oj model;
  model["saddle_rates"] = cfg.saddle_rates;
  model["anosov_stable"] = cfg.anosov_stable;
  model["anosov_unstable"] = cfg.anosov_unstable;
  model["lambda"] = opt(cfg.lambda);
  model["mu"] = opt(cfg.mu);
  model["rho0"] = opt(cfg.rho0);
  model["negative_rho0"] = cfg.negative_rho0;
  model["delta"] = cfg.delta;
  model["deltas"] = cfg.deltas;
  model["lemma3_deltas"] = cfg.lemma3_deltas;
  model["omega"] = cfg.omega;
  model["alpha"] = opt(cfg.alpha);
  model["n"] = cfg.n;
  oj samples, tol;
#define PHS_WRITE(f) samples[#f] = cfg.samples.f;
  PHS_SAMPLE_FIELDS(PHS_WRITE)
#undef PHS_WRITE
#define PHS_WRITE(f) tol[#f] = cfg.tol.f;
  PHS_TOLERANCE_FIELDS(PHS_WRITE)
#undef PHS_WRITE
  oj out;
  out["schema_version"] = kConfigSchema;
  out["suite"] = cfg.suite;
  out["seed"] = cfg.seed;
  out["model"] = std::move(model);
  out["samples"] = std::move(samples);
  out["tolerances"] = std::move(tol);
  return out;
}

bool operator==(const Config& a, const Config& b) {
  bool same = a.suite == b.suite && a.saddle_rates == b.saddle_rates && a.anosov_stable == b.anosov_stable &&
              a.anosov_unstable == b.anosov_unstable && a.lambda == b.lambda && a.mu == b.mu && a.rho0 == b.rho0 &&
              a.negative_rho0 == b.negative_rho0 && a.delta == b.delta && a.deltas == b.deltas &&
              a.lemma3_deltas == b.lemma3_deltas && a.omega == b.omega && a.alpha == b.alpha && a.n == b.n &&
              a.seed == b.seed;
#define PHS_EQ(f) same = same && a.samples.f == b.samples.f;
  PHS_SAMPLE_FIELDS(PHS_EQ)
#undef PHS_EQ
#define PHS_EQ(f) same = same && a.tol.f == b.tol.f;
  PHS_TOLERANCE_FIELDS(PHS_EQ)
#undef PHS_EQ
  return same;
}

}  // namespace phsurgery::cli
