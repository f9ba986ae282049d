// Acceptance run: executes `phsurgery all --seed 42` twice with the given
// config, then checks criteria 1-10 against the pinned tolerances using the
// first report, and compares the two reports for determinism.
//
// usage: acceptance <phsurgery-exe> <config.json> <work-dir> [--allow-fail N]...
// Exit status is 0 when every criterion passes or fails only among the
// allowed ones; the PASS/FAIL lines are printed either way.

#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Report {
  int exit_code = -1;
  json doc;
};

Report run_all(const std::string& exe, const std::string& cfg, const fs::path& out) {
  fs::remove_all(out);
  const std::string cmd = "\"" + exe + "\" all --config \"" + cfg + "\" --seed 42 --out \"" + out.string() + "\"";
  std::cout << "$ " << cmd << std::endl;
  const int status = std::system(cmd.c_str());
  Report r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out / "report.json");
  if (in) r.doc = json::parse(in);
  return r;
}

class Criteria {
 public:
  explicit Criteria(const json& doc) : doc_(doc) {}

  const json* check(const std::string& name) const {
    for (const auto& s : doc_["suites"])
      for (const auto& c : s["checks"])
        if (c["name"] == name) return &c;
    return nullptr;
  }
  double value(const std::string& name) const {
    const json* c = check(name);
    return c && (*c)["value"].is_number() ? (*c)["value"].get<double>() : NAN;
  }
  double constant(const std::string& name) const {
    for (const auto& s : doc_["suites"])
      for (const auto& c : s["constants"])
        if (c["name"] == name && c["value"].is_number()) return c["value"].get<double>();
    return NAN;
  }
  double seconds(const std::string& suite, const std::string& stage = "") const {
    const json& t = doc_["timing"];
    if (!t.contains(suite)) return NAN;
    if (!stage.empty()) return t[suite].contains(stage) ? t[suite][stage].get<double>() : NAN;
    double sum = 0.0;
    for (const auto& [k, v] : t[suite].items()) sum += v.get<double>();
    return sum;
  }
  const json& config() const { return doc_["config"]; }

  // Records one requirement of the current criterion.
  void need(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void less(const std::string& name, double thr) {
    const double v = value(name);
    need(v < thr, name + " = " + fmt(v) + " (need < " + fmt(thr) + ")");
  }
  void at_least(const std::string& name, double thr) {
    const double v = value(name);
    need(v >= thr, name + " = " + fmt(v) + " (need >= " + fmt(thr) + ")");
  }
  void passed(const std::string& name) {
    const json* c = check(name);
    need(c && (*c)["passed"].get<bool>(), name + (c ? " failed" : " missing"));
  }
  std::vector<std::string> take() { return std::exchange(failures_, {}); }

  static std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
  }

 private:
  const json& doc_;
  std::vector<std::string> failures_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::cerr << "usage: acceptance <phsurgery-exe> <config.json> <work-dir> [--allow-fail N]...\n";
    return 2;
  }
  const std::string exe = argv[1], cfg = argv[2];
  const fs::path work = argv[3];
  std::set<int> allowed;
  for (int i = 4; i + 1 < argc; i += 2)
    if (std::string(argv[i]) == "--allow-fail") allowed.insert(std::atoi(argv[i + 1]));
  fs::create_directories(work);

  const Report a = run_all(exe, cfg, work / "run1");
  const Report b = run_all(exe, cfg, work / "run2");
  if (a.doc.is_null() || b.doc.is_null()) {
    std::cerr << "no report produced (exit codes " << a.exit_code << ", " << b.exit_code << ")\n";
    return 1;
  }
  Criteria c(a.doc);
  std::vector<std::pair<std::string, std::vector<std::string>>> results;
  auto finish = [&](const std::string& title) { results.emplace_back(title, c.take()); };

  // 1
  c.less("blowup.commutation", 1e-7);
  c.need(c.config()["samples"]["commutation"].get<int>() >= 1000, "fewer than 1000 commutation samples");
  c.need(c.seconds("blowup", "commutation") < 30.0, "commutation runtime " + Criteria::fmt(c.seconds("blowup", "commutation")) + " s");
  finish("blow-down commutation");

  // 2
  c.less("volume.rho_lemma", 1e-10);
  c.at_least("volume.negative_control", 1e-3);
  c.need(c.value("volume.annulus_probes") > 0, "no probes in the annulus");
  c.need(c.config()["samples"]["volume_probes"].get<int>() >= 1000, "fewer than 1000 volume probes");
  finish("volume lemma");

  // 3
  c.less("blowup.pullback_density", 1e-6);
  c.less("blowup.kl_density", 1e-6);
  c.less("blowup.kl_density_formula", 1e-6);
  for (int k = 2; k <= 4; ++k) {
    const std::string name = "blowup.kl_density_box_min[k=" + std::to_string(k) + "]";
    const double v = c.constant(name);
    c.need(v > 0.05, name + " = " + Criteria::fmt(v) + " (need > 0.05)");
  }
  finish("density formulas");

  // 4
  {
    const auto& deltas = c.config()["model"]["deltas"];
    c.need(deltas == json::array({1e-1, 1e-2, 1e-3}), "delta sweep is not {1e-1, 1e-2, 1e-3}");
    c.need(c.config()["samples"]["transits"].get<int>() >= 1000, "fewer than 1000 transits per delta");
    c.less("saddle.transit.c5_factor", 2.0);
    for (double d : {1e-1, 1e-2, 1e-3}) {
      std::ostringstream key;
      key << "saddle.transit_time_mean[delta=" << d << "]";
      c.need(std::isfinite(c.constant(key.str())), key.str() + " not reported");
    }
    c.need(c.seconds("saddle", "transit") < 300.0, "transit sweep runtime");
  }
  finish("transit distortion uniformity");

  // 5
  c.at_least("cones.lemma1.expansion", 2.0 - 0.05);
  c.need(c.constant("cones.lemma1.kappa_meas") > 1.0, "kappa_meas <= 1");
  c.passed("cones.lemma1.u_invariance");
  c.passed("cones.lemma1.cs_invariance");
  c.passed("cones.lemma1_reversed");
  c.passed("cones.lemma1.negative_control");
  c.need(c.config()["model"]["omega"].get<double>() == 0.1, "omega is not 0.1");
  c.need(c.constant("saddle.rho0") == 0.5, "rho0 is not 0.5");
  finish("inner cone campaign");

  // 6
  c.less("cones.lemma3.c6_factor", 2.0);
  c.less("cones.lemma3.c7_factor", 2.0);
  c.passed("cones.lemma3.classes_exercised");
  finish("annulus cone constants");

  // 7
  c.less("moser.eta0_primitive", 1e-10);
  c.less("moser.eta0_invariant", 1e-10);
  c.less("moser.beta_invariance", 1e-9);
  c.less("moser.transport", 1e-6);
  c.less("moser.commutation", 1e-6);
  c.less("moser.bracket", 1e-8);
  finish("Moser suite");

  // 8
  for (int n : {2, 3, 4}) {
    const std::string p = "homogeneous.n" + std::to_string(n) + ".";
    c.need(c.check(p + "algebra") != nullptr, "n = " + std::to_string(n) + " not run");
    c.less(p + "algebra", 1e-10);
    c.less(p + "group", 1e-10);
    c.less(p + "conj_identity", 1e-9);
    c.less(p + "product_form", 1e-9);
    c.less(p + "horocycle_scaling", 1e-10);
    c.at_least(p + "diffeo_rank", n * n + 2 * n);
    c.less(p + "conjugation", 1e-9);
  }
  c.need(c.seconds("homogeneous") < 60.0, "homogeneous runtime");
  finish("homogeneous suite");

  // 9
  {
    int jac = 0, rich = 0;
    for (const auto& s : a.doc["suites"])
      for (const auto& ch : s["checks"]) {
        const std::string name = ch["name"];
        auto ends = [&](const std::string& suf) {
          return name.size() > suf.size() && name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
        };
        if (ends(".jacobian_fd")) {
          ++jac;
          c.less(name, 1e-5);
        } else if (ends(".richardson")) {
          ++rich;
          c.less(name, 1e-8);
        }
      }
    c.need(jac >= 4 && rich >= 3, "oracle checks missing");
  }
  finish("oracle equivalence");

  // 10
  {
    json x = a.doc, y = b.doc;
    x.erase("timing");
    y.erase("timing");
    c.need(x.dump() == y.dump(), "reports differ outside the timing fields");
    c.need(a.exit_code == b.exit_code, "exit codes differ");
  }
  finish("determinism");

  bool ok = true;
  std::cout << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const bool pass = results[i].second.empty();
    std::cout << (pass ? "PASS" : "FAIL") << " " << id << " " << results[i].first;
    if (!pass && allowed.count(id)) std::cout << " (known, allowed)";
    std::cout << "\n";
    for (const auto& f : results[i].second) std::cout << "     " << f << "\n";
    if (!pass && !allowed.count(id)) ok = false;
  }
  std::cout << "phsurgery all exit code: " << a.exit_code << "\n";
  return ok ? 0 : 1;
}
