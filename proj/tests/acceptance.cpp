#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "entroflow/errors.hpp"
#include "entroflow/execution.hpp"
#include "experiment.hpp"

using namespace entroflow;
using namespace entroflow::app;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = ENTROFLOW_CONFIG_DIR;
const fs::path kWork = ENTROFLOW_ACCEPT_DIR;

int failures = 0;

void report(const std::string& id, bool pass, const std::string& what) {
  std::printf("%s %s %s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

struct Run {
  SuiteResult res;
  std::string error;
};

Run run(const std::string& preset, const std::string& suite) {
  Run r;
  try {
    const Config cfg = load_config(kConfigs / (preset + ".toml"));
    r.res = run_suite(suite, cfg, kWork / preset);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

// All named checks present and passing; summary lists each value against its threshold.
bool all_pass(const SuiteResult& r, std::initializer_list<const char*> names, std::string& summary) {
  bool ok = true;
  for (const char* n : names) {
    const Check* c = r.find(n);
    if (!c) {
      summary += std::string(" ") + n + "=missing";
      ok = false;
      continue;
    }
    summary += " " + c->name + "=" + num(c->value) + "/" + num(c->threshold);
    ok = ok && c->pass;
  }
  return ok;
}

// Every check whose name starts with prefix passes; returns the worst value.
bool prefix_pass(const SuiteResult& r, const std::string& prefix, double& worst, std::size_t& count) {
  bool ok = true;
  worst = 0.0;
  count = 0;
  for (const auto& c : r.checks) {
    if (c.name.rfind(prefix, 0) != 0) continue;
    ++count;
    ok = ok && c.pass;
    worst = std::max(worst, c.value);
  }
  return ok && count > 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

int main() {
  configure_threads_from_env();
  fs::remove_all(kWork);

  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run("ou", "debruijn");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double worst = 0.0;
    std::size_t n = 0;
    const bool ok = r.error.empty() && prefix_pass(r.res, "entropy_slope", worst, n) && n == 3;
    report("AC1", ok && secs <= 60.0,
           "de Bruijn: worst |dH/dt + I/2| / (I/2) = " + num(worst) + " over " + std::to_string(n) +
               " times (tol 0.02), " + num(secs) + " s (limit 60 s)" + r.error);
    double w_w2 = 0.0, w_ratio = 0.0;
    std::size_t n_w2 = 0, n_ratio = 0;
    const bool ok2 = r.error.empty() && prefix_pass(r.res, "w2_slope", w_w2, n_w2) &&
                     prefix_pass(r.res, "ratio", w_ratio, n_ratio) && n_w2 == 3 && n_ratio == 3;
    report("AC2", ok2,
           "Wasserstein slope: worst rel " + num(w_w2) + " (tol 0.02), ratio worst rel " + num(w_ratio) +
               " (tol 0.05)" + r.error);
  }
  {
    const auto r = run("double_well", "steepest");
    std::string s;
    const bool ok = r.error.empty() && all_pass(r.res,
                                                {"perturbed_entropy_slope", "perturbed_w2_slope", "gap_nonnegative",
                                                 "random_bump_gaps", "integration_by_parts"},
                                                s);
    report("AC3", ok, "steepest descent (double well):" + s + r.error);
  }
  {
    const auto r = run("ou", "martingale");
    std::string s4, s5;
    const bool ok4 = r.error.empty() && all_pass(r.res,
                                                 {"martingale", "quadratic_variation", "mean_F0",
                                                  "negative_control_rejected"},
                                                 s4);
    report("AC4", ok4 && r.res.seconds <= 300.0,
           "trajectorial martingale:" + s4 + ", suite " + num(r.res.seconds) + " s (limit 300 s)" + r.error);
    const bool ok5 = r.error.empty() && all_pass(r.res,
                                                 {"rate unperturbed", "rate perturbed_under_pbeta",
                                                  "rate perturbed_under_p", "rate ratio_binwise",
                                                  "deviation_intercept"},
                                                 s5);
    report("AC5", ok5, "perturbed trajectorial suite:" + s5 + r.error);
  }
  {
    const auto r = run("ou", "reversal");
    double worst = 0.0;
    std::size_t n = 0;
    const bool ok = r.error.empty() && prefix_pass(r.res, "ks", worst, n) && n == 5;
    report("AC6", ok,
           "time reversal: " + std::to_string(n) + " seeds, worst KS " + num(worst) + " at alpha 0.01" + r.error);
  }
  {
    bool ok = true;
    std::string s;
    for (const char* preset : {"ou", "double_well", "free"}) {
      const auto r = run(preset, "hwi");
      if (!r.error.empty()) {
        ok = false;
        s += std::string(" ") + preset + ": " + r.error;
        continue;
      }
      std::string part;
      ok = all_pass(r.res, {"hwi_violations", "sharp_not_looser", "geodesic_slope", "convexity", "taylor"}, part) &&
           ok;
      std::string gen;
      all_pass(r.res, {"hwi_violations_2kappa", "convexity_2kappa"}, gen);
      s += std::string(" [") + preset + ":" + part + "; with 2 kappa:" + gen + "]";
    }
    report("AC7", ok, "HWI, 50 pairs per potential:" + s);
  }
  {
    const auto r = run("ou", "flow");
    std::string s;
    const bool ok = r.error.empty() && all_pass(r.res,
                                                {"mass_per_step", "gibbs_stationarity", "closed_form_l1",
                                                 "bk_residual", "bk_halving"},
                                                s);
    report("AC8", ok, "solver quality:" + s + r.error);
  }
  {
    const int oracle_rc = shell(std::string("\"") + ENTROFLOW_ORACLE + "\" \"" + ENTROFLOW_FIXTURE_DIR +
                                "/oracle.json\" \"" + (kWork / "oracle_regenerated.json").string() + "\" > /dev/null");
    const fs::path a = kWork / "repro_a", b = kWork / "repro_b";
    int rc_a = -1, rc_b = -1;
    for (auto [dir, rc] : {std::pair{a, &rc_a}, std::pair{b, &rc_b}})
      *rc = shell(std::string("\"") + ENTROFLOW_CLI + "\" all --config \"" + ENTROFLOW_REPRO_CONFIG + "\" --out \"" +
                  dir.string() + "\" > /dev/null");
    std::size_t files = 0, differing = 0;
    const std::regex stamp("\"timestamp\": \"[^\"]*\"");
    if (fs::exists(a)) {
      for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a);
        std::string x = slurp(e.path()), y = fs::exists(b / rel) ? slurp(b / rel) : std::string("\x01missing");
        if (rel == "manifest.json") {
          x = std::regex_replace(x, stamp, "");
          y = std::regex_replace(y, stamp, "");
        }
        ++files;
        if (x != y) ++differing;
      }
    }
    const bool ok = oracle_rc == 0 && rc_a <= 1 && rc_b <= 1 && files >= 5 && differing == 0;
    report("AC9", ok,
           "reproducibility: oracle exit " + std::to_string(oracle_rc) + ", " + std::to_string(files) +
               " artifacts compared, " + std::to_string(differing) + " differ");
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
