#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entroflow/execution.hpp"
#include "experiment.hpp"

namespace {

using namespace entroflow;
using namespace entroflow::app;

int run(const std::string& subcommand, const std::string& config_path, const std::string& out_override,
        std::optional<std::uint64_t> seed, bool strict) {
  Config cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  const std::filesystem::path out = out_override.empty() ? std::filesystem::path(cfg.out_dir) : std::filesystem::path(out_override);
  std::filesystem::create_directories(out);
  configure_threads_from_env();

  const std::vector<std::string> suites = subcommand == "all" ? cfg.suites : std::vector<std::string>{subcommand};
  std::vector<SuiteResult> results;
  bool pass = true, warned = false;
  for (const auto& s : suites) {
    results.push_back(run_suite(s, cfg, out));
    const auto& r = results.back();
    for (const auto& c : r.checks) {
      std::printf("%s %s/%s value=%.6g threshold=%.6g%s%s\n", c.pass ? "PASS" : "FAIL", s.c_str(), c.name.c_str(),
                  c.value, c.threshold, c.detail.empty() ? "" : " ", c.detail.c_str());
    }
    for (const auto& w : r.warnings) std::printf("WARN %s %s\n", s.c_str(), w.c_str());
    std::printf("suite %s: %s (%.1f s)\n", s.c_str(), r.pass() ? "pass" : "fail", r.seconds);
    std::fflush(stdout);
    pass = pass && r.pass();
    warned = warned || !r.warnings.empty();
  }
  write_manifest(out, cfg, subcommand, results);
  if (!pass) return 1;
  if (strict && warned) {
    std::printf("FAIL warnings present under --strict\n");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for entropy dissipation along Fokker-Planck flows"};
  app.require_subcommand(1, 1);
  std::string config, out;
  std::uint64_t seed = 0;
  bool strict = false;
  std::vector<std::string> names(kSuites);
  names.push_back("all");
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n, n == "all" ? "Run every suite listed in the config" : "Run the " + n + " suite");
    sub->add_option("--config", config, "TOML configuration file")->required();
    sub->add_option("--out", out, "Output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_flag("--strict", strict, "Treat warnings as failures");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const auto* sub = app.get_subcommands().front();
  std::optional<std::uint64_t> seed_override;
  if (sub->count("--seed")) seed_override = seed;
  try {
    return run(sub->get_name(), config, out, seed_override, strict);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
