#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "entroflow/errors.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/perturbation.hpp"
#include "entroflow/potentials.hpp"

namespace entroflow::app {

struct InitialSpec {
  std::string kind = "gaussian";  // gaussian | mixture | file | gibbs
  double mean = 0.0;
  double std_dev = 1.0;
  std::vector<double> weights, means, std_devs;
  std::string path;
};

struct Policy {
  double slope_rel = 0.02;
  double w2_slope_rel = 0.02;
  double ratio_rel = 0.05;
  double steepest_rel = 0.03;
  double gap_floor = -1e-10;
  double ibp_abs = 1e-6;
  double collinear_abs = 1e-8;
  double mass_abs = 1e-10;
  double stationarity_rel = 1e-8;
  double closed_form_l1 = 1e-3;
  double bk_residual = 1e-2;
  double bk_halving = 0.6;
  double z_bin = 2.81;
  double z_max = 4.0;
  double max_fraction = 0.05;
  double qv_rel = 0.05;
  double mean_se = 3.0;
  double mean_rel = 0.01;
  double rate_aggregate = 0.07;
  double ratio_bin_rel = 0.10;
  double ratio_bin_floor = 0.01;
  double deviation_intercept = 1e-3;
  double hwi_slope_rel = 0.02;
  double convexity_c_ratio = 2.0;
  double taylor_rel = 1e-3;
  double ks_alpha = 0.01;
};

struct Config {
  int schema = 1;
  std::string scenario = "custom";
  std::string source;  // raw config text, hashed into the manifest
  std::filesystem::path base_dir;

  std::string potential = "quadratic";  // quadratic | double_well | free | polynomial
  double alpha = 1.0;
  std::vector<double> coefficients;
  InitialSpec initial;
  double x_min = -8.0;
  double x_max = 8.0;
  std::size_t cells = 4096;
  double T = 1.0;
  double dt_max = 1e-4;
  std::size_t snapshots = 101;
  std::vector<Bump> bumps;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<std::string> suites{"flow", "debruijn", "steepest", "martingale", "hwi", "reversal"};

  struct {
    bool solver_checks = true;
    double bk_t = 0.2;
    std::size_t bk_steps = 200;
  } flow;
  struct {
    std::vector<double> t0{0.2, 0.5, 1.0};
    std::vector<double> offsets{0.02, 0.01, 0.005};
  } debruijn;
  struct {
    double t0 = 0.5;
    std::vector<double> offsets{0.004, 0.002, 0.001};
    double dt_max = 1e-5;
    std::size_t random_bumps = 100;
    double collinear_lambda = 0.3;
  } steepest;
  struct {
    double T = 0.5;
    double dt_sim = 1e-3;
    std::size_t n_paths = 100000;
    double checkpoint_step = 0.05;
    double pair_step = 0.1;
    std::size_t bins = 20;
    bool negative_control = true;
    bool rate = true;
    double rate_t0 = 0.2;
    double rate_window = 0.008;
    std::size_t rate_paths = 2000000;
    double rate_dt_sim = 2.5e-4;
    std::size_t rate_bins = 10;
    Bump rate_bump{1.0, 1.0, 0.5};
  } martingale;
  struct {
    std::size_t pairs = 50;
    std::size_t profile_steps = 64;
    std::vector<double> offsets{0.1, 0.05, 0.025};
    double x_min = -8.0;
    double x_max = 8.0;
    std::size_t cells = 2048;
  } hwi;
  struct {
    double T = 0.5;
    std::size_t snapshots = 401;
    std::size_t n_paths = 20000;
    double dt_sim = 1e-3;
    std::size_t seeds = 5;
  } reversal;
  Policy policy;

  Grid grid() const { return Grid::make(x_min, x_max, cells); }
  Potential make_potential() const;
  GridDensity make_initial(const Grid& g) const;
};

// Throws ConfigError with a one-line message naming the offending field.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
void validate(const Config& cfg);

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> artifacts;
  double seconds = 0.0;

  bool pass() const;
  const Check* find(const std::string& name) const;
};

extern const std::vector<std::string> kSuites;

// Runs one suite, writing artifacts under out/<suite>/. Library errors propagate.
SuiteResult run_suite(const std::string& suite, const Config& cfg, const std::filesystem::path& out);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);
void write_manifest(const std::filesystem::path& out, const Config& cfg, const std::string& subcommand,
                    const std::vector<SuiteResult>& results);

}  // namespace entroflow::app
