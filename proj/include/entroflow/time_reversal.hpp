#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "entroflow/execution.hpp"
#include "entroflow/flow_field.hpp"
#include "entroflow/langevin.hpp"
#include "entroflow/perturbation.hpp"
#include "entroflow/potentials.hpp"

namespace entroflow {

struct ProcessOptions {
  const Perturbation* beta = nullptr;
  // Negative control: omit the <beta, 2 Psi'> - div beta integrand from F.
  bool drop_drift_correction = false;
  // Backward times s at which per-path values are kept; empty keeps every recorded time.
  std::vector<double> checkpoints;
  Execution execution = Execution::parallel;
};

// Backward processes along a forward ensemble on [t_grid.front(), T]. Arrays are indexed
// [k * n_paths + path] for checkpoint s_values[k]; accumulators run over every recorded time.
struct TrajectorialProcesses {
  std::size_t n_paths = 0;
  double horizon = 0.0;
  std::vector<double> s_values;
  std::vector<double> x;          // X(T - s)
  std::vector<double> log_l;      // log ell(T - s, X(T - s))
  std::vector<double> score;      // (log ell)'(T - s, X(T - s))
  std::vector<double> F;          // cumulative Fisher process from the right
  std::vector<double> M;          // candidate backward martingale
  std::vector<double> qv;         // sum of squared M increments up to s
  std::vector<double> qv_target;  // int_0^s |(log ell)'|^2 du
  std::vector<std::uint8_t> excluded;
  std::size_t n_excluded = 0;

  double at(const std::vector<double>& a, std::size_t k, std::size_t path) const { return a[k * n_paths + path]; }
  std::size_t checkpoint(double s) const;
};

TrajectorialProcesses build_processes(const PathEnsemble& ensemble, const Flow& flow, const Potential& pot,
                                      const ProcessOptions& opts = {});

struct MartingalePolicy {
  double z_bin = 2.81;
  double z_max = 4.0;
  double max_fraction = 0.05;
  std::size_t min_bin_count = 100;
};

struct BinStat {
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool merged = false;
};

struct PairReport {
  double s = 0.0;
  double s_prime = 0.0;
  std::vector<BinStat> bins;
};

struct MartingaleTestReport {
  std::vector<PairReport> pairs;
  std::size_t total_bins = 0;
  std::size_t bins_over = 0;
  double max_abs_z = 0.0;
  bool pass = false;
  std::vector<std::string> notes;
};

// Equal-probability bins of X(T - s); increments M(T - s') - M(T - s) per bin.
MartingaleTestReport martingale_test(const TrajectorialProcesses& proc,
                                     const std::vector<std::pair<double, double>>& s_pairs, std::size_t n_bins,
                                     const MartingalePolicy& policy = {});

struct QvResult {
  double empirical = 0.0;
  double target = 0.0;
  double relative_gap = 0.0;
};

QvResult quadratic_variation_test(const TrajectorialProcesses& proc, double s);

// Mean and standard error of a per-path quantity at checkpoint s.
struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
};
MeanEstimate process_mean(const TrajectorialProcesses& proc, const std::vector<double>& a, double s,
                          bool square = false);

enum class RateIdentity {
  unperturbed,            // paths under P, ell: target a^2 / 2
  perturbed_under_pbeta,  // paths under P^beta, ell^beta: a^2 / 2 - div beta + 2 beta Psi'
  perturbed_under_p,      // paths under P, ell^beta: a^2 / 2 - div beta - beta (log p)'
  ratio                   // log ell^beta - log ell over the offset: div beta + beta (log p)' at X(t0 + eps)
};

struct RateBin {
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::size_t count = 0;
  double target = 0.0;
  std::vector<double> deviation;  // per offset, measured - target
  double extrapolated = 0.0;      // Richardson-extrapolated deviation
};

struct RateTestReport {
  RateIdentity identity = RateIdentity::unperturbed;
  double t0 = 0.0;
  std::vector<double> offsets;
  std::vector<RateBin> bins;
  double aggregate = 0.0;  // sum w |dev| / sum w |target|
  double max_target = 0.0;
};

// The ensemble must start at t0 and record t0 + offsets. field is ell for the unperturbed
// identity and ell^beta otherwise; base is the unperturbed field (needed except for unperturbed).
RateTestReport trajectorial_rate_test(const PathEnsemble& ensemble, const FlowField& field, const FlowField* base,
                                      const Potential& pot, const Perturbation* beta, RateIdentity identity,
                                      double t0, const std::vector<double>& offsets, std::size_t n_bins);

std::string rate_identity_name(RateIdentity id);

void write_martingale_json(std::ostream& os, const MartingaleTestReport& r);
void write_martingale_csv(std::ostream& os, const MartingaleTestReport& r);

}  // namespace entroflow
