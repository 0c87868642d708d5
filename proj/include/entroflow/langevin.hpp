#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "entroflow/execution.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/perturbation.hpp"
#include "entroflow/potentials.hpp"
#include "entroflow/rng.hpp"

namespace entroflow {

enum class Direction : std::uint8_t { forward = 0, backward = 1 };

// Positions are stored path-major: positions[path * t_grid.size() + k].
// For backward ensembles t_grid holds backward times s, and horizon the flow's T.
struct PathEnsemble {
  std::size_t n_paths = 0;
  std::vector<double> t_grid;
  std::vector<double> positions;
  std::uint64_t seed = 0;
  Direction direction = Direction::forward;
  double horizon = 0.0;
  std::vector<std::uint8_t> exited;  // path left the grid domain

  double x(std::size_t path, std::size_t k) const { return positions[path * t_grid.size() + k]; }
  std::vector<double> marginal(std::size_t k, bool skip_exited = true) const;
  std::size_t n_exited() const;
};

using InitSampler = std::function<double(std::size_t path, const CounterRng& rng)>;

InitSampler point_sampler(double x0);
InitSampler gaussian_sampler(double mean, double std_dev);
InitSampler density_sampler(const GridDensity& p);

struct SimulationOptions {
  double dt_sim = 1e-3;
  // Paths leaving [x_min, x_max] are flagged; no check when absent.
  const Grid* domain = nullptr;
  Execution execution = Execution::parallel;
};

// Euler-Maruyama for dX = -(Psi' + beta)(X) dt + dW, recorded at t_grid by exact sub-step landing.
PathEnsemble simulate_forward(const Potential& pot, const Perturbation* beta, const InitSampler& init,
                              std::size_t n_paths, const std::vector<double>& t_grid, std::uint64_t seed,
                              const SimulationOptions& opts = {});

// Time-reversed diffusion started from p(T): drift (log p)'(T - s, x) + Psi'(x), recorded at
// backward times s = T - t for every flow snapshot time t.
PathEnsemble simulate_time_reversed(const Flow& flow, const Potential& pot, std::size_t n_paths, std::uint64_t seed,
                                    const SimulationOptions& opts = {});

// Backward drift at (t, x) from a flow; exposed for testing.
class FlowField;
double backward_drift(const FlowField& field, const Potential& pot, double t, double x, bool* ok = nullptr);

// Inverse-CDF samples from the piecewise-linear CDF of a grid density.
std::vector<double> sample_from_density(const GridDensity& p, std::size_t n, std::uint64_t seed);

void write_ensemble_csv(std::ostream& os, const PathEnsemble& e);
// Layout: "ENSF1", direction byte, two zero bytes, then little-endian u64 n_paths, u64 n_times,
// u64 seed, f64 horizon, f64 t_grid[n_times], f64 positions[n_paths * n_times], u8 exited[n_paths].
void write_ensemble_binary(std::ostream& os, const PathEnsemble& e);
PathEnsemble read_ensemble_binary(std::istream& is);

}  // namespace entroflow
