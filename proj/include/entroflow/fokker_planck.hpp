#pragma once

#include <vector>

#include "entroflow/grid.hpp"
#include "entroflow/numerics.hpp"
#include "entroflow/perturbation.hpp"
#include "entroflow/potentials.hpp"

namespace entroflow {

// Finite-volume discretization of dp/dt = 1/2 p'' + ((Psi' + beta) p)' with
// exponentially fitted (Chang-Cooper) fluxes and zero flux at both ends.
// The discrete Gibbs state p_i ~ exp(-2 (Psi + B)(x_i)) is an exact null vector.
class FokkerPlanckOperator {
 public:
  FokkerPlanckOperator(const Potential& pot, const Grid& grid, const Perturbation* beta = nullptr);

  const Grid& grid() const { return grid_; }
  // Coefficients of dp_i/dt = lower_i p_{i-1} + diag_i p_i + upper_i p_{i+1}.
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& diag() const { return diag_; }
  const std::vector<double>& upper() const { return upper_; }

  std::vector<double> apply(const std::vector<double>& p) const;
  // Solves (I - dt L) out = in; throws StepFailure on a bad pivot or non-finite output.
  void backward_euler(const std::vector<double>& in, std::vector<double>& out, double dt) const;

 private:
  Grid grid_;
  std::vector<double> lower_, diag_, upper_;
};

// One backward-Euler step of length dt.
GridDensity step(const GridDensity& p, const Potential& pot, const Perturbation* beta, double dt);

struct SolverOptions {
  double dt_max = 1e-4;
};

// Integrates the flow from p0 and returns one snapshot per entry of t_grid (which
// must start at p0.time and be non-decreasing). Sub-steps land exactly on t_grid.
Flow solve_fokker_planck(const Potential& pot, const GridDensity& p0, const std::vector<double>& t_grid,
                         const SolverOptions& opts = {}, const Perturbation* beta = nullptr);

// max over interior cells and times of |d_t ell - ell''/2 + ell' Psi'| by centred differences,
// normalized by max |d_t ell|. Cells are restricted to where p exceeds support_fraction of its
// maximum on all three slices, since ell = p exp(2 Psi) carries no information in the far tails.
double backwards_kolmogorov_residual(const Flow& flow, const Potential& pot, double support_fraction = 1e-6);

// max |p^beta / p - 1| over the effective support of p at t0 + tau, and a linear fit
// against tau; both flows must hold snapshots at t0 + tau.
struct DeviationProfile {
  std::vector<double> tau;
  std::vector<double> deviation;
  LinearFit fit;
};

DeviationProfile ratio_deviation_profile(const Flow& base, const Flow& perturbed, double t0,
                                         const std::vector<double>& taus, double support_fraction = 1e-6);

// max over the effective support of p^beta / p and its reciprocal, over every common snapshot.
double ratio_bound(const Flow& base, const Flow& perturbed, double support_fraction = 1e-6);

// Bernoulli function z / (e^z - 1).
double bernoulli(double z);

// Index of the snapshot whose time equals t (to 1e-9 relative); throws if absent.
std::size_t snapshot_index(const Flow& flow, double t);

}  // namespace entroflow
