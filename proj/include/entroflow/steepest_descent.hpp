#pragma once

#include <iosfwd>
#include <vector>

#include "entroflow/fokker_planck.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/perturbation.hpp"
#include "entroflow/potentials.hpp"
#include "entroflow/rng.hpp"
#include "entroflow/wasserstein.hpp"

namespace entroflow {

// a = (log ell)'(t0, .), b = beta at cell centres; pairings are weighted by p(t0, .).
struct AbVectors {
  std::vector<double> a;
  std::vector<double> b;
};

AbVectors compute_ab(const GridDensity& p_t0, const LikelihoodField& field, const Perturbation* beta);

struct SlopeReport {
  double a_norm2 = 0.0;
  double inner = 0.0;     // <a, a + 2b>
  double ab_inner = 0.0;  // <a, b>
  double w2_slope_pert = 0.0;
  double entropy_slope_pert = 0.0;
  double entropy_slope = 0.0;  // unperturbed, -|a|^2 / 2
  double w2_slope = 0.0;       // unperturbed, |a| / 2
  double gap = 0.0;
  bool degenerate = false;

  bool has_empirical = false;
  double emp_entropy_slope_pert = 0.0;
  double emp_w2_slope_pert = 0.0;
  double emp_entropy_slope = 0.0;
  double emp_w2_slope = 0.0;
  double emp_gap = 0.0;  // unperturbed minus perturbed slope ratio
  SlopeEstimate entropy_pert_detail;
  SlopeEstimate entropy_detail;
  SlopeTable w2_pert_detail;
  SlopeTable w2_detail;
};

SlopeReport analytic_slopes(const GridDensity& p_t0, const AbVectors& ab);

// Runs perturbed and unperturbed flows from the common p(t0) and fills the empirical block
// with right-sided quotients extrapolated over offsets.
void empirical_slopes(const Potential& pot, const Perturbation& beta, const GridDensity& p_t0,
                      const std::vector<double>& offsets, const SolverOptions& solver, SlopeReport& report);

struct IbpResult {
  double lhs = 0.0;  // int (div beta - 2 beta Psi') p
  double rhs = 0.0;  // -int a b p
  double gap = 0.0;
};

IbpResult integration_by_parts_check(const GridDensity& p_t0, const Perturbation& beta, const Potential& pot,
                                     const GibbsReference& ref);

// p-weighted least-squares fit of sum_k c_k B_k' to lam * a, with bumps of the given width
// centred on a lattice of spacing width / 16 over the central mass_fraction of p; lam != 0.
struct CollinearFit {
  Perturbation beta;
  std::vector<double> b;
  std::vector<double> a_restricted;  // a on the union of the bump supports, 0 elsewhere
  std::vector<double> a_projected;   // b / lam, the bump-representable part of a
  double residual = 0.0;             // |b - lam a_restricted|_{L2(p)}
};

CollinearFit fit_collinear_bumps(const GridDensity& p_t0, const std::vector<double>& a, double lam, double width,
                                 double mass_fraction = 1.0 - 1e-8);

// Bump with centre, width and amplitude drawn from the given ranges.
Bump random_bump(const CounterRng& rng, std::uint64_t index, double c_lo, double c_hi, double w_lo, double w_hi,
                 double amp);

void write_slope_report_json(std::ostream& os, const SlopeReport& r, double tol_slope, double tol_gap);

}  // namespace entroflow
