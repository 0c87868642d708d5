#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "entroflow/extended_real.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/perturbation.hpp"
#include "entroflow/potentials.hpp"

namespace entroflow {

// Cells with p below this fraction of max p are masked out of log-derivatives.
inline constexpr double kMaskFraction = 1e-30;

// ell = p / q together with its logarithmic gradient (the score a = (log ell)').
struct LikelihoodField {
  Grid grid;
  std::vector<double> log_l;
  std::vector<double> l;
  std::vector<double> score;
  std::vector<std::uint8_t> valid;
  double masked_mass = 0.0;
};

// The score is a centred difference of log ell itself, so it vanishes identically on
// the discrete Gibbs state and is exact for log ell quadratic.
LikelihoodField likelihood_field(const GridDensity& p, const GibbsReference& ref);

struct FunctionalValue {
  ExtendedReal value;
  double quadrature_error = 0.0;
  double masked_mass = 0.0;
};

// H(P|Q) = int p log(p / q), q = exp(-2 Psi) unnormalized.
FunctionalValue relative_entropy(const GridDensity& p, const GibbsReference& ref);
// I(P|Q) = int |(log ell)'|^2 p over unmasked cells.
FunctionalValue fisher_information(const GridDensity& p, const GibbsReference& ref);
FunctionalValue fisher_information(const GridDensity& p, const LikelihoodField& field);

struct FreeEnergy {
  double energy = 0.0;   // int Psi p
  double entropy = 0.0;  // int p log p
  double free = 0.0;     // energy + entropy / 2
};
FreeEnergy free_energy(const GridDensity& p, const GibbsReference& ref);

// v = -1/2 (log ell)' - beta at cell centres.
std::vector<double> velocity_field(const GridDensity& p, const LikelihoodField& field,
                                   const Perturbation* beta = nullptr);

// int f g p over the grid.
double weighted_inner(const GridDensity& p, const std::vector<double>& f, const std::vector<double>& g);

struct DiagnosticsRow {
  double t = 0.0;
  double H = 0.0;
  double I = 0.0;
  double F = 0.0;
  double E = 0.0;
  double S = 0.0;
  double w2_to_initial = 0.0;
  double dHdt = 0.0;
  double dHdt_target = 0.0;  // -I / 2
};

std::vector<DiagnosticsRow> diagnostics_series(const Flow& flow, const GibbsReference& ref);
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRow>& rows);

}  // namespace entroflow

namespace entroflow {

// Finite-difference slope samples at each offset and their extrapolated limit.
struct SlopeEstimate {
  double value = 0.0;
  std::vector<double> offsets;
  std::vector<double> samples;
};

// (H(t0 + d) - H(t0 - d)) / 2d, extrapolated in even powers of d.
SlopeEstimate entropy_slope_central(const Flow& flow, const GibbsReference& ref, double t0,
                                    const std::vector<double>& offsets);
// (H(t0 + side d) - H(t0)) / (side d), extrapolated in powers of d.
SlopeEstimate entropy_slope_one_sided(const Flow& flow, const GibbsReference& ref, double t0,
                                      const std::vector<double>& offsets, int side);

}  // namespace entroflow
