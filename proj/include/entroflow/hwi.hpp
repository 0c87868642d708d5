#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "entroflow/execution.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/potentials.hpp"
#include "entroflow/rng.hpp"
#include "entroflow/wasserstein.hpp"

namespace entroflow {

struct HwiReport {
  bool applicable = true;
  double H0 = 0.0;
  double H1 = 0.0;
  double W = 0.0;
  double I0 = 0.0;
  double kappa = 0.0;
  double inner = 0.0;  // <(log ell_0)', gamma> in L2(P0)
  double lhs = 0.0;
  double rhs_sharp = 0.0;
  double rhs_std = 0.0;
  double slack_sharp = 0.0;
  double slack_std = 0.0;
  double tol = 0.0;
  bool pass_sharp = false;
  bool pass_std = false;
  bool sharp_le_std = false;
  bool pass = false;
};

struct ProfilePoint {
  double t = 0.0;
  double H = 0.0;
};

// H(P_t | Q) of the displacement interpolant, evaluated on its transport segments (uniform
// density per segment, Psi integrated by Gauss-Legendre) so that no re-binning enters.
double interpolant_entropy(const std::vector<TransportSegment>& segments, const GibbsReference& ref, double t);

// max |T' - 1| of the monotone map over the segments inside the central 1 - 2 tail of the mass;
// the entropy profile bends on the time scale 1 / stretch.
double geodesic_stretch(const std::vector<TransportSegment>& segments, double tail = 1e-6);

// H(P_t | Q) at t = k / n_t, k = 0..n_t, along the displacement interpolation.
std::vector<ProfilePoint> geodesic_entropy_profile(const GridDensity& p0, const GridDensity& p1,
                                                   const GibbsReference& ref, std::size_t n_t);

struct SlopeAtZero {
  double measured = 0.0;
  double target = 0.0;
  SlopeEstimate detail;
};

SlopeAtZero entropy_slope_at_zero(const GridDensity& p0, const GridDensity& p1, const GibbsReference& ref,
                                  const std::vector<double>& offsets);

// Pass iff lhs <= rhs + tol for both forms, tol = 1e-3 (1 + |lhs|).
HwiReport hwi_check(const GridDensity& p0, const GridDensity& p1, const Potential& pot, const GibbsReference& ref);
HwiReport hwi_check(const GridDensity& p0, const GridDensity& p1, const GibbsReference& ref, double kappa);

// Second differences of a uniform profile against kappa W^2.
struct ConvexityResult {
  double min_second_derivative = 0.0;
  double bound = 0.0;       // kappa W^2
  double min_excess = 0.0;  // min f'' - bound
};
ConvexityResult convexity_check(const std::vector<ProfilePoint>& profile, double kappa, double W);

// f(1) - f(0) - f'(0+) - int_0^1 (1 - t) f''(t) dt on a uniform profile.
double taylor_residual(const std::vector<ProfilePoint>& profile, double slope_at_zero);

// Mixture of 1-3 Gaussians floored at 1e-15 and renormalized.
GridDensity random_mixture(const Grid& grid, const CounterRng& rng, std::uint64_t index);

struct HwiSuiteResult {
  std::vector<HwiReport> reports;
  std::size_t violations = 0;
  std::size_t sharp_looser = 0;
};

HwiSuiteResult hwi_random_suite(const Potential& pot, const Grid& grid, std::size_t n_pairs, std::uint64_t seed,
                                Execution exec = Execution::parallel);

void write_hwi_csv(std::ostream& os, const std::vector<HwiReport>& reports);
void write_hwi_json(std::ostream& os, const HwiReport& r);

}  // namespace entroflow
