#pragma once

#include <string>
#include <vector>

#include "entroflow/extended_real.hpp"
#include "entroflow/grid.hpp"

namespace entroflow {

enum class PotentialKind { quadratic, double_well, free, polynomial };

// Polynomial potential Psi(x) = sum_k c_k x^k, tagged with the preset it came from.
class Potential {
 public:
  static Potential quadratic(double alpha = 1.0);
  static Potential double_well();
  static Potential free();
  static Potential polynomial(std::vector<double> coefficients);

  PotentialKind kind() const { return kind_; }
  std::string name() const;
  const std::vector<double>& coefficients() const { return coeffs_; }

  double psi(double x) const;
  double dpsi(double x) const;
  double d2psi(double x) const;

  // Growth condition <x, Psi'(x)> >= -c |x|^2 for |x| >= R.
  double drift_c = 0.0;
  double drift_R = 0.0;

  // True when exp(-2 Psi) is integrable on the real line.
  bool finite_partition() const;

 private:
  Potential(PotentialKind k, std::vector<double> c) : kind_(k), coeffs_(std::move(c)) {}
  PotentialKind kind_;
  std::vector<double> coeffs_;
};

// Throws InvalidPotential if Psi is negative or non-finite at a cell centre, or the
// growth condition fails on the grid.
void validate_potential(const Potential& pot, const Grid& grid);

// Lower bound on Psi'' over the grid (the curvature constant kappa).
double curvature_lower_bound(const Potential& pot, const Grid& grid);

// Reference measure q = exp(-2 Psi) on the grid. log_q is primary since q underflows
// for steep potentials.
struct GibbsReference {
  Grid grid;
  std::vector<double> psi;
  std::vector<double> log_q;
  std::vector<double> q;
  ExtendedReal Z;
  double log_Z = 0.0;
  std::vector<double> psi_coefficients;

  // Psi at an arbitrary point.
  double psi_at(double x) const;

  // Normalized stationary density q / Z as a grid density; requires finite Z.
  GridDensity stationary_density() const;
};

GibbsReference gibbs_reference(const Potential& pot, const Grid& grid);

}  // namespace entroflow
