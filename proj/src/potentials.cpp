#include "entroflow/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "entroflow/errors.hpp"

namespace entroflow {

Potential Potential::quadratic(double alpha) {
  if (!(alpha > 0.0)) throw InvalidPotential("quadratic potential needs alpha > 0");
  return Potential(PotentialKind::quadratic, {0.0, 0.0, 0.5 * alpha});
}

Potential Potential::double_well() {
  Potential p(PotentialKind::double_well, {1.0, 0.0, -2.0, 0.0, 1.0});
  p.drift_c = 4.0;
  return p;
}

Potential Potential::free() { return Potential(PotentialKind::free, {0.0}); }

Potential Potential::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) throw InvalidPotential("polynomial potential needs coefficients");
  for (double c : coefficients)
    if (!std::isfinite(c)) throw InvalidPotential("polynomial coefficient is not finite");
  Potential p(PotentialKind::polynomial, std::move(coefficients));
  p.drift_R = std::numeric_limits<double>::infinity();
  return p;
}

std::string Potential::name() const {
  switch (kind_) {
    case PotentialKind::quadratic: return "quadratic";
    case PotentialKind::double_well: return "double_well";
    case PotentialKind::free: return "free";
    case PotentialKind::polynomial: return "polynomial";
  }
  return "unknown";
}

double Potential::psi(double x) const {
  double s = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) s = s * x + *it;
  return s;
}

double Potential::dpsi(double x) const {
  double s = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 1;) s = s * x + static_cast<double>(k) * coeffs_[k];
  return s;
}

double Potential::d2psi(double x) const {
  double s = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 2;) s = s * x + static_cast<double>(k * (k - 1)) * coeffs_[k];
  return s;
}

bool Potential::finite_partition() const {
  std::size_t deg = coeffs_.size();
  while (deg > 0 && coeffs_[deg - 1] == 0.0) --deg;
  if (deg == 0) return false;
  std::size_t degree = deg - 1;
  return degree >= 2 && degree % 2 == 0 && coeffs_[degree] > 0.0;
}

void validate_potential(const Potential& pot, const Grid& grid) {
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    double x = grid.center(i);
    double v = pot.psi(x);
    if (!std::isfinite(v) || !std::isfinite(pot.dpsi(x))) throw InvalidPotential("potential is not finite on the grid");
    if (v < -1e-12) throw InvalidPotential("potential is negative on the grid");
    if (std::isfinite(pot.drift_R) && std::abs(x) >= pot.drift_R && x * pot.dpsi(x) < -pot.drift_c * x * x - 1e-12)
      throw InvalidPotential("growth condition <x, Psi'> >= -c |x|^2 fails on the grid");
  }
}

double curvature_lower_bound(const Potential& pot, const Grid& grid) {
  double k = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.n_cells; ++i) k = std::min(k, pot.d2psi(grid.center(i)));
  // Even-degree polynomials may attain the minimum between centres; check critical points of Psi''.
  const auto& c = pot.coefficients();
  if (c.size() == 5) {
    // Psi'' = 12 c4 x^2 + 6 c3 x + 2 c2 has its minimum at -c3 / (4 c4) when c4 > 0.
    if (c[4] > 0.0) {
      double x = -c[3] / (4.0 * c[4]);
      if (grid.contains(x)) k = std::min(k, pot.d2psi(x));
    }
  }
  return k;
}

GibbsReference gibbs_reference(const Potential& pot, const Grid& grid) {
  GibbsReference ref;
  ref.grid = grid;
  ref.psi_coefficients = pot.coefficients();
  ref.psi.resize(grid.n_cells);
  ref.log_q.resize(grid.n_cells);
  ref.q.resize(grid.n_cells);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    ref.psi[i] = pot.psi(grid.center(i));
    ref.log_q[i] = -2.0 * ref.psi[i];
    ref.q[i] = std::exp(ref.log_q[i]);
    m = std::max(m, ref.log_q[i]);
  }
  double s = 0.0;
  for (double lq : ref.log_q) s += std::exp(lq - m);
  ref.log_Z = m + std::log(s * grid.h());
  ref.Z = pot.finite_partition() ? ExtendedReal(std::exp(ref.log_Z)) : ExtendedReal::infinity();
  return ref;
}

double GibbsReference::psi_at(double x) const {
  double s = 0.0;
  for (auto it = psi_coefficients.rbegin(); it != psi_coefficients.rend(); ++it) s = s * x + *it;
  return s;
}

GridDensity GibbsReference::stationary_density() const {
  if (!Z.finite()) throw InvalidPotential("reference measure is not finite; no stationary density");
  std::vector<double> v(grid.n_cells);
  for (std::size_t i = 0; i < grid.n_cells; ++i) v[i] = std::exp(log_q[i] - log_Z);
  GridDensity p(grid, std::move(v));
  p.normalize();
  return p;
}

}  // namespace entroflow
