#include "entroflow/perturbation.hpp"

#include <cmath>

#include "entroflow/errors.hpp"

namespace entroflow {

namespace {

struct BumpTerms {
  double e = 0.0;   // exp(-1 / (1 - r^2))
  double g1 = 0.0;  // d/dr of -1 / (1 - r^2)
  double g2 = 0.0;  // second derivative
  bool inside = false;
};

BumpTerms terms(const Bump& b, double x) {
  BumpTerms t;
  double r = (x - b.center) / b.width;
  double s = 1.0 - r * r;
  if (s <= 0.0) return t;
  t.inside = true;
  t.e = std::exp(-1.0 / s);
  t.g1 = -2.0 * r / (s * s);
  t.g2 = -2.0 / (s * s) - 8.0 * r * r / (s * s * s);
  return t;
}

}  // namespace

double Bump::value(double x) const {
  auto t = terms(*this, x);
  return t.inside ? amplitude * t.e : 0.0;
}

double Bump::derivative(double x) const {
  auto t = terms(*this, x);
  return t.inside ? amplitude * t.e * t.g1 / width : 0.0;
}

double Bump::second_derivative(double x) const {
  auto t = terms(*this, x);
  return t.inside ? amplitude * t.e * (t.g1 * t.g1 + t.g2) / (width * width) : 0.0;
}

double Perturbation::potential(double x) const {
  double s = 0.0;
  for (const auto& b : bumps_) s += b.value(x);
  return s;
}

double Perturbation::beta(double x) const {
  double s = 0.0;
  for (const auto& b : bumps_) s += b.derivative(x);
  return s;
}

double Perturbation::div_beta(double x) const {
  double s = 0.0;
  for (const auto& b : bumps_) s += b.second_derivative(x);
  return s;
}

void Perturbation::check_inside(const Grid& grid) const {
  for (const auto& b : bumps_) {
    if (!(b.width > 0.0)) throw SupportTouchesBoundary("bump width must be positive");
    if (b.center - b.width <= grid.x_min || b.center + b.width >= grid.x_max)
      throw SupportTouchesBoundary("perturbation support touches the grid boundary");
  }
}

}  // namespace entroflow
