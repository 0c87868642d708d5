#pragma once

#include <vector>

#include "entroflow/grid.hpp"

namespace entroflow {

// Smooth compactly supported bump B(x) = A exp(-1 / (1 - r^2)), r = (x - c) / w.
struct Bump {
  double center = 1.0;
  double width = 0.5;
  double amplitude = 1.0;

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
};

// Gradient perturbation beta = B' for a sum of bumps B; div beta = B''.
class Perturbation {
 public:
  Perturbation() = default;
  explicit Perturbation(std::vector<Bump> bumps) : bumps_(std::move(bumps)) {}

  bool empty() const { return bumps_.empty(); }
  const std::vector<Bump>& bumps() const { return bumps_; }

  // Potential B with beta = B'.
  double potential(double x) const;
  double beta(double x) const;
  double div_beta(double x) const;

  // Throws SupportTouchesBoundary unless every bump lies inside the grid.
  void check_inside(const Grid& grid) const;

 private:
  std::vector<Bump> bumps_;
};

}  // namespace entroflow
