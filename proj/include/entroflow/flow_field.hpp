#pragma once

#include <cstdint>
#include <vector>

#include "entroflow/functionals.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/potentials.hpp"

namespace entroflow {

// log ell and its score on every flow snapshot, interpolated linearly in t and by
// four-point Lagrange (cubic) in x.
class FlowField {
 public:
  FlowField(const Flow& flow, const GibbsReference& ref);

  struct Sample {
    double log_l = 0.0;
    double score = 0.0;
    bool ok = true;  // false outside the grid or next to masked cells
  };

  Sample at(double t, double x) const;
  // Same, on snapshot k exactly.
  Sample at_snapshot(std::size_t k, double x) const;

  const std::vector<double>& times() const { return times_; }
  const Grid& grid() const { return grid_; }
  double max_gap() const;

 private:
  Sample spatial(std::size_t k, double x) const;

  Grid grid_;
  std::vector<double> times_;
  std::vector<std::vector<double>> log_l_;
  std::vector<std::vector<double>> score_;
  std::vector<std::vector<std::uint8_t>> valid_;
};

}  // namespace entroflow
