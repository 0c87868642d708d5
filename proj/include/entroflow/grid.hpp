#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace entroflow {

// Uniform cell-centred grid on [x_min, x_max].
struct Grid {
  double x_min = -8.0;
  double x_max = 8.0;
  std::size_t n_cells = 4096;

  static Grid make(double x_min, double x_max, std::size_t n_cells);

  double h() const { return (x_max - x_min) / static_cast<double>(n_cells); }
  double center(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * h(); }
  double edge(std::size_t i) const { return x_min + static_cast<double>(i) * h(); }
  std::vector<double> centers() const;
  // Index of the cell containing x, clamped to the grid.
  std::size_t locate(double x) const;
  bool contains(double x) const { return x >= x_min && x <= x_max; }
  bool operator==(const Grid& o) const = default;
};

// Piecewise-constant density: values[i] is the average of p over cell i.
struct GridDensity {
  Grid grid;
  std::vector<double> values;
  double time = 0.0;

  GridDensity() = default;
  GridDensity(Grid g, std::vector<double> v, double t = 0.0);

  // Evaluates f at cell centres and normalizes to unit mass.
  static GridDensity from_function(const Grid& g, const std::function<double(double)>& f,
                                   double t = 0.0);
  static GridDensity gaussian(const Grid& g, double mean, double std_dev, double t = 0.0);

  double mass() const;
  double mean() const;
  double second_moment() const;
  double max_value() const;
  void normalize();
  // Throws InvalidDensity on negative or non-finite entries, or mass off by more than tol.
  void validate(double tol = 1e-10) const;
  // Throws SupportTouchesBoundary if the end cells carry more than tol of the mass per unit length.
  void check_support(double tol = 1e-12) const;
  // Cumulative distribution at cell edges, length n_cells + 1, normalized to end at 1.
  std::vector<double> cdf_edges() const;
};

using Flow = std::vector<GridDensity>;

// Sum h * f_i over cells.
double cell_sum(const Grid& g, const std::vector<double>& f);

void write_density_csv(std::ostream& os, const GridDensity& p);
GridDensity read_density_csv(std::istream& is, double time = 0.0);

}  // namespace entroflow
