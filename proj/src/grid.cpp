#include "entroflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "entroflow/errors.hpp"

namespace entroflow {

Grid Grid::make(double x_min, double x_max, std::size_t n_cells) {
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
    throw InvalidGrid("grid requires finite x_min < x_max");
  if (n_cells < 16) throw InvalidGrid("grid requires at least 16 cells");
  return Grid{x_min, x_max, n_cells};
}

std::vector<double> Grid::centers() const {
  std::vector<double> c(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) c[i] = center(i);
  return c;
}

std::size_t Grid::locate(double x) const {
  double u = (x - x_min) / h();
  if (!(u > 0.0)) return 0;
  auto i = static_cast<std::size_t>(u);
  return std::min(i, n_cells - 1);
}

GridDensity::GridDensity(Grid g, std::vector<double> v, double t) : grid(g), values(std::move(v)), time(t) {
  if (values.size() != grid.n_cells) throw InvalidDensity("density size does not match grid");
}

GridDensity GridDensity::from_function(const Grid& g, const std::function<double(double)>& f, double t) {
  std::vector<double> v(g.n_cells);
  for (std::size_t i = 0; i < g.n_cells; ++i) v[i] = f(g.center(i));
  GridDensity p(g, std::move(v), t);
  p.normalize();
  return p;
}

GridDensity GridDensity::gaussian(const Grid& g, double mean, double std_dev, double t) {
  if (!(std_dev > 0.0)) throw InvalidDensity("gaussian requires positive standard deviation");
  return from_function(g, [&](double x) {
    double z = (x - mean) / std_dev;
    return std::exp(-0.5 * z * z);
  }, t);
}

double cell_sum(const Grid& g, const std::vector<double>& f) {
  double s = 0.0;
  for (double v : f) s += v;
  return s * g.h();
}

double GridDensity::mass() const { return cell_sum(grid, values); }

double GridDensity::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += grid.center(i) * values[i];
  return s * grid.h();
}

double GridDensity::second_moment() const {
  // Exact for the piecewise-constant density: x_i^2 + h^2 / 12 per cell.
  double h = grid.h();
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double x = grid.center(i);
    s += (x * x + h * h / 12.0) * values[i];
  }
  return s * h;
}

double GridDensity::max_value() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

void GridDensity::normalize() {
  double m = mass();
  if (!(m > 0.0) || !std::isfinite(m)) throw InvalidDensity("density has no mass");
  for (double& v : values) v /= m;
}

void GridDensity::validate(double tol) const {
  if (values.size() != grid.n_cells) throw InvalidDensity("density size does not match grid");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidDensity("density has a negative or non-finite value");
  if (std::abs(mass() - 1.0) > tol) throw InvalidDensity("density mass differs from 1");
}

void GridDensity::check_support(double tol) const {
  if (values.front() > tol || values.back() > tol)
    throw SupportTouchesBoundary("density does not vanish at the grid ends");
}

std::vector<double> GridDensity::cdf_edges() const {
  std::vector<double> F(values.size() + 1, 0.0);
  double h = grid.h();
  for (std::size_t i = 0; i < values.size(); ++i) F[i + 1] = F[i] + values[i] * h;
  double total = F.back();
  if (!(total > 0.0)) throw InvalidDensity("density has no mass");
  for (double& v : F) v /= total;
  F.back() = 1.0;
  return F;
}

void write_density_csv(std::ostream& os, const GridDensity& p) {
  auto old = os.precision(17);
  os << "x,p\n";
  for (std::size_t i = 0; i < p.values.size(); ++i) os << p.grid.center(i) << ',' << p.values[i] << '\n';
  os.precision(old);
}

GridDensity read_density_csv(std::istream& is, double time) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("x,p", 0) != 0) throw InvalidDensity("density CSV must start with header x,p");
  std::vector<double> xs, ps;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double x = 0.0, p = 0.0;
    char comma = 0;
    if (!(ss >> x >> comma >> p) || comma != ',') throw InvalidDensity("malformed density CSV row: " + line);
    xs.push_back(x);
    ps.push_back(p);
  }
  if (xs.size() < 16) throw InvalidDensity("density CSV needs at least 16 rows");
  double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - xs[i - 1] - h) > 1e-9 * (1.0 + std::abs(h))) throw InvalidDensity("density CSV grid is not uniform");
  Grid g = Grid::make(xs.front() - 0.5 * h, xs.back() + 0.5 * h, xs.size());
  GridDensity p(g, std::move(ps), time);
  for (double v : p.values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidDensity("density CSV has a negative or non-finite value");
  if (std::abs(p.mass() - 1.0) > 1e-12) p.normalize();
  return p;
}

}  // namespace entroflow
