#include "entroflow/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace entroflow {

double richardson(const std::vector<double>& values, int step) {
  if (values.empty()) throw std::invalid_argument("richardson needs at least one value");
  std::vector<double> row = values;
  for (std::size_t j = 1; j < values.size(); ++j) {
    double factor = std::pow(2.0, static_cast<double>(step) * static_cast<double>(j));
    std::vector<double> next(row.size() - 1);
    for (std::size_t k = 0; k + 1 < row.size(); ++k) next[k] = (factor * row[k + 1] - row[k]) / (factor - 1.0);
    row = std::move(next);
  }
  return row.front();
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs two or more points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

double observed_order(const std::vector<double>& steps, const std::vector<double>& errors) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    lx.push_back(std::log(steps[i]));
    ly.push_back(std::log(errors[i]));
  }
  return linear_fit(lx, ly).slope;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

}  // namespace entroflow
