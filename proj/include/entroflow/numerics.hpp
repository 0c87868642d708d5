#pragma once

#include <cstddef>
#include <vector>

namespace entroflow {

// Richardson extrapolation of samples f(delta_k), delta_k = delta_0 / 2^k, assuming an
// error expansion in powers of delta^(step), delta^(2 step), ...  Returns the last
// diagonal entry of the tableau.
double richardson(const std::vector<double>& values, int step = 1);

// Least-squares fit y = intercept + slope * x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Slope of log(err) against log(step): the observed convergence order.
double observed_order(const std::vector<double>& steps, const std::vector<double>& errors);

// Trapezoid rule on a non-uniform grid.
double trapezoid(const std::vector<double>& t, const std::vector<double>& f);

std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace entroflow
