#pragma once

#include <cstddef>
#include <vector>

#include "entroflow/grid.hpp"

namespace entroflow {

double sample_mean(const std::vector<double>& x);
double sample_variance(const std::vector<double>& x);

// sup |F_n - F| against a grid density's piecewise-linear CDF.
double ks_statistic(std::vector<double> samples, const GridDensity& p);
double ks_statistic_uniform(std::vector<double> samples);
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);
// Asymptotic critical value c(alpha) sqrt((n + m) / (n m)); alpha in {0.05, 0.01}.
double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m);

// Quantile bin edges of x: n_bins equal-count bins; returns bin index per sample.
std::vector<std::size_t> quantile_bins(const std::vector<double>& x, std::size_t n_bins,
                                       std::vector<double>* lo = nullptr, std::vector<double>* hi = nullptr);

}  // namespace entroflow
