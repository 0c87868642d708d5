#include "entroflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace entroflow {

double sample_mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
  double m = sample_mean(x), s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double ks_statistic(std::vector<double> samples, const GridDensity& p) {
  std::sort(samples.begin(), samples.end());
  auto cdf = p.cdf_edges();
  const Grid& g = p.grid;
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    double x = samples[k], F;
    if (x <= g.x_min)
      F = 0.0;
    else if (x >= g.x_max)
      F = 1.0;
    else {
      std::size_t i = g.locate(x);
      F = cdf[i] + (x - g.edge(i)) / g.h() * (cdf[i + 1] - cdf[i]);
    }
    d = std::max({d, std::abs(static_cast<double>(k + 1) / n - F), std::abs(F - static_cast<double>(k) / n)});
  }
  return d;
}

double ks_statistic_uniform(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    double F = std::clamp(samples[k], 0.0, 1.0);
    d = std::max({d, static_cast<double>(k + 1) / n - F, F - static_cast<double>(k) / n});
  }
  return d;
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m) {
  double c;
  if (std::abs(alpha - 0.05) < 1e-12)
    c = 1.358;
  else if (std::abs(alpha - 0.01) < 1e-12)
    c = 1.628;
  else
    c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

std::vector<std::size_t> quantile_bins(const std::vector<double>& x, std::size_t n_bins, std::vector<double>* lo,
                                       std::vector<double>* hi) {
  if (n_bins == 0 || x.empty()) throw std::invalid_argument("quantile_bins needs samples and bins");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<std::size_t> bin(x.size());
  if (lo) lo->assign(n_bins, 0.0);
  if (hi) hi->assign(n_bins, 0.0);
  const std::size_t n = x.size();
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t b = r * n_bins / n;
    bin[order[r]] = b;
    if (lo && (r == 0 || (r - 1) * n_bins / n != b)) (*lo)[b] = x[order[r]];
    if (hi) (*hi)[b] = x[order[r]];
  }
  return bin;
}

}  // namespace entroflow
