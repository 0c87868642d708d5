#include "entroflow/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "entroflow/errors.hpp"
#include "entroflow/fokker_planck.hpp"
#include "entroflow/numerics.hpp"

namespace entroflow {

namespace {

// Position inside cell j of a piecewise-linear CDF at level u.
double cell_quantile(const GridDensity& p, const std::vector<double>& cdf, std::size_t j, double u) {
  double lo = cdf[j], hi = cdf[j + 1];
  double frac = hi > lo ? (u - lo) / (hi - lo) : 0.0;
  frac = std::clamp(frac, 0.0, 1.0);
  return p.grid.edge(j) + frac * p.grid.h();
}

// Walks the merged breakpoints of two CDFs; on each u-segment both quantile functions are
// affine, mapping [u, u'] onto [a0, b0] and [a1, b1].
template <class Fn>
void for_each_segment(const GridDensity& p0, const std::vector<double>& c0, const GridDensity& p1,
                      const std::vector<double>& c1, Fn&& fn) {
  std::size_t n0 = p0.values.size(), n1 = p1.values.size();
  std::size_t i = 0, j = 0;
  double u = 0.0;
  while (u < 1.0) {
    while (i < n0 && c0[i + 1] <= u) ++i;
    while (j < n1 && c1[j + 1] <= u) ++j;
    if (i >= n0 || j >= n1) break;
    double un = std::min(c0[i + 1], c1[j + 1]);
    if (!(un > u)) break;
    fn(u, un, cell_quantile(p0, c0, i, u), cell_quantile(p0, c0, i, un), cell_quantile(p1, c1, j, u),
       cell_quantile(p1, c1, j, un));
    u = un;
  }
}

// Adds mass spread uniformly over [a, b] to the cell values of out; returns the mass kept.
double deposit(std::vector<double>& out, const Grid& g, double a, double b, double mass) {
  double h = g.h();
  if (b - a <= 1e-14 * h) {
    double x = 0.5 * (a + b);
    if (x < g.x_min || x > g.x_max) return 0.0;
    out[g.locate(x)] += mass / h;
    return mass;
  }
  double lo = std::max(a, g.x_min), hi = std::min(b, g.x_max);
  if (hi <= lo) return 0.0;
  double density = mass / (b - a);
  std::size_t i0 = g.locate(lo), i1 = g.locate(hi);
  double kept = 0.0;
  for (std::size_t i = i0; i <= i1; ++i) {
    double overlap = std::min(hi, g.edge(i + 1)) - std::max(lo, g.edge(i));
    if (overlap <= 0.0) continue;
    out[i] += density * overlap / h;
    kept += density * overlap;
  }
  return kept;
}

}  // namespace

double quantile(const GridDensity& p, const std::vector<double>& cdf, double u) {
  std::size_t n = p.values.size();
  if (u <= 0.0) {
    std::size_t j = 0;
    while (j + 1 < n && cdf[j + 1] <= 0.0) ++j;
    return p.grid.edge(j);
  }
  if (u >= 1.0) {
    std::size_t j = n;
    while (j > 1 && cdf[j - 1] >= 1.0) --j;
    return p.grid.edge(j);
  }
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  std::size_t j = static_cast<std::size_t>(it - cdf.begin()) - 1;
  j = std::min(j, n - 1);
  return cell_quantile(p, cdf, j, u);
}

QuantileRep quantile_rep(const GridDensity& p, std::size_t M) {
  auto cdf = p.cdf_edges();
  QuantileRep q;
  q.u.resize(M);
  q.x.resize(M);
  std::size_t j = 0, n = p.values.size();
  for (std::size_t k = 0; k < M; ++k) {
    double u = (static_cast<double>(k) + 0.5) / static_cast<double>(M);
    while (j + 1 < n && cdf[j + 1] <= u) ++j;
    q.u[k] = u;
    q.x[k] = cell_quantile(p, cdf, j, u);
  }
  return q;
}

double w2(const GridDensity& p0, const GridDensity& p1, std::size_t M) {
  if (M < 1024) throw Error("w2 needs at least 1024 quantile points");
  auto q0 = quantile_rep(p0, M), q1 = quantile_rep(p1, M);
  double s = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    double d = q0.x[k] - q1.x[k];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(M));
}

double w2_exact(const GridDensity& p0, const GridDensity& p1) {
  auto c0 = p0.cdf_edges(), c1 = p1.cdf_edges();
  double s = 0.0;
  for_each_segment(p0, c0, p1, c1, [&](double u, double un, double a0, double b0, double a1, double b1) {
    double da = a1 - a0, db = b1 - b0;
    s += (un - u) * (da * da + da * db + db * db) / 3.0;
  });
  return std::sqrt(std::max(s, 0.0));
}

std::vector<double> TransportMap::displacement() const {
  std::vector<double> g(target.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = target[i] - grid.center(i);
  return g;
}

double TransportMap::l2_norm(const GridDensity& source) const {
  // Three-point Gauss-Legendre per source cell on the exact monotone map.
  static const double nodes[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double h = grid.h(), s = 0.0;
  for (std::size_t i = 0; i < source.values.size(); ++i) {
    if (source.values[i] <= 0.0) continue;
    double cell = 0.0;
    for (int q = 0; q < 3; ++q) {
      double frac = 0.5 * (1.0 + nodes[q]);
      double u = source_cdf_[i] + frac * (source_cdf_[i + 1] - source_cdf_[i]);
      double x = grid.edge(i) + frac * h;
      double d = quantile(target_density_, target_cdf_, u) - x;
      cell += weights[q] * d * d;
    }
    s += cell * source.values[i] * h;
  }
  return std::sqrt(s / source.mass());
}

TransportMap optimal_map(const GridDensity& p0, const GridDensity& p1) {
  TransportMap m;
  m.grid = p0.grid;
  m.source_cdf_ = p0.cdf_edges();
  m.target_cdf_ = p1.cdf_edges();
  m.target_density_ = p1;
  m.target.resize(p0.values.size());
  for (std::size_t i = 0; i < p0.values.size(); ++i) {
    double u = 0.5 * (m.source_cdf_[i] + m.source_cdf_[i + 1]);
    m.target[i] = quantile(p1, m.target_cdf_, u);
  }
  return m;
}

std::vector<TransportSegment> transport_segments(const GridDensity& p0, const GridDensity& p1) {
  const auto c0 = p0.cdf_edges(), c1 = p1.cdf_edges();
  const double m0 = p0.mass(), m1 = p1.mass();
  const std::size_t n0 = p0.values.size(), n1 = p1.values.size();
  std::vector<TransportSegment> out;
  out.reserve(n0 + n1);
  std::size_t i = 0, j = 0;
  double u = 0.0;
  while (u < 1.0) {
    while (i < n0 && c0[i + 1] <= u) ++i;
    while (j < n1 && c1[j + 1] <= u) ++j;
    if (i >= n0 || j >= n1) break;
    const double un = std::min(c0[i + 1], c1[j + 1]);
    if (!(un > u)) break;
    out.push_back({un - u, cell_quantile(p0, c0, i, u), cell_quantile(p0, c0, i, un), cell_quantile(p1, c1, j, u),
                   cell_quantile(p1, c1, j, un), p0.values[i] / m0, p1.values[j] / m1});
    u = un;
  }
  return out;
}

Pushforward displacement_interpolation(const GridDensity& p0, const GridDensity& p1, double t) {
  auto c0 = p0.cdf_edges(), c1 = p1.cdf_edges();
  const Grid& g = p0.grid;
  std::vector<double> out(g.n_cells, 0.0);
  double kept = 0.0;
  for_each_segment(p0, c0, p1, c1, [&](double u, double un, double a0, double b0, double a1, double b1) {
    double a = (1.0 - t) * a0 + t * a1, b = (1.0 - t) * b0 + t * b1;
    if (b < a - 1e-12 * g.h()) throw DegenerateGeodesic("interpolated map is not monotone");
    kept += deposit(out, g, a, b, un - u);
  });
  if (std::abs(kept - 1.0) > 1e-6) throw DegenerateGeodesic("geodesic mass left the grid");
  Pushforward r{GridDensity(g, std::move(out), (1.0 - t) * p0.time + t * p1.time), 1.0 / kept};
  for (double& v : r.density.values) v *= r.renormalization;
  return r;
}

Pushforward linearized_transport(const GridDensity& p, const std::vector<double>& v, double tau) {
  const Grid& g = p.grid;
  const std::size_t n = g.n_cells;
  std::vector<double> ve(n + 1);
  ve[0] = v[0];
  ve[n] = v[n - 1];
  for (std::size_t j = 1; j < n; ++j) ve[j] = 0.5 * (v[j - 1] + v[j]);
  const double eff = 1e-10 * p.max_value();
  const double h = g.h();
  double tau_max = std::numeric_limits<double>::infinity();
  bool folded = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.values[i] <= eff) continue;
    double shrink = ve[i] - ve[i + 1];
    if (shrink > 0.0) {
      tau_max = std::min(tau_max, h / shrink);
      if (h - tau * shrink <= 0.0) folded = true;
    }
  }
  if (folded) throw StepTooLarge("linearized map is not monotone on the effective support", tau_max);
  std::vector<double> out(n, 0.0);
  double kept = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.values[i] <= 0.0) continue;
    double a = g.edge(i) + tau * ve[i], b = g.edge(i + 1) + tau * ve[i + 1];
    if (b < a) a = b = 0.5 * (a + b);
    kept += deposit(out, g, a, b, p.values[i] * h);
  }
  if (!(kept > 0.0)) throw StepTooLarge("linearized map pushed all mass off the grid", tau_max);
  Pushforward r{GridDensity(g, std::move(out), p.time + tau), p.mass() / kept};
  for (double& x : r.density.values) x *= r.renormalization;
  return r;
}

SlopeTable slope_w2(const Flow& flow, double t0, const std::vector<double>& offsets, bool two_sided) {
  SlopeTable t;
  t.two_sided = two_sided;
  const auto& base = flow[snapshot_index(flow, t0)];
  std::vector<double> right, left;
  for (double d : offsets) {
    double w = w2_exact(flow[snapshot_index(flow, t0 + d)], base);
    t.rows.push_back({d, w, w / d});
    right.push_back(w / d);
  }
  if (two_sided) {
    for (double d : offsets) {
      double w = w2_exact(flow[snapshot_index(flow, t0 - d)], base);
      t.rows.push_back({-d, w, w / d});
      left.push_back(w / d);
    }
  }
  t.right = richardson(right, 1);
  t.left = two_sided ? richardson(left, 1) : 0.0;
  t.value = two_sided ? 0.5 * (t.right + t.left) : t.right;
  return t;
}

SlopeTable slope_w2_between(const Flow& base, const Flow& other, double t0, const std::vector<double>& offsets) {
  SlopeTable t;
  const auto& p = base[snapshot_index(base, t0)];
  std::vector<double> right;
  for (double d : offsets) {
    double w = w2_exact(other[snapshot_index(other, t0 + d)], p);
    t.rows.push_back({d, w, w / d});
    right.push_back(w / d);
  }
  t.right = richardson(right, 1);
  t.value = t.right;
  return t;
}

void write_slope_table_csv(std::ostream& os, const SlopeTable& table) {
  auto old = os.precision(17);
  os << "offset,w2,ratio\n";
  for (const auto& r : table.rows) os << r.offset << ',' << r.w2 << ',' << r.ratio << '\n';
  os << "extrapolated,," << table.value << '\n';
  os.precision(old);
}

namespace {

double cdf_at(const GridDensity& p, const std::vector<double>& cdf, double x) {
  const Grid& g = p.grid;
  if (x <= g.x_min) return 0.0;
  if (x >= g.x_max) return 1.0;
  std::size_t i = g.locate(x);
  double frac = (x - g.edge(i)) / g.h();
  return cdf[i] + frac * (cdf[i + 1] - cdf[i]);
}

double abs_linear_integral(double ga, double gb, double len) {
  if ((ga >= 0.0) == (gb >= 0.0)) return 0.5 * (std::abs(ga) + std::abs(gb)) * len;
  double sa = std::abs(ga), sb = std::abs(gb);
  return (sa * sa + sb * sb) / (2.0 * (sa + sb)) * len;
}

}  // namespace

double w1_samples(std::vector<double> samples, const GridDensity& p) {
  if (samples.empty()) throw Error("w1_samples needs samples");
  std::sort(samples.begin(), samples.end());
  auto cdf = p.cdf_edges();
  const Grid& g = p.grid;
  std::vector<double> pts;
  pts.reserve(samples.size() + g.n_cells + 1);
  for (std::size_t i = 0; i <= g.n_cells; ++i) pts.push_back(g.edge(i));
  pts.insert(pts.end(), samples.begin(), samples.end());
  std::sort(pts.begin(), pts.end());
  const double n = static_cast<double>(samples.size());
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double a = pts[k], b = pts[k + 1];
    while (count < samples.size() && samples[count] <= a) ++count;
    if (b <= a) continue;
    double fn = static_cast<double>(count) / n;
    total += abs_linear_integral(fn - cdf_at(p, cdf, a), fn - cdf_at(p, cdf, b), b - a);
  }
  return total;
}

double w1_sampling_scale(const GridDensity& p, std::size_t n) {
  auto cdf = p.cdf_edges();
  double s = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    double F = 0.5 * (cdf[i] + cdf[i + 1]);
    s += std::sqrt(F * (1.0 - F));
  }
  return std::sqrt(2.0 / std::numbers::pi) * s * p.grid.h() / std::sqrt(static_cast<double>(n));
}

}  // namespace entroflow
