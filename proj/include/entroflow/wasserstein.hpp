#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "entroflow/grid.hpp"

namespace entroflow {

inline constexpr std::size_t kDefaultQuantilePoints = std::size_t{1} << 20;

// Quantile function sampled at midpoints u_k = (k + 1/2) / M of the piecewise-linear CDF.
struct QuantileRep {
  std::vector<double> u;
  std::vector<double> x;
};

QuantileRep quantile_rep(const GridDensity& p, std::size_t M = kDefaultQuantilePoints);

// Quantile of the piecewise-linear CDF at level u in [0, 1].
double quantile(const GridDensity& p, const std::vector<double>& cdf, double u);

// W2 by midpoint quadrature of int_0^1 |Q0 - Q1|^2 du.
double w2(const GridDensity& p0, const GridDensity& p1, std::size_t M = kDefaultQuantilePoints);
// W2 integrated exactly over the merged CDF breakpoints of both densities.
double w2_exact(const GridDensity& p0, const GridDensity& p1);

// T(x_i) at the cell centres of the source grid; displacement gamma = T - id.
class TransportMap {
 public:
  Grid grid;
  std::vector<double> target;

  std::vector<double> displacement() const;
  // |gamma|_{L2(P0)} by per-cell Gauss quadrature of the exact monotone map.
  double l2_norm(const GridDensity& source) const;

 private:
  friend TransportMap optimal_map(const GridDensity& p0, const GridDensity& p1);
  std::vector<double> source_cdf_;
  std::vector<double> target_cdf_;
  GridDensity target_density_;
};

TransportMap optimal_map(const GridDensity& p0, const GridDensity& p1);

struct Pushforward {
  GridDensity density;
  double renormalization = 1.0;  // 1 / captured mass
};

// One affine piece of the monotone map: mass on [a0, b0] (density d0) goes to [a1, b1]
// (density d1). At time t it is spread uniformly over [(1 - t) a0 + t a1, (1 - t) b0 + t b1]
// with density 1 / ((1 - t) / d0 + t / d1).
struct TransportSegment {
  double mass = 0.0;
  double a0 = 0.0, b0 = 0.0, a1 = 0.0, b1 = 0.0;
  double d0 = 0.0, d1 = 0.0;
};

std::vector<TransportSegment> transport_segments(const GridDensity& p0, const GridDensity& p1);

// McCann interpolant ((1 - t) id + t T)_# P0, cell-averaged onto p0's grid.
Pushforward displacement_interpolation(const GridDensity& p0, const GridDensity& p1, double t);

// (id + tau v)_# P(t0): each cell's mass is spread over the image of the cell.
// Throws StepTooLarge if the image is not monotone on the effective support.
Pushforward linearized_transport(const GridDensity& p, const std::vector<double>& v, double tau);

struct SlopeRow {
  double offset = 0.0;  // signed time offset
  double w2 = 0.0;
  double ratio = 0.0;  // w2 / |offset|
};

struct SlopeTable {
  std::vector<SlopeRow> rows;
  double right = 0.0;
  double left = 0.0;
  double value = 0.0;  // average of the sides present
  bool two_sided = false;
};

// Metric speed |d/dt W2(P(t), P(t0))| at t0 from flow snapshots at t0 +- offsets, using the
// exact breakpoint integral for each distance.
SlopeTable slope_w2(const Flow& flow, double t0, const std::vector<double>& offsets, bool two_sided);
// Same for W2(P_other(t0 + d), P(t0)), where the first flow provides P(t0).
SlopeTable slope_w2_between(const Flow& base, const Flow& other, double t0, const std::vector<double>& offsets);

void write_slope_table_csv(std::ostream& os, const SlopeTable& table);

// W1 between an empirical sample and a grid density, int |F_n - F| dx.
double w1_samples(std::vector<double> samples, const GridDensity& p);
// Expected W1 of an n-sample from p: sqrt(2 / pi) int sqrt(F (1 - F)) dx / sqrt(n).
double w1_sampling_scale(const GridDensity& p, std::size_t n);

}  // namespace entroflow
