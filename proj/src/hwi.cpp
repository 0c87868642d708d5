#include "entroflow/hwi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "entroflow/errors.hpp"
#include "entroflow/kernels.hpp"
#include "entroflow/numerics.hpp"
#include "entroflow/wasserstein.hpp"

namespace entroflow {

double interpolant_entropy(const std::vector<TransportSegment>& segments, const GibbsReference& ref, double t) {
  // Four-point Gauss-Legendre nodes and weights on [-1, 1].
  static constexpr double x1 = 0.33998104358485626, x2 = 0.86113631159405258;
  static constexpr double w1 = 0.65214515486254614, w2 = 0.34785484513745386;
  double s = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.mass > 0.0)) continue;
    const double inv = (1.0 - t) / seg.d0 + t / seg.d1;
    if (!(inv > 0.0) || !std::isfinite(inv)) throw DegenerateGeodesic("geodesic density is not finite");
    const double a = (1.0 - t) * seg.a0 + t * seg.a1, b = (1.0 - t) * seg.b0 + t * seg.b1;
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    const double psi_avg = 0.5 * (w1 * (ref.psi_at(c - r * x1) + ref.psi_at(c + r * x1)) +
                                  w2 * (ref.psi_at(c - r * x2) + ref.psi_at(c + r * x2)));
    s += seg.mass * (-std::log(inv) + 2.0 * psi_avg);
  }
  return s;
}

double geodesic_stretch(const std::vector<TransportSegment>& segments, double tail) {
  double u = 0.0, s = 0.0;
  for (const auto& seg : segments) {
    const double un = u + seg.mass;
    if (u >= tail && un <= 1.0 - tail && seg.d1 > 0.0) s = std::max(s, std::abs(seg.d0 / seg.d1 - 1.0));
    u = un;
  }
  return s;
}

std::vector<ProfilePoint> geodesic_entropy_profile(const GridDensity& p0, const GridDensity& p1,
                                                   const GibbsReference& ref, std::size_t n_t) {
  if (n_t == 0) throw Error("profile needs at least one interval");
  const auto segments = transport_segments(p0, p1);
  std::vector<ProfilePoint> f(n_t + 1);
  for (std::size_t k = 0; k <= n_t; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n_t);
    f[k] = {t, interpolant_entropy(segments, ref, t)};
  }
  return f;
}

namespace {

double inner_target(const GridDensity& p0, const GridDensity& p1, const LikelihoodField& field) {
  const auto gamma = optimal_map(p0, p1).displacement();
  double s = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    if (field.valid[i]) s += field.score[i] * gamma[i] * p0.values[i];
  return s * p0.grid.h();
}

}  // namespace

SlopeAtZero entropy_slope_at_zero(const GridDensity& p0, const GridDensity& p1, const GibbsReference& ref,
                                  const std::vector<double>& offsets) {
  SlopeAtZero r;
  const auto segments = transport_segments(p0, p1);
  const double h0 = interpolant_entropy(segments, ref, 0.0);
  r.detail.offsets = offsets;
  for (double t : offsets) r.detail.samples.push_back((interpolant_entropy(segments, ref, t) - h0) / t);
  r.detail.value = richardson(r.detail.samples, 1);
  r.measured = r.detail.value;
  r.target = inner_target(p0, p1, likelihood_field(p0, ref));
  return r;
}

HwiReport hwi_check(const GridDensity& p0, const GridDensity& p1, const GibbsReference& ref, double kappa) {
  HwiReport r;
  r.kappa = kappa;
  r.H0 = relative_entropy(p0, ref).value.value();
  r.H1 = relative_entropy(p1, ref).value.value();
  if (!std::isfinite(r.H0) || !std::isfinite(r.H1)) {
    r.applicable = false;
    return r;
  }
  const auto field = likelihood_field(p0, ref);
  r.W = w2_exact(p0, p1);
  r.I0 = fisher_information(p0, field).value.value();
  r.inner = inner_target(p0, p1, field);
  r.lhs = r.H0 - r.H1;
  const double curv = 0.5 * kappa * r.W * r.W;
  r.rhs_sharp = -r.inner - curv;
  r.rhs_std = r.W * std::sqrt(r.I0) - curv;
  r.slack_sharp = r.rhs_sharp - r.lhs;
  r.slack_std = r.rhs_std - r.lhs;
  r.tol = 1e-3 * (1.0 + std::abs(r.lhs));
  r.pass_sharp = r.lhs <= r.rhs_sharp + r.tol;
  r.pass_std = r.lhs <= r.rhs_std + r.tol;
  r.sharp_le_std = r.rhs_sharp <= r.rhs_std + 1e-10;
  r.pass = r.pass_sharp && r.pass_std && r.sharp_le_std;
  return r;
}

HwiReport hwi_check(const GridDensity& p0, const GridDensity& p1, const Potential& pot, const GibbsReference& ref) {
  return hwi_check(p0, p1, ref, curvature_lower_bound(pot, p0.grid));
}

ConvexityResult convexity_check(const std::vector<ProfilePoint>& profile, double kappa, double W) {
  if (profile.size() < 3) throw Error("convexity check needs three or more profile points");
  const double dt = profile[1].t - profile[0].t;
  ConvexityResult r;
  r.bound = kappa * W * W;
  r.min_second_derivative = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < profile.size(); ++k) {
    const double f2 = (profile[k + 1].H - 2.0 * profile[k].H + profile[k - 1].H) / (dt * dt);
    r.min_second_derivative = std::min(r.min_second_derivative, f2);
  }
  r.min_excess = r.min_second_derivative - r.bound;
  return r;
}

double taylor_residual(const std::vector<ProfilePoint>& profile, double slope_at_zero) {
  const std::size_t n = profile.size();
  if (n < 4) throw Error("Taylor check needs four or more profile points");
  const double dt = profile[1].t - profile[0].t;
  std::vector<double> f2(n), t(n), g(n);
  for (std::size_t k = 1; k + 1 < n; ++k)
    f2[k] = (profile[k + 1].H - 2.0 * profile[k].H + profile[k - 1].H) / (dt * dt);
  f2[0] = 2.0 * f2[1] - f2[2];
  f2[n - 1] = 2.0 * f2[n - 2] - f2[n - 3];
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = profile[k].t;
    g[k] = (1.0 - t[k]) * f2[k];
  }
  return profile.back().H - profile.front().H - slope_at_zero - trapezoid(t, g);
}

GridDensity random_mixture(const Grid& grid, const CounterRng& rng, std::uint64_t index) {
  std::uint64_t k = 0;
  auto u = [&]() { return rng.uniform(Stream::suite, index, k++); };
  const int n_comp = 1 + std::min(2, static_cast<int>(3.0 * u()));
  std::vector<double> m(n_comp), s(n_comp), w(n_comp);
  for (int j = 0; j < n_comp; ++j) {
    m[j] = -2.0 + 4.0 * u();
    s[j] = 0.3 + 0.7 * u();
    w[j] = 0.2 + 0.8 * u();
  }
  std::vector<double> v(grid.n_cells);
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    const double x = grid.center(i);
    double d = 0.0;
    for (int j = 0; j < n_comp; ++j) {
      const double z = (x - m[j]) / s[j];
      d += w[j] * std::exp(-0.5 * z * z) / s[j];
    }
    v[i] = d;
  }
  GridDensity p(grid, std::move(v));
  p.normalize();
  for (double& x : p.values) x = std::max(x, 1e-15);
  p.normalize();
  return p;
}

HwiSuiteResult hwi_random_suite(const Potential& pot, const Grid& grid, std::size_t n_pairs, std::uint64_t seed,
                                Execution exec) {
  const GibbsReference ref = gibbs_reference(pot, grid);
  const double kappa = curvature_lower_bound(pot, grid);
  const CounterRng rng(seed);
  HwiSuiteResult res;
  res.reports.resize(n_pairs);
  for_each_index(n_pairs, exec, [&](std::size_t i) {
    const auto p0 = random_mixture(grid, rng, 2 * i), p1 = random_mixture(grid, rng, 2 * i + 1);
    res.reports[i] = hwi_check(p0, p1, ref, kappa);
  });
  for (const auto& r : res.reports) {
    if (!r.pass_sharp || !r.pass_std) ++res.violations;
    if (!r.sharp_le_std) ++res.sharp_looser;
  }
  return res;
}

void write_hwi_csv(std::ostream& os, const std::vector<HwiReport>& reports) {
  auto old = os.precision(17);
  os << "pair_id,lhs,rhs_sharp,rhs_std,slack_sharp,slack_std\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    os << i << ',' << r.lhs << ',' << r.rhs_sharp << ',' << r.rhs_std << ',' << r.slack_sharp << ',' << r.slack_std
       << '\n';
  }
  os.precision(old);
}

void write_hwi_json(std::ostream& os, const HwiReport& r) {
  nlohmann::json j = {{"applicable", r.applicable}, {"H0", r.H0},       {"H1", r.H1},
                      {"W", r.W},                   {"I0", r.I0},       {"kappa", r.kappa},
                      {"inner", r.inner},           {"lhs", r.lhs},     {"rhs_sharp", r.rhs_sharp},
                      {"rhs_std", r.rhs_std},       {"slack_sharp", r.slack_sharp}, {"slack_std", r.slack_std},
                      {"tol", r.tol},               {"pass", r.pass}};
  os << j.dump(2) << '\n';
}

}  // namespace entroflow
