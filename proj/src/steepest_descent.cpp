#include "entroflow/steepest_descent.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>
#include <json.hpp>

#include "entroflow/errors.hpp"

namespace entroflow {

AbVectors compute_ab(const GridDensity& p_t0, const LikelihoodField& field, const Perturbation* beta) {
  AbVectors ab;
  ab.a = field.score;
  ab.b.assign(p_t0.values.size(), 0.0);
  if (beta)
    for (std::size_t i = 0; i < ab.b.size(); ++i) ab.b[i] = beta->beta(p_t0.grid.center(i));
  return ab;
}

SlopeReport analytic_slopes(const GridDensity& p_t0, const AbVectors& ab) {
  SlopeReport r;
  std::vector<double> c(ab.a.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = ab.a[i] + 2.0 * ab.b[i];
  r.a_norm2 = weighted_inner(p_t0, ab.a, ab.a);
  r.ab_inner = weighted_inner(p_t0, ab.a, ab.b);
  r.inner = weighted_inner(p_t0, ab.a, c);
  const double c_norm = std::sqrt(weighted_inner(p_t0, c, c));
  r.w2_slope_pert = 0.5 * c_norm;
  r.entropy_slope_pert = -0.5 * r.inner;
  r.entropy_slope = -0.5 * r.a_norm2;
  r.w2_slope = 0.5 * std::sqrt(r.a_norm2);
  if (c_norm > 0.0) {
    r.gap = std::sqrt(r.a_norm2) - r.inner / c_norm;
  } else {
    r.degenerate = true;
    r.gap = 0.0;
  }
  return r;
}

void empirical_slopes(const Potential& pot, const Perturbation& beta, const GridDensity& p_t0,
                      const std::vector<double>& offsets, const SolverOptions& solver, SlopeReport& report) {
  const double t0 = p_t0.time;
  std::vector<double> tg{t0};
  for (double d : offsets) tg.push_back(t0 + d);
  std::sort(tg.begin(), tg.end());
  const GibbsReference ref = gibbs_reference(pot, p_t0.grid);
  Flow pert, base;
#pragma omp parallel sections
  {
#pragma omp section
    pert = solve_fokker_planck(pot, p_t0, tg, solver, &beta);
#pragma omp section
    base = solve_fokker_planck(pot, p_t0, tg, solver, nullptr);
  }
  report.entropy_pert_detail = entropy_slope_one_sided(pert, ref, t0, offsets, +1);
  report.entropy_detail = entropy_slope_one_sided(base, ref, t0, offsets, +1);
  report.w2_pert_detail = slope_w2(pert, t0, offsets, false);
  report.w2_detail = slope_w2(base, t0, offsets, false);
  report.emp_entropy_slope_pert = report.entropy_pert_detail.value;
  report.emp_entropy_slope = report.entropy_detail.value;
  report.emp_w2_slope_pert = report.w2_pert_detail.value;
  report.emp_w2_slope = report.w2_detail.value;
  report.emp_gap = report.emp_entropy_slope_pert / report.emp_w2_slope_pert -
                   report.emp_entropy_slope / report.emp_w2_slope;
  report.has_empirical = true;
}

IbpResult integration_by_parts_check(const GridDensity& p_t0, const Perturbation& beta, const Potential& pot,
                                     const GibbsReference& ref) {
  beta.check_inside(p_t0.grid);
  const auto field = likelihood_field(p_t0, ref);
  const double h = p_t0.grid.h();
  IbpResult r;
  for (std::size_t i = 0; i < p_t0.values.size(); ++i) {
    const double x = p_t0.grid.center(i), b = beta.beta(x);
    r.lhs += (beta.div_beta(x) - 2.0 * b * pot.dpsi(x)) * p_t0.values[i];
    r.rhs -= field.score[i] * b * p_t0.values[i];
  }
  r.lhs *= h;
  r.rhs *= h;
  r.gap = r.lhs - r.rhs;
  return r;
}

CollinearFit fit_collinear_bumps(const GridDensity& p_t0, const std::vector<double>& a, double lam, double width,
                                 double mass_fraction) {
  if (lam == 0.0) throw Error("collinear construction needs a nonzero multiplier");
  const Grid& g = p_t0.grid;
  auto cdf = p_t0.cdf_edges();
  const double tail = 0.5 * (1.0 - mass_fraction);
  std::size_t i_lo = 0, i_hi = g.n_cells - 1;
  while (i_lo < g.n_cells && cdf[i_lo + 1] < tail) ++i_lo;
  while (i_hi > i_lo && cdf[i_hi] > 1.0 - tail) --i_hi;
  const double lo = g.edge(i_lo), hi = g.edge(i_hi + 1);
  std::vector<Bump> basis;
  const double spacing = width / 16.0;
  for (double c = lo; c <= hi + 1e-12; c += spacing) {
    if (c - width <= g.x_min || c + width >= g.x_max) continue;
    basis.push_back({c, width, 1.0});
  }
  if (basis.empty()) throw Error("no bump fits inside the grid for the collinear construction");
  // Rows cover every cell so that no part of b escapes the p-weighted residual.
  const std::size_t K = basis.size(), R = g.n_cells;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(K));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(R));
  for (std::size_t i = 0; i < R; ++i) {
    const double x = g.center(i), sw = std::sqrt(p_t0.values[i]);
    const auto r = static_cast<Eigen::Index>(i);
    rhs(r) = sw * lam * a[i];
    for (std::size_t k = 0; k < K; ++k) A(r, static_cast<Eigen::Index>(k)) = sw * basis[k].derivative(x);
  }
  Eigen::VectorXd coef = A.completeOrthogonalDecomposition().solve(rhs);
  for (std::size_t k = 0; k < K; ++k) basis[k].amplitude = coef(static_cast<Eigen::Index>(k));
  CollinearFit fit;
  fit.beta = Perturbation(basis);
  const double s_lo = basis.front().center - width, s_hi = basis.back().center + width;
  fit.b.resize(g.n_cells);
  fit.a_restricted.assign(g.n_cells, 0.0);
  fit.a_projected.resize(g.n_cells);
  std::vector<double> diff(g.n_cells);
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    const double x = g.center(i);
    fit.b[i] = fit.beta.beta(x);
    fit.a_projected[i] = fit.b[i] / lam;
    if (x > s_lo && x < s_hi) fit.a_restricted[i] = a[i];
    diff[i] = fit.b[i] - lam * fit.a_restricted[i];
  }
  fit.residual = std::sqrt(weighted_inner(p_t0, diff, diff));
  return fit;
}

Bump random_bump(const CounterRng& rng, std::uint64_t index, double c_lo, double c_hi, double w_lo, double w_hi,
                 double amp) {
  const double u1 = rng.uniform(Stream::suite, index, 0), u2 = rng.uniform(Stream::suite, index, 1),
               u3 = rng.uniform(Stream::suite, index, 2);
  return Bump{c_lo + u1 * (c_hi - c_lo), w_lo + u2 * (w_hi - w_lo), amp * (2.0 * u3 - 1.0)};
}

void write_slope_report_json(std::ostream& os, const SlopeReport& r, double tol_slope, double tol_gap) {
  nlohmann::json j;
  j["analytic"] = {{"a_norm2", r.a_norm2},
                   {"inner", r.inner},
                   {"ab_inner", r.ab_inner},
                   {"w2_slope_pert", r.w2_slope_pert},
                   {"entropy_slope_pert", r.entropy_slope_pert},
                   {"w2_slope", r.w2_slope},
                   {"entropy_slope", r.entropy_slope},
                   {"gap", r.gap},
                   {"degenerate", r.degenerate}};
  if (r.has_empirical) {
    j["empirical"] = {{"entropy_slope_pert", r.emp_entropy_slope_pert},
                      {"w2_slope_pert", r.emp_w2_slope_pert},
                      {"entropy_slope", r.emp_entropy_slope},
                      {"w2_slope", r.emp_w2_slope},
                      {"gap", r.emp_gap},
                      {"offsets", r.entropy_pert_detail.offsets},
                      {"entropy_pert_quotients", r.entropy_pert_detail.samples},
                      {"entropy_quotients", r.entropy_detail.samples}};
  }
  j["tolerances"] = {{"slope_relative", tol_slope}, {"gap_relative", tol_gap}};
  os << j.dump(2) << '\n';
}

}  // namespace entroflow
