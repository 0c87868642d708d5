#include "entroflow/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "entroflow/errors.hpp"

namespace entroflow {

double bernoulli(double z) {
  if (std::abs(z) < 1e-10) return 1.0 - 0.5 * z;
  double d = std::expm1(z);
  if (std::isinf(d)) return 0.0;
  return z / d;
}

FokkerPlanckOperator::FokkerPlanckOperator(const Potential& pot, const Grid& grid, const Perturbation* beta)
    : grid_(grid) {
  std::size_t n = grid.n_cells;
  if (beta && !beta->empty()) beta->check_inside(grid);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = grid.center(i);
    u[i] = pot.psi(x) + (beta ? beta->potential(x) : 0.0);
  }
  double h = grid.h();
  double c = 1.0 / (2.0 * h * h);
  lower_.assign(n, 0.0);
  diag_.assign(n, 0.0);
  upper_.assign(n, 0.0);
  // Interface i + 1/2 couples cells i and i + 1.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double w = 2.0 * (u[i + 1] - u[i]);
    double bp = bernoulli(w);
    double bm = bernoulli(-w);
    upper_[i] += c * bm;
    diag_[i] -= c * bp;
    lower_[i + 1] += c * bp;
    diag_[i + 1] -= c * bm;
  }
}

std::vector<double> FokkerPlanckOperator::apply(const std::vector<double>& p) const {
  std::size_t n = p.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag_[i] * p[i];
    if (i > 0) s += lower_[i] * p[i - 1];
    if (i + 1 < n) s += upper_[i] * p[i + 1];
    out[i] = s;
  }
  return out;
}

void FokkerPlanckOperator::backward_euler(const std::vector<double>& in, std::vector<double>& out, double dt) const {
  std::size_t n = in.size();
  std::vector<double> cp(n), dp(n);
  double m = 1.0 - dt * diag_[0];
  if (!(m > 0.0) || !std::isfinite(m)) throw StepFailure("vanishing pivot in implicit step", 0.25 * dt);
  cp[0] = -dt * upper_[0] / m;
  dp[0] = in[0] / m;
  for (std::size_t i = 1; i < n; ++i) {
    double a = -dt * lower_[i];
    m = (1.0 - dt * diag_[i]) - a * cp[i - 1];
    if (!(m > 0.0) || !std::isfinite(m)) throw StepFailure("vanishing pivot in implicit step", 0.25 * dt);
    cp[i] = (i + 1 < n) ? -dt * upper_[i] / m : 0.0;
    dp[i] = (in[i] - a * dp[i - 1]) / m;
  }
  out.resize(n);
  out[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) out[i] = dp[i] - cp[i] * out[i + 1];
  for (double v : out)
    if (!std::isfinite(v)) throw StepFailure("non-finite density after implicit step", 0.25 * dt);
}

Flow solve_fokker_planck(const Potential& pot, const GridDensity& p0, const std::vector<double>& t_grid,
                         const SolverOptions& opts, const Perturbation* beta) {
  if (!(opts.dt_max > 0.0)) throw StepFailure("dt_max must be positive", 1e-4);
  if (t_grid.empty()) throw Error("time grid is empty");
  if (std::abs(t_grid.front() - p0.time) > 1e-12 * (1.0 + std::abs(p0.time)))
    throw Error("time grid must start at the initial density's time");
  p0.validate(1e-8);
  FokkerPlanckOperator op(pot, p0.grid, beta);
  Flow flow;
  flow.reserve(t_grid.size());
  flow.push_back(p0);
  flow.back().time = t_grid.front();
  std::vector<double> cur = p0.values, next;
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    double gap = t_grid[k] - t_grid[k - 1];
    if (gap < 0.0) throw Error("time grid must be non-decreasing");
    if (gap > 0.0) {
      auto n_sub = static_cast<std::size_t>(std::ceil(gap / opts.dt_max - 1e-9));
      if (n_sub == 0) n_sub = 1;
      double dt = gap / static_cast<double>(n_sub);
      for (std::size_t j = 0; j < n_sub; ++j) {
        op.backward_euler(cur, next, dt);
        cur.swap(next);
      }
    }
    flow.emplace_back(p0.grid, cur, t_grid[k]);
  }
  return flow;
}

GridDensity step(const GridDensity& p, const Potential& pot, const Perturbation* beta, double dt) {
  if (!(dt > 0.0)) throw StepFailure("dt must be positive", 1e-4);
  FokkerPlanckOperator op(pot, p.grid, beta);
  std::vector<double> out;
  op.backward_euler(p.values, out, dt);
  return GridDensity(p.grid, std::move(out), p.time + dt);
}

double backwards_kolmogorov_residual(const Flow& flow, const Potential& pot, double support_fraction) {
  if (flow.size() < 3) throw Error("backwards Kolmogorov residual needs three or more slices");
  const Grid& g = flow.front().grid;
  const double h = g.h();
  const std::size_t n = g.n_cells;
  std::vector<double> two_psi(n), dpsi(n);
  for (std::size_t i = 0; i < n; ++i) {
    two_psi[i] = 2.0 * pot.psi(g.center(i));
    dpsi[i] = pot.dpsi(g.center(i));
  }
  auto ell = [&](const GridDensity& p) {
    std::vector<double> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = p.values[i] * std::exp(two_psi[i]);
    return l;
  };
  double worst = 0.0, scale = 0.0, l_max = 0.0;
  std::vector<double> lm = ell(flow[0]), l0 = ell(flow[1]), lp;
  for (std::size_t k = 1; k + 1 < flow.size(); ++k) {
    lp = ell(flow[k + 1]);
    const double dt = flow[k + 1].time - flow[k - 1].time;
    const double fl = support_fraction * std::min({flow[k - 1].max_value(), flow[k].max_value(), flow[k + 1].max_value()});
    for (std::size_t i = 1; i + 1 < n; ++i) {
      bool inside = true;
      for (std::size_t j = i - 1; j <= i + 1 && inside; ++j)
        inside = flow[k - 1].values[j] > fl && flow[k].values[j] > fl && flow[k + 1].values[j] > fl;
      if (!inside) continue;
      const double lt = (lp[i] - lm[i]) / dt;
      const double lxx = (l0[i + 1] - 2.0 * l0[i] + l0[i - 1]) / (h * h);
      const double lx = (l0[i + 1] - l0[i - 1]) / (2.0 * h);
      worst = std::max(worst, std::abs(lt - 0.5 * lxx + lx * dpsi[i]));
      scale = std::max(scale, std::abs(lt));
      l_max = std::max(l_max, l0[i]);
    }
    lm.swap(l0);
    l0.swap(lp);
  }
  // A (numerically) stationary flow has no time variation to normalize by; use the size of ell.
  return worst / (scale > 1e-6 * l_max ? scale : l_max);
}

DeviationProfile ratio_deviation_profile(const Flow& base, const Flow& perturbed, double t0,
                                         const std::vector<double>& taus, double support_fraction) {
  DeviationProfile d;
  for (double tau : taus) {
    const auto& p = base[snapshot_index(base, t0 + tau)];
    const auto& q = perturbed[snapshot_index(perturbed, t0 + tau)];
    const double floor = support_fraction * p.max_value();
    double m = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i)
      if (p.values[i] > floor) m = std::max(m, std::abs(q.values[i] / p.values[i] - 1.0));
    d.tau.push_back(tau);
    d.deviation.push_back(m);
  }
  d.fit = linear_fit(d.tau, d.deviation);
  return d;
}

double ratio_bound(const Flow& base, const Flow& perturbed, double support_fraction) {
  double c = 1.0;
  for (const auto& q : perturbed) {
    const auto& p = base[snapshot_index(base, q.time)];
    const double floor = support_fraction * p.max_value();
    for (std::size_t i = 0; i < p.values.size(); ++i)
      if (p.values[i] > floor && q.values[i] > 0.0) c = std::max({c, q.values[i] / p.values[i], p.values[i] / q.values[i]});
  }
  return c;
}

std::size_t snapshot_index(const Flow& flow, double t) {
  for (std::size_t k = 0; k < flow.size(); ++k)
    if (std::abs(flow[k].time - t) <= 1e-9 * (1.0 + std::abs(t))) return k;
  throw Error("flow has no snapshot at t = " + std::to_string(t));
}

}  // namespace entroflow
