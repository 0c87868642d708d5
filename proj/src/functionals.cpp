#include "entroflow/functionals.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "entroflow/errors.hpp"
#include "entroflow/fokker_planck.hpp"
#include "entroflow/numerics.hpp"
#include "entroflow/wasserstein.hpp"

namespace entroflow {

namespace {

void require_same_grid(const GridDensity& p, const Grid& g) {
  if (!(p.grid == g)) throw InvalidDensity("density and reference live on different grids");
}

// Half the gap between the even-cell and odd-cell sub-sums, a cheap error indicator.
double split_error(const Grid& g, const std::vector<double>& f) {
  double even = 0.0, odd = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) (i % 2 == 0 ? even : odd) += f[i];
  return std::abs(even - odd) * g.h();
}

}  // namespace

LikelihoodField likelihood_field(const GridDensity& p, const GibbsReference& ref) {
  require_same_grid(p, ref.grid);
  const std::size_t n = p.values.size();
  const double h = p.grid.h();
  const double floor = kMaskFraction * p.max_value();
  LikelihoodField f;
  f.grid = p.grid;
  f.log_l.resize(n);
  f.l.resize(n);
  f.score.assign(n, 0.0);
  f.valid.assign(n, 0);
  std::vector<std::uint8_t> above(n);
  for (std::size_t i = 0; i < n; ++i) {
    above[i] = p.values[i] > floor;
    f.log_l[i] = p.values[i] > 0.0 ? std::log(p.values[i]) - ref.log_q[i] : -std::numeric_limits<double>::infinity();
    f.l[i] = std::exp(f.log_l[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!above[i]) continue;
    bool left = i > 0, right = i + 1 < n;
    if ((left && !above[i - 1]) || (right && !above[i + 1])) continue;
    if (left && right)
      f.score[i] = (f.log_l[i + 1] - f.log_l[i - 1]) / (2.0 * h);
    else if (right)
      f.score[i] = (f.log_l[i + 1] - f.log_l[i]) / h;
    else
      f.score[i] = (f.log_l[i] - f.log_l[i - 1]) / h;
    f.valid[i] = 1;
  }
  double masked = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (!f.valid[i]) masked += p.values[i];
  f.masked_mass = masked * h;
  return f;
}

FunctionalValue relative_entropy(const GridDensity& p, const GibbsReference& ref) {
  require_same_grid(p, ref.grid);
  std::vector<double> g(p.values.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (p.values[i] > 0.0) g[i] = p.values[i] * (std::log(p.values[i]) - ref.log_q[i]);
  FunctionalValue v;
  v.value = ExtendedReal(cell_sum(p.grid, g));
  v.quadrature_error = split_error(p.grid, g);
  return v;
}

FunctionalValue fisher_information(const GridDensity& p, const LikelihoodField& field) {
  std::vector<double> g(p.values.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (field.valid[i]) g[i] = field.score[i] * field.score[i] * p.values[i];
  FunctionalValue v;
  v.value = ExtendedReal(cell_sum(p.grid, g));
  v.quadrature_error = split_error(p.grid, g);
  v.masked_mass = field.masked_mass;
  return v;
}

FunctionalValue fisher_information(const GridDensity& p, const GibbsReference& ref) {
  return fisher_information(p, likelihood_field(p, ref));
}

FreeEnergy free_energy(const GridDensity& p, const GibbsReference& ref) {
  require_same_grid(p, ref.grid);
  double e = 0.0, s = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    e += ref.psi[i] * p.values[i];
    if (p.values[i] > 0.0) s += p.values[i] * std::log(p.values[i]);
  }
  FreeEnergy f;
  f.energy = e * p.grid.h();
  f.entropy = s * p.grid.h();
  f.free = f.energy + 0.5 * f.entropy;
  return f;
}

std::vector<double> velocity_field(const GridDensity& p, const LikelihoodField& field, const Perturbation* beta) {
  std::vector<double> v(p.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = -0.5 * field.score[i];
    if (beta) v[i] -= beta->beta(p.grid.center(i));
  }
  return v;
}

double weighted_inner(const GridDensity& p, const std::vector<double>& f, const std::vector<double>& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) s += f[i] * g[i] * p.values[i];
  return s * p.grid.h();
}

std::vector<DiagnosticsRow> diagnostics_series(const Flow& flow, const GibbsReference& ref) {
  std::vector<DiagnosticsRow> rows(flow.size());
  for (std::size_t k = 0; k < flow.size(); ++k) {
    const auto& p = flow[k];
    auto& r = rows[k];
    r.t = p.time;
    r.H = relative_entropy(p, ref).value.value();
    r.I = fisher_information(p, ref).value.value();
    auto fe = free_energy(p, ref);
    r.E = fe.energy;
    r.S = fe.entropy;
    r.F = fe.free;
    r.w2_to_initial = k == 0 ? 0.0 : w2_exact(flow.front(), p);
    r.dHdt_target = -0.5 * r.I;
  }
  for (std::size_t k = 0; k < rows.size() && rows.size() > 1; ++k) {
    std::size_t a = k == 0 ? 0 : k - 1;
    std::size_t b = k + 1 < rows.size() ? k + 1 : k;
    rows[k].dHdt = (rows[b].H - rows[a].H) / (rows[b].t - rows[a].t);
  }
  return rows;
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRow>& rows) {
  auto old = os.precision(17);
  os << "t,H,I,F,E,S,w2_to_initial,dHdt_fd,dHdt_target\n";
  for (const auto& r : rows)
    os << r.t << ',' << r.H << ',' << r.I << ',' << r.F << ',' << r.E << ',' << r.S << ',' << r.w2_to_initial << ','
       << r.dHdt << ',' << r.dHdt_target << '\n';
  os.precision(old);
}

namespace {

double entropy_at(const Flow& flow, const GibbsReference& ref, double t) {
  return relative_entropy(flow[snapshot_index(flow, t)], ref).value.value();
}

}  // namespace

SlopeEstimate entropy_slope_central(const Flow& flow, const GibbsReference& ref, double t0,
                                    const std::vector<double>& offsets) {
  SlopeEstimate est;
  est.offsets = offsets;
  for (double d : offsets) est.samples.push_back((entropy_at(flow, ref, t0 + d) - entropy_at(flow, ref, t0 - d)) / (2.0 * d));
  est.value = richardson(est.samples, 2);
  return est;
}

SlopeEstimate entropy_slope_one_sided(const Flow& flow, const GibbsReference& ref, double t0,
                                      const std::vector<double>& offsets, int side) {
  SlopeEstimate est;
  est.offsets = offsets;
  double h0 = entropy_at(flow, ref, t0);
  for (double d : offsets) {
    double s = side >= 0 ? d : -d;
    est.samples.push_back((entropy_at(flow, ref, t0 + s) - h0) / s);
  }
  est.value = richardson(est.samples, 1);
  return est;
}

}  // namespace entroflow
