#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <omp.h>

#include <json.hpp>

#include "entroflow/flow_field.hpp"
#include "entroflow/fokker_planck.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/hwi.hpp"
#include "entroflow/kernels.hpp"
#include "entroflow/langevin.hpp"
#include "entroflow/numerics.hpp"
#include "entroflow/stats.hpp"
#include "entroflow/steepest_descent.hpp"
#include "entroflow/time_reversal.hpp"
#include "entroflow/wasserstein.hpp"
#include "experiment.hpp"

namespace entroflow::app {

const std::vector<std::string> kSuites{"flow", "debruijn", "steepest", "martingale", "hwi", "reversal"};

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* SuiteResult::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class Artifacts {
 public:
  Artifacts(fs::path dir, SuiteResult& res) : dir_(std::move(dir)), res_(res) { fs::create_directories(dir_); }

  // Opens dir/name for writing with 17 significant digits and records it.
  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    os.precision(17);
    res_.artifacts.push_back(p);
    return os;
  }

  void json_file(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

 private:
  fs::path dir_;
  SuiteResult& res_;
};

void add(SuiteResult& r, const std::string& name, bool pass, double value, double threshold,
         const std::string& detail = {}) {
  r.checks.push_back({name, pass, value, threshold, detail});
}

double rel_err(double measured, double target) { return std::abs(measured - target) / std::abs(target); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

const Perturbation* perturbation_or_null(const Perturbation& p) { return p.empty() ? nullptr : &p; }

std::vector<double> sorted_unique(std::vector<double> t) {
  std::sort(t.begin(), t.end());
  std::vector<double> out;
  for (double v : t)
    if (out.empty() || v - out.back() > 1e-12) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------- flow

void solver_quality(const Config& cfg, SuiteResult& res, Artifacts& art) {
  const auto pot = cfg.make_potential();
  const auto g = cfg.grid();
  const Perturbation beta(cfg.bumps);
  const auto p0 = cfg.make_initial(g);

  double mass_err = 0.0, min_val = 0.0;
  GridDensity p = p0;
  for (int k = 0; k < 200; ++k) {
    p = step(p, pot, perturbation_or_null(beta), cfg.dt_max);
    mass_err = std::max(mass_err, std::abs(p.mass() - 1.0));
    min_val = std::min(min_val, *std::min_element(p.values.begin(), p.values.end()));
  }
  add(res, "mass_per_step", mass_err <= cfg.policy.mass_abs && min_val >= 0.0, mass_err, cfg.policy.mass_abs,
      "200 implicit steps");

  if (pot.finite_partition()) {
    const auto q = gibbs_reference(pot, g).stationary_density();
    double worst = 0.0;
    for (double dt : {1e-4, 1e-2, 1.0}) {
      const auto q1 = step(q, pot, nullptr, dt);
      for (std::size_t i = 0; i < q.values.size(); ++i)
        worst = std::max(worst, std::abs(q1.values[i] - q.values[i]) / q.max_value());
    }
    add(res, "gibbs_stationarity", worst <= cfg.policy.stationarity_rel, worst, cfg.policy.stationarity_rel);
  }

  if (cfg.initial.kind == "gaussian" && (cfg.potential == "quadratic" || cfg.potential == "free")) {
    const auto flow = solve_fokker_planck(pot, p0, {0.0, cfg.T}, SolverOptions{cfg.dt_max});
    double m = cfg.initial.mean, v = cfg.initial.std_dev * cfg.initial.std_dev;
    if (cfg.potential == "quadratic") {
      const double e = std::exp(-cfg.alpha * cfg.T);
      m *= e;
      v = v * e * e + (1.0 - e * e) / (2.0 * cfg.alpha);
    } else {
      v += cfg.T;
    }
    const auto exact = GridDensity::gaussian(g, m, std::sqrt(v));
    double l1 = 0.0;
    for (std::size_t i = 0; i < g.n_cells; ++i) l1 += std::abs(flow.back().values[i] - exact.values[i]);
    l1 *= g.h();
    add(res, "closed_form_l1", l1 <= cfg.policy.closed_form_l1, l1, cfg.policy.closed_form_l1, "at t = T");
  }

  if (cfg.initial.kind != "file") {
    auto ofs = art.open("bk_residual.csv");
    ofs << "cells,dt,residual\n";
    std::vector<double> residual;
    for (int level = 0; level < 2; ++level) {
      const auto gl = Grid::make(cfg.x_min, cfg.x_max, cfg.cells << level);
      const double dt = cfg.dt_max / static_cast<double>(1 << level);
      std::vector<double> t{0.0};
      const std::size_t n = cfg.flow.bk_steps << level;
      for (std::size_t k = 0; k <= n; ++k) t.push_back(cfg.flow.bk_t + static_cast<double>(k) * dt);
      auto flow = solve_fokker_planck(pot, cfg.make_initial(gl), t, SolverOptions{dt});
      flow.erase(flow.begin());
      residual.push_back(backwards_kolmogorov_residual(flow, pot));
      ofs << gl.n_cells << ',' << dt << ',' << residual.back() << '\n';
    }
    add(res, "bk_residual", residual[0] <= cfg.policy.bk_residual, residual[0], cfg.policy.bk_residual);
    const double ratio = residual[1] / residual[0];
    if (residual[0] <= 1e-9)
      add(res, "bk_halving", true, ratio, cfg.policy.bk_halving, "residual at round-off; refinement not measurable");
    else
      add(res, "bk_halving", ratio <= cfg.policy.bk_halving, ratio, cfg.policy.bk_halving,
          "residual ratio under halving h and dt");
  }
}

void run_flow(const Config& cfg, SuiteResult& res, Artifacts& art) {
  const auto pot = cfg.make_potential();
  const auto g = cfg.grid();
  const auto ref = gibbs_reference(pot, g);
  const auto flow = solve_fokker_planck(pot, cfg.make_initial(g), linspace(0.0, cfg.T, cfg.snapshots),
                                        SolverOptions{cfg.dt_max});
  const auto rows = diagnostics_series(flow, ref);
  {
    auto os = art.open("diagnostics.csv");
    write_diagnostics_csv(os, rows);
  }
  {
    auto os = art.open("density_T.csv");
    write_density_csv(os, flow.back());
  }
  art.open("flow.gp") << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\n"
                         "set terminal pngcairo size 900,600\nset output 'flow.png'\n"
                         "plot 'diagnostics.csv' using 1:2 with lines title 'H', "
                         "'' using 1:3 with lines title 'I'\n";

  double mass = 0.0, rise = 0.0, drift = 0.0;
  for (std::size_t k = 0; k < flow.size(); ++k) {
    mass = std::max(mass, std::abs(flow[k].mass() - 1.0));
    if (k > 0) rise = std::max(rise, rows[k].H - rows[k - 1].H);
    drift = std::max(drift, std::abs(rows[k].H - rows[0].H));
  }
  add(res, "mass", mass <= cfg.policy.mass_abs, mass, cfg.policy.mass_abs, "over snapshots");
  add(res, "entropy_nonincreasing", rise <= 1e-12 * (1.0 + std::abs(rows[0].H)), rise, 1e-12);
  if (cfg.initial.kind == "gibbs")
    add(res, "stationary_entropy", drift <= 1e-10, drift, 1e-10, "max |H(t) - H(0)|");
  if (cfg.flow.solver_checks) solver_quality(cfg, res, art);
}

// ---------------------------------------------------------------- debruijn

void run_debruijn(const Config& cfg, SuiteResult& res, Artifacts& art) {
  const auto pot = cfg.make_potential();
  const auto g = cfg.grid();
  const auto ref = gibbs_reference(pot, g);
  std::vector<double> t{0.0};
  for (double t0 : cfg.debruijn.t0) {
    if (t0 + cfg.debruijn.offsets.front() > cfg.T + 1e-12)
      throw ConfigError("config error: debruijn.t0: t0 + max offset must not exceed time.T");
    t.push_back(t0);
    for (double d : cfg.debruijn.offsets) {
      t.push_back(t0 - d);
      t.push_back(t0 + d);
    }
  }
  const auto flow = solve_fokker_planck(pot, cfg.make_initial(g), sorted_unique(t), SolverOptions{cfg.dt_max});
  auto table = art.open("debruijn.csv");
  table << "t0,I,dHdt,dHdt_target,dHdt_rel,w2_slope,w2_target,w2_rel,ratio,ratio_target,ratio_rel\n";
  auto quot = art.open("entropy_quotients.csv");
  quot << "t0,offset,quotient\n";
  for (std::size_t k = 0; k < cfg.debruijn.t0.size(); ++k) {
    const double t0 = cfg.debruijn.t0[k];
    const double I = fisher_information(flow[snapshot_index(flow, t0)], ref).value.value();
    const auto s = entropy_slope_central(flow, ref, t0, cfg.debruijn.offsets);
    const auto w = slope_w2(flow, t0, cfg.debruijn.offsets, true);
    const double ratio = std::abs(s.value) / w.value;
    const double e1 = rel_err(s.value, -0.5 * I), e2 = rel_err(w.value, 0.5 * std::sqrt(I)),
                 e3 = rel_err(ratio, std::sqrt(I));
    table << t0 << ',' << I << ',' << s.value << ',' << -0.5 * I << ',' << e1 << ',' << w.value << ','
          << 0.5 * std::sqrt(I) << ',' << e2 << ',' << ratio << ',' << std::sqrt(I) << ',' << e3 << '\n';
    for (std::size_t j = 0; j < s.offsets.size(); ++j) quot << t0 << ',' << s.offsets[j] << ',' << s.samples[j] << '\n';
    {
      auto os = art.open("w2_slopes_" + std::to_string(k) + ".csv");
      write_slope_table_csv(os, w);
    }
    const std::string at = "t0=" + fmt(t0);
    add(res, "entropy_slope " + at, e1 <= cfg.policy.slope_rel, e1, cfg.policy.slope_rel, "dH/dt vs -I/2");
    add(res, "w2_slope " + at, e2 <= cfg.policy.w2_slope_rel, e2, cfg.policy.w2_slope_rel, "metric speed vs sqrt(I)/2");
    add(res, "ratio " + at, e3 <= cfg.policy.ratio_rel, e3, cfg.policy.ratio_rel, "|dH/dt| / speed vs sqrt(I)");
  }
  art.open("debruijn.gp") << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'offset'\n"
                             "set ylabel 'entropy difference quotient'\n"
                             "set terminal pngcairo size 900,600\nset output 'debruijn.png'\n"
                             "plot 'entropy_quotients.csv' using 2:3 with linespoints title 'quotient'\n";
}

// ---------------------------------------------------------------- steepest

void run_steepest(const Config& cfg, SuiteResult& res, Artifacts& art) {
  if (cfg.bumps.empty()) throw ConfigError("config error: perturbation.bumps: required by the steepest suite");
  const auto pot = cfg.make_potential();
  const auto g = cfg.grid();
  const auto ref = gibbs_reference(pot, g);
  const Perturbation beta(cfg.bumps);
  beta.check_inside(g);
  const auto pt = solve_fokker_planck(pot, cfg.make_initial(g), {0.0, cfg.steepest.t0}, SolverOptions{cfg.dt_max}).back();
  const auto field = likelihood_field(pt, ref);
  const auto ab = compute_ab(pt, field, &beta);
  auto r = analytic_slopes(pt, ab);
  empirical_slopes(pot, beta, pt, cfg.steepest.offsets, SolverOptions{cfg.steepest.dt_max}, r);
  {
    auto os = art.open("steepest.json");
    write_slope_report_json(os, r, cfg.policy.steepest_rel, cfg.policy.steepest_rel);
  }
  const double tol = cfg.policy.steepest_rel;
  const double e_h = rel_err(r.emp_entropy_slope_pert, r.entropy_slope_pert);
  const double e_w = rel_err(r.emp_w2_slope_pert, r.w2_slope_pert);
  add(res, "perturbed_entropy_slope", e_h <= tol, e_h, tol, "vs -<a, a + 2b> / 2");
  add(res, "perturbed_w2_slope", e_w <= tol, e_w, tol, "vs |a + 2b| / 2");
  add(res, "gap_nonnegative", r.gap >= cfg.policy.gap_floor, r.gap, cfg.policy.gap_floor);

  const auto ibp = integration_by_parts_check(pt, beta, pot, ref);
  add(res, "integration_by_parts", std::abs(ibp.gap) <= cfg.policy.ibp_abs, std::abs(ibp.gap), cfg.policy.ibp_abs);

  // Random bumps centred in the bulk of p(t0) with supports inside the grid.
  const double mean = pt.mean(), sd = std::sqrt(std::max(pt.second_moment() - mean * mean, 1e-12));
  const double w_lo = 0.2, w_hi = 1.0;
  const double c_lo = std::max(mean - 2 * sd, cfg.x_min + w_hi + 1e-6),
               c_hi = std::min(mean + 2 * sd, cfg.x_max - w_hi - 1e-6);
  const CounterRng rng(cfg.seed);
  double worst = 0.0;
  std::size_t violations = 0;
  auto rb = art.open("random_bumps.csv");
  rb << "index,center,width,amplitude,gap\n";
  for (std::size_t i = 0; i < cfg.steepest.random_bumps; ++i) {
    const Bump b = random_bump(rng, i, c_lo, c_hi, w_lo, w_hi, 1.0);
    const Perturbation pb({b});
    const double gap = analytic_slopes(pt, compute_ab(pt, field, &pb)).gap;
    worst = std::min(worst, gap);
    if (gap < cfg.policy.gap_floor) ++violations;
    rb << i << ',' << b.center << ',' << b.width << ',' << b.amplitude << ',' << gap << '\n';
  }
  if (cfg.steepest.random_bumps > 0)
    add(res, "random_bump_gaps", violations == 0, worst, cfg.policy.gap_floor,
        std::to_string(violations) + " violations in " + std::to_string(cfg.steepest.random_bumps));

  const auto fit = fit_collinear_bumps(pt, ab.a, cfg.steepest.collinear_lambda, cfg.bumps.front().width);
  const double proj = analytic_slopes(pt, AbVectors{fit.a_projected, fit.b}).gap;
  const double restricted = analytic_slopes(pt, AbVectors{fit.a_restricted, fit.b}).gap;
  add(res, "collinear_gap", std::abs(proj) <= cfg.policy.collinear_abs, std::abs(proj), cfg.policy.collinear_abs,
      "restricted-support gap " + fmt(restricted) + ", fit residual " + fmt(fit.residual));
  art.json_file("collinear.json", json{{"lambda", cfg.steepest.collinear_lambda},
                                       {"width", cfg.bumps.front().width},
                                       {"projected_gap", proj},
                                       {"restricted_gap", restricted},
                                       {"residual", fit.residual}});
}

// ---------------------------------------------------------------- martingale

json martingale_json(const MartingaleTestReport& r) {
  std::stringstream ss;
  write_martingale_json(ss, r);
  return json::parse(ss.str());
}

void rate_suite(const Config& cfg, SuiteResult& res, Artifacts& art) {
  const auto& m = cfg.martingale;
  const auto pot = cfg.make_potential();
  const auto g = cfg.grid();
  const auto ref = gibbs_reference(pot, g);
  const double t0 = m.rate_t0, E = m.rate_window;
  const Perturbation beta({m.rate_bump});
  beta.check_inside(g);
  const auto pt = solve_fokker_planck(pot, cfg.make_initial(g), {0.0, t0}, SolverOptions{cfg.dt_max}).back();
  const auto tf = linspace(t0, t0 + E, 33), te = linspace(t0, t0 + E, 9);
  const auto base = solve_fokker_planck(pot, pt, tf, SolverOptions{cfg.dt_max});
  const auto pert = solve_fokker_planck(pot, pt, tf, SolverOptions{cfg.dt_max}, &beta);
  const FlowField fb(base, ref), fp(pert, ref);
  SimulationOptions so;
  so.dt_sim = m.rate_dt_sim;
  so.domain = &g;
  const auto eP = simulate_forward(pot, nullptr, density_sampler(pt), m.rate_paths, te, cfg.seed + 2, so);
  const auto eB = simulate_forward(pot, &beta, density_sampler(pt), m.rate_paths, te, cfg.seed + 3, so);

  auto write = [&](const RateTestReport& r) {
    auto os = art.open("rate_" + rate_identity_name(r.identity) + ".csv");
    os << "bin,x_lo,x_hi,count,target";
    for (double o : r.offsets) os << ",dev_" << o;
    os << ",extrapolated\n";
    for (std::size_t b = 0; b < r.bins.size(); ++b) {
      const auto& bin = r.bins[b];
      os << b << ',' << bin.x_lo << ',' << bin.x_hi << ',' << bin.count << ',' << bin.target;
      for (double d : bin.deviation) os << ',' << d;
      os << ',' << bin.extrapolated << '\n';
    }
  };
  const std::vector<double> offs{E, E / 2};
  struct Case {
    RateIdentity id;
    const PathEnsemble* e;
    const FlowField* f;
    const FlowField* b;
  };
  for (Case c : {Case{RateIdentity::unperturbed, &eP, &fb, nullptr}, Case{RateIdentity::perturbed_under_pbeta, &eB, &fp, &fb},
                 Case{RateIdentity::perturbed_under_p, &eP, &fp, &fb}}) {
    const auto r = trajectorial_rate_test(*c.e, *c.f, c.b, pot, c.id == RateIdentity::unperturbed ? nullptr : &beta,
                                          c.id, t0, offs, m.rate_bins);
    write(r);
    add(res, "rate " + rate_identity_name(c.id), r.aggregate <= cfg.policy.rate_aggregate, r.aggregate,
        cfg.policy.rate_aggregate, "aggregate relative deviation");
  }
  const auto ratio = trajectorial_rate_test(eP, fp, &fb, pot, &beta, RateIdentity::ratio, t0, {E / 2, E / 4, E / 8},
                                            m.rate_bins);
  write(ratio);
  double worst = 0.0;
  for (const auto& b : ratio.bins)
    worst = std::max(worst, std::abs(b.extrapolated) / (cfg.policy.ratio_bin_rel * std::abs(b.target) +
                                                        cfg.policy.ratio_bin_floor * ratio.max_target));
  add(res, "rate ratio_binwise", worst <= 1.0, worst, 1.0,
      "max |dev| / (rel |target| + floor max|target|), aggregate " + fmt(ratio.aggregate));

  const auto prof = ratio_deviation_profile(base, pert, t0, {E / 8, 3 * E / 32, E / 16, E / 32});
  auto os = art.open("deviation_profile.csv");
  os << "tau,deviation\n";
  for (std::size_t i = 0; i < prof.tau.size(); ++i) os << prof.tau[i] << ',' << prof.deviation[i] << '\n';
  const double icpt = std::abs(prof.fit.intercept);
  add(res, "deviation_intercept", icpt <= cfg.policy.deviation_intercept, icpt, cfg.policy.deviation_intercept,
      "slope " + fmt(prof.fit.slope));
}

void run_martingale(const Config& cfg, SuiteResult& res, Artifacts& art) {
  const auto& m = cfg.martingale;
  const auto pot = cfg.make_potential();
  const auto g = cfg.grid();
  const auto ref = gibbs_reference(pot, g);
  const auto p0 = cfg.make_initial(g);
  const std::size_t nt = static_cast<std::size_t>(std::lround(m.T / m.dt_sim));
  const auto t = linspace(0.0, m.T, nt + 1);
  const std::size_t nc = static_cast<std::size_t>(std::lround(m.T / m.checkpoint_step));
  const auto checkpoints = linspace(0.0, m.T, nc + 1);
  std::vector<std::pair<double, double>> pairs;
  const std::size_t np = static_cast<std::size_t>(std::lround(m.T / m.pair_step));
  for (std::size_t k = 0; k < np; ++k)
    pairs.emplace_back(m.pair_step * static_cast<double>(k), m.pair_step * static_cast<double>(k + 1));
  MartingalePolicy policy;
  policy.z_bin = cfg.policy.z_bin;
  policy.z_max = cfg.policy.z_max;
  policy.max_fraction = cfg.policy.max_fraction;
  SimulationOptions so;
  so.dt_sim = m.dt_sim;
  so.domain = &g;

  const auto flow = solve_fokker_planck(pot, p0, t, SolverOptions{cfg.dt_max});
  const auto e = simulate_forward(pot, nullptr, density_sampler(p0), m.n_paths, t, cfg.seed, so);
  ProcessOptions po;
  po.checkpoints = checkpoints;
  const auto proc = build_processes(e, flow, pot, po);
  if (proc.n_excluded) res.warnings.push_back(std::to_string(proc.n_excluded) + " paths excluded from processes");
  const auto mt = martingale_test(proc, pairs, m.bins, policy);
  for (const auto& n : mt.notes) res.warnings.push_back(n);
  art.json_file("martingale.json", martingale_json(mt));
  {
    auto os = art.open("martingale.csv");
    write_martingale_csv(os, mt);
  }
  add(res, "martingale", mt.pass, mt.max_abs_z, cfg.policy.z_max,
      std::to_string(mt.bins_over) + "/" + std::to_string(mt.total_bins) + " bins beyond |z| " + fmt(cfg.policy.z_bin));

  const auto qv = quadratic_variation_test(proc, m.T);
  add(res, "quadratic_variation", qv.relative_gap <= cfg.policy.qv_rel, qv.relative_gap, cfg.policy.qv_rel);

  const double H0 = relative_entropy(flow.front(), ref).value.value(), HT = relative_entropy(flow.back(), ref).value.value();
  const double dH = H0 - HT;
  const auto F0 = process_mean(proc, proc.F, m.T);
  const auto M2 = process_mean(proc, proc.M, m.T, true);
  const double tolF = cfg.policy.mean_se * F0.se + cfg.policy.mean_rel * std::abs(dH);
  const double tolM = cfg.policy.mean_se * M2.se + cfg.policy.mean_rel * std::abs(2 * dH);
  add(res, "mean_F0", std::abs(F0.mean - dH) <= tolF, std::abs(F0.mean - dH), tolF, "E[F(0)] vs H(0) - H(T)");
  add(res, "mean_M0_squared", std::abs(M2.mean - 2 * dH) <= tolM, std::abs(M2.mean - 2 * dH), tolM,
      "E[M(0)^2] vs 2 (H(0) - H(T))");
  {
    auto os = art.open("processes.csv");
    os << "s,mean_F,se_F,mean_M,se_M,mean_M2,mean_qv,mean_qv_target\n";
    for (double s : checkpoints) {
      const auto f = process_mean(proc, proc.F, s), mm = process_mean(proc, proc.M, s),
                 m2 = process_mean(proc, proc.M, s, true), q = process_mean(proc, proc.qv, s),
                 qt = process_mean(proc, proc.qv_target, s);
      os << s << ',' << f.mean << ',' << f.se << ',' << mm.mean << ',' << mm.se << ',' << m2.mean << ',' << q.mean
         << ',' << qt.mean << '\n';
    }
  }
  art.open("martingale.gp") << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'bin'\n"
                               "set ylabel 'z'\nset terminal pngcairo size 900,600\nset output 'martingale.png'\n"
                               "plot 'martingale.csv' using 3:9 with points title 'z by bin'\n";

  if (!cfg.bumps.empty()) {
    const Perturbation beta(cfg.bumps);
    beta.check_inside(g);
    const auto pflow = solve_fokker_planck(pot, p0, t, SolverOptions{cfg.dt_max}, &beta);
    const auto pe = simulate_forward(pot, &beta, density_sampler(p0), m.n_paths, t, cfg.seed + 1, so);
    ProcessOptions pp;
    pp.beta = &beta;
    pp.checkpoints = checkpoints;
    const auto pm = martingale_test(build_processes(pe, pflow, pot, pp), pairs, m.bins, policy);
    art.json_file("perturbed_martingale.json", martingale_json(pm));
    add(res, "perturbed_martingale", pm.pass, pm.max_abs_z, cfg.policy.z_max,
        std::to_string(pm.bins_over) + "/" + std::to_string(pm.total_bins) + " bins beyond |z| " + fmt(cfg.policy.z_bin));
    if (m.negative_control) {
      pp.drop_drift_correction = true;
      const auto nm = martingale_test(build_processes(pe, pflow, pot, pp), pairs, m.bins, policy);
      art.json_file("negative_control.json", martingale_json(nm));
      add(res, "negative_control_rejected", !nm.pass, nm.max_abs_z, cfg.policy.z_max,
          "drift correction dropped; the martingale test must fail");
    }
  }
  if (m.rate) rate_suite(cfg, res, art);
}

// ---------------------------------------------------------------- hwi

void run_hwi(const Config& cfg, SuiteResult& res, Artifacts& art) {
  const auto pot = cfg.make_potential();
  const auto g = Grid::make(cfg.hwi.x_min, cfg.hwi.x_max, cfg.hwi.cells);
  const auto ref = gibbs_reference(pot, g);
  const double kappa = curvature_lower_bound(pot, g);
  const auto suite = hwi_random_suite(pot, g, cfg.hwi.pairs, cfg.seed);
  {
    auto os = art.open("hwi.csv");
    write_hwi_csv(os, suite.reports);
  }
  add(res, "hwi_violations", suite.violations == 0, static_cast<double>(suite.violations), 0.0,
      std::to_string(cfg.hwi.pairs) + " pairs, kappa " + fmt(kappa));
  add(res, "sharp_not_looser", suite.sharp_looser == 0, static_cast<double>(suite.sharp_looser), 0.0);

  struct PairDiag {
    double slope = 0.0, target = 0.0, rel = 0.0, stretch = 0.0;
    double c = 0.0, c_fine = 0.0, c2 = 0.0, c2_fine = 0.0;
    double taylor = 0.0, taylor_fine = 0.0, taylor_scale = 0.0;
    bool hwi_2kappa = true;
  };
  std::vector<PairDiag> d(cfg.hwi.pairs);
  const CounterRng rng(cfg.seed);
  const std::size_t n = cfg.hwi.profile_steps;
  // Deficit below the bound scaled by 1 / dt^2: the fitted constant c.
  auto fitted_c = [](const ConvexityResult& r, std::size_t steps) {
    return std::max(0.0, -r.min_excess) * static_cast<double>(steps * steps);
  };
  for_each_index(cfg.hwi.pairs, Execution::parallel, [&](std::size_t i) {
    const auto a = random_mixture(g, rng, 2 * i), b = random_mixture(g, rng, 2 * i + 1);
    auto& x = d[i];
    x.stretch = geodesic_stretch(transport_segments(a, b));
    const double f = x.stretch > 0.0 ? std::min(1.0, 0.4 / (x.stretch * cfg.hwi.offsets.front())) : 1.0;
    std::vector<double> offs(cfg.hwi.offsets);
    for (double& o : offs) o *= f;
    const auto s = entropy_slope_at_zero(a, b, ref, offs);
    x.slope = s.measured;
    x.target = s.target;
    x.rel = std::abs(s.measured - s.target) / std::max(std::abs(s.target), 1e-300);
    const double W = suite.reports[i].W;
    const auto prof = geodesic_entropy_profile(a, b, ref, n), fine = geodesic_entropy_profile(a, b, ref, 2 * n);
    x.c = fitted_c(convexity_check(prof, kappa, W), n);
    x.c_fine = fitted_c(convexity_check(fine, kappa, W), 2 * n);
    x.c2 = fitted_c(convexity_check(prof, 2 * kappa, W), n);
    x.c2_fine = fitted_c(convexity_check(fine, 2 * kappa, W), 2 * n);
    x.taylor = taylor_residual(prof, s.measured);
    x.taylor_fine = taylor_residual(fine, s.measured);
    x.taylor_scale = 1.0 + std::abs(s.measured) + std::abs(prof.back().H - prof.front().H);
    x.hwi_2kappa = hwi_check(a, b, ref, 2 * kappa).pass;
  });

  auto os = art.open("hwi_pairs.csv");
  os << "pair_id,stretch,slope,slope_target,slope_rel,c,c_refined,c_2kappa,c_2kappa_refined,taylor_residual,"
        "taylor_residual_refined,hwi_2kappa_pass\n";
  const double ratio = cfg.policy.convexity_c_ratio;
  auto unstable = [ratio](double c, double c_fine) { return c_fine > 0.0 && c_fine > ratio * c; };
  double worst_rel = 0.0, worst_taylor = 0.0, worst_c = 0.0, worst_c2 = 0.0;
  std::size_t n_unstable = 0, n_unstable2 = 0, n_hwi2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& x = d[i];
    os << i << ',' << x.stretch << ',' << x.slope << ',' << x.target << ',' << x.rel << ',' << x.c << ',' << x.c_fine
       << ',' << x.c2 << ',' << x.c2_fine << ',' << x.taylor << ',' << x.taylor_fine << ',' << x.hwi_2kappa << '\n';
    worst_rel = std::max(worst_rel, x.rel);
    const double tol = cfg.policy.taylor_rel * x.taylor_scale + std::abs(x.taylor - x.taylor_fine);
    worst_taylor = std::max(worst_taylor, std::abs(x.taylor_fine) / tol);
    if (unstable(x.c, x.c_fine)) ++n_unstable;
    if (unstable(x.c2, x.c2_fine)) ++n_unstable2;
    if (!x.hwi_2kappa) ++n_hwi2;
    worst_c = std::max(worst_c, x.c_fine);
    worst_c2 = std::max(worst_c2, x.c2_fine);
  }
  if (!d.empty()) {
    add(res, "hwi_violations_2kappa", n_hwi2 == 0, static_cast<double>(n_hwi2), 0.0,
        "same pairs with the generator's convexity constant 2 kappa");
    add(res, "geodesic_slope", worst_rel <= cfg.policy.hwi_slope_rel, worst_rel, cfg.policy.hwi_slope_rel,
        "worst relative error of the entropy slope at t = 0");
    add(res, "convexity", n_unstable == 0, static_cast<double>(n_unstable), 0.0,
        "pairs whose fitted c grows under dt halving, bound kappa W^2; worst c " + fmt(worst_c));
    add(res, "convexity_2kappa", n_unstable2 == 0, static_cast<double>(n_unstable2), 0.0,
        "same with bound 2 kappa W^2; worst c " + fmt(worst_c2));
    add(res, "taylor", worst_taylor <= 1.0, worst_taylor, 1.0,
        "worst |residual| / (rel scale + quadrature error estimate)");
    std::size_t tight = 0;
    for (std::size_t i = 1; i < suite.reports.size(); ++i)
      if (suite.reports[i].slack_sharp < suite.reports[tight].slack_sharp) tight = i;
    auto js = art.open("hwi_tightest.json");
    write_hwi_json(js, suite.reports[tight]);
  }
  art.open("hwi.gp") << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'slack (standard)'\n"
                        "set ylabel 'slack (sharp)'\nset terminal pngcairo size 900,600\nset output 'hwi.png'\n"
                        "plot 'hwi.csv' using 6:5 with points title 'pairs', x with lines title 'equal'\n";
}

// ---------------------------------------------------------------- reversal

void run_reversal(const Config& cfg, SuiteResult& res, Artifacts& art) {
  const auto pot = cfg.make_potential();
  const auto g = cfg.grid();
  const auto p0 = cfg.make_initial(g);
  const auto& rv = cfg.reversal;
  const auto flow = solve_fokker_planck(pot, p0, linspace(0.0, rv.T, rv.snapshots), SolverOptions{cfg.dt_max});
  SimulationOptions so;
  so.dt_sim = rv.dt_sim;
  auto os = art.open("reversal.csv");
  os << "seed,ks,critical,w1,exited\n";
  for (std::size_t k = 0; k < rv.seeds; ++k) {
    const std::uint64_t seed = cfg.seed + k;
    const auto e = simulate_time_reversed(flow, pot, rv.n_paths, seed, so);
    const auto xs = e.marginal(e.t_grid.size() - 1);
    const auto ys = sample_from_density(p0, rv.n_paths, seed + 1000);
    const double D = ks_statistic_two_sample(xs, ys);
    const double crit = ks_critical_two_sample(cfg.policy.ks_alpha, xs.size(), ys.size());
    os << seed << ',' << D << ',' << crit << ',' << w1_samples(xs, p0) << ',' << e.n_exited() << '\n';
    if (e.n_exited()) res.warnings.push_back(std::to_string(e.n_exited()) + " backward paths stopped (seed " +
                                             std::to_string(seed) + ")");
    add(res, "ks seed=" + std::to_string(seed), D <= crit, D, crit, "backward marginal at s = T vs p(0)");
  }
}

}  // namespace

SuiteResult run_suite(const std::string& suite, const Config& cfg, const fs::path& out) {
  static const std::map<std::string, std::function<void(const Config&, SuiteResult&, Artifacts&)>> table{
      {"flow", run_flow},   {"debruijn", run_debruijn}, {"steepest", run_steepest},
      {"martingale", run_martingale}, {"hwi", run_hwi}, {"reversal", run_reversal}};
  const auto it = table.find(suite);
  if (it == table.end()) throw ConfigError("config error: suites: unknown suite '" + suite + "'");
  SuiteResult res;
  res.suite = suite;
  const auto start = std::chrono::steady_clock::now();
  Artifacts art(out / suite, res);
  it->second(cfg, res, art);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json checks = json::array();
  for (const auto& c : res.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold},
                      {"detail", c.detail}});
  art.json_file("checks.json", json{{"suite", suite}, {"pass", res.pass()}, {"checks", checks}, {"warnings", res.warnings}});
  return res;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const fs::path& out, const Config& cfg, const std::string& subcommand,
                    const std::vector<SuiteResult>& results) {
  json artifacts = json::object();
  json suites = json::array();
  for (const auto& r : results) {
    for (const auto& a : r.artifacts) {
      std::ifstream is(a, std::ios::binary);
      std::ostringstream ss;
      ss << is.rdbuf();
      artifacts[fs::relative(a, out).generic_string()] = hex64(fnv1a64(ss.str()));
    }
    suites.push_back({{"suite", r.suite}, {"pass", r.pass()}, {"warnings", r.warnings.size()}});
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  const json m{{"subcommand", subcommand},
               {"scenario", cfg.scenario},
               {"config_hash", hex64(fnv1a64(cfg.source + "\nseed=" + std::to_string(cfg.seed)))},
               {"seed", cfg.seed},
               {"version", ENTROFLOW_VERSION},
               {"compiler", __VERSION__},
               {"threads", omp_get_max_threads()},
               {"suites", suites},
               {"artifacts", artifacts},
               {"timestamp", stamp}};
  std::ofstream os(out / "manifest.json", std::ios::binary);
  if (!os) throw Error("cannot write " + (out / "manifest.json").string());
  os << m.dump(2) << '\n';
}

}  // namespace entroflow::app
