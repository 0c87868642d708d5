#include "entroflow/time_reversal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "entroflow/errors.hpp"
#include "entroflow/kernels.hpp"
#include "entroflow/numerics.hpp"
#include "entroflow/stats.hpp"

namespace entroflow {

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a)); }

// Increments below this size are round-off, not signal.
constexpr double kRoundoff = 1e-12;

}  // namespace

std::size_t TrajectorialProcesses::checkpoint(double s) const {
  for (std::size_t k = 0; k < s_values.size(); ++k)
    if (same_time(s_values[k], s)) return k;
  throw Error("no checkpoint at backward time s = " + std::to_string(s));
}

TrajectorialProcesses build_processes(const PathEnsemble& ensemble, const Flow& flow, const Potential& pot,
                                      const ProcessOptions& opts) {
  if (ensemble.direction != Direction::forward) throw Error("processes are built on forward ensembles");
  const GibbsReference ref = gibbs_reference(pot, flow.front().grid);
  const FlowField field(flow, ref);
  const auto& tg = ensemble.t_grid;
  const std::size_t nt = tg.size();
  const double T = tg.back();
  if (tg.front() < field.times().front() - 1e-9 || T > field.times().back() + 1e-9)
    throw Error("flow does not cover the ensemble's time span");

  std::vector<double> s_all(nt);
  for (std::size_t j = 0; j < nt; ++j) s_all[j] = T - tg[nt - 1 - j];
  s_all[0] = 0.0;
  std::vector<std::size_t> slot(nt, std::numeric_limits<std::size_t>::max());
  TrajectorialProcesses proc;
  proc.n_paths = ensemble.n_paths;
  proc.horizon = T;
  if (opts.checkpoints.empty()) {
    proc.s_values = s_all;
    for (std::size_t j = 0; j < nt; ++j) slot[j] = j;
  } else {
    for (double s : opts.checkpoints) {
      std::size_t j = 0;
      while (j < nt && !same_time(s_all[j], s)) ++j;
      if (j == nt) throw Error("checkpoint s = " + std::to_string(s) + " is not a recorded backward time");
      slot[j] = proc.s_values.size();
      proc.s_values.push_back(s_all[j]);
    }
  }
  const std::size_t nc = proc.s_values.size(), np = ensemble.n_paths;
  for (auto* a : {&proc.x, &proc.log_l, &proc.score, &proc.F, &proc.M, &proc.qv, &proc.qv_target})
    a->assign(nc * np, 0.0);
  proc.excluded.assign(np, 0);
  const Perturbation* beta = opts.beta && !opts.beta->empty() ? opts.beta : nullptr;
  const bool correction = beta && !opts.drop_drift_correction;

  for_each_index(np, opts.execution, [&](std::size_t path) {
    if (ensemble.exited[path]) {
      proc.excluded[path] = 1;
      return;
    }
    double ll0 = 0.0, F = 0.0, M = 0.0, qv = 0.0, qvt = 0.0, g_prev = 0.0, a2_prev = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = tg[nt - 1 - j], x = ensemble.x(path, nt - 1 - j);
      const auto smp = field.at(t, x);
      if (!smp.ok) {
        proc.excluded[path] = 1;
        return;
      }
      const double a2 = smp.score * smp.score;
      double g = 0.5 * a2;
      if (correction) g += 2.0 * beta->beta(x) * pot.dpsi(x) - beta->div_beta(x);
      if (j == 0) {
        ll0 = smp.log_l;
      } else {
        const double ds = s_all[j] - s_all[j - 1];
        F += 0.5 * (g_prev + g) * ds;
        qvt += 0.5 * (a2_prev + a2) * ds;
        const double m = (smp.log_l - ll0) - F;
        qv += (m - M) * (m - M);
        M = m;
      }
      g_prev = g;
      a2_prev = a2;
      if (slot[j] != std::numeric_limits<std::size_t>::max()) {
        const std::size_t idx = slot[j] * np + path;
        proc.x[idx] = x;
        proc.log_l[idx] = smp.log_l;
        proc.score[idx] = smp.score;
        proc.F[idx] = F;
        proc.M[idx] = M;
        proc.qv[idx] = qv;
        proc.qv_target[idx] = qvt;
      }
    }
  });
  for (auto e : proc.excluded) proc.n_excluded += e ? 1 : 0;
  return proc;
}

namespace {

struct Moments {
  std::size_t n = 0;
  double sum = 0.0;
  double sum2 = 0.0;

  void add(double v) {
    ++n;
    sum += v;
    sum2 += v * v;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double se() const {
    if (n < 2) return 0.0;
    double m = mean();
    double var = std::max(0.0, (sum2 - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

}  // namespace

MartingaleTestReport martingale_test(const TrajectorialProcesses& proc,
                                     const std::vector<std::pair<double, double>>& s_pairs, std::size_t n_bins,
                                     const MartingalePolicy& policy) {
  MartingaleTestReport rep;
  for (const auto& [s, sp] : s_pairs) {
    if (!(s < sp)) throw Error("martingale pairs need s < s'");
    const std::size_t k = proc.checkpoint(s), kp = proc.checkpoint(sp);
    std::vector<double> xs, d;
    for (std::size_t p = 0; p < proc.n_paths; ++p) {
      if (proc.excluded[p]) continue;
      xs.push_back(proc.at(proc.x, k, p));
      d.push_back(proc.at(proc.M, kp, p) - proc.at(proc.M, k, p));
    }
    if (xs.empty()) throw InsufficientCoverage("no usable paths for the martingale test");
    std::vector<double> lo, hi;
    auto bin = quantile_bins(xs, n_bins, &lo, &hi);
    std::vector<Moments> mom(n_bins);
    for (std::size_t i = 0; i < xs.size(); ++i) mom[bin[i]].add(d[i]);

    // Merge undersized bins with their right neighbours, a short tail with its left one.
    struct Group {
      Moments m;
      double lo, hi;
      bool merged;
    };
    std::vector<Group> groups;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (!groups.empty() && groups.back().m.n < policy.min_bin_count) {
        auto& g = groups.back();
        g.m.n += mom[b].n;
        g.m.sum += mom[b].sum;
        g.m.sum2 += mom[b].sum2;
        g.hi = hi[b];
        g.merged = true;
      } else {
        groups.push_back({mom[b], lo[b], hi[b], false});
      }
    }
    if (groups.size() > 1 && groups.back().m.n < policy.min_bin_count) {
      Group tail = groups.back();
      groups.pop_back();
      auto& g = groups.back();
      g.m.n += tail.m.n;
      g.m.sum += tail.m.sum;
      g.m.sum2 += tail.m.sum2;
      g.hi = tail.hi;
      g.merged = true;
    }
    PairReport pr;
    pr.s = s;
    pr.s_prime = sp;
    for (const auto& g : groups) {
      if (g.merged) rep.notes.push_back("merged undersized bins for pair (" + std::to_string(s) + ", " + std::to_string(sp) + ")");
      BinStat st;
      st.x_lo = g.lo;
      st.x_hi = g.hi;
      st.merged = g.merged;
      st.count = g.m.n;
      st.mean = g.m.mean();
      st.se = g.m.se();
      if (std::abs(st.mean) <= kRoundoff && st.se <= kRoundoff)
        st.z = 0.0;
      else
        st.z = st.se > 0.0 ? st.mean / st.se : std::numeric_limits<double>::infinity();
      pr.bins.push_back(st);
    }
    for (const auto& st : pr.bins) {
      ++rep.total_bins;
      if (std::abs(st.z) > policy.z_bin) ++rep.bins_over;
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(st.z));
    }
    rep.pairs.push_back(std::move(pr));
  }
  rep.pass = static_cast<double>(rep.bins_over) <= policy.max_fraction * static_cast<double>(rep.total_bins) &&
             rep.max_abs_z <= policy.z_max;
  return rep;
}

QvResult quadratic_variation_test(const TrajectorialProcesses& proc, double s) {
  const std::size_t k = proc.checkpoint(s);
  double e = 0.0, t = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < proc.n_paths; ++p) {
    if (proc.excluded[p]) continue;
    e += proc.at(proc.qv, k, p);
    t += proc.at(proc.qv_target, k, p);
    ++n;
  }
  QvResult r;
  r.empirical = e / static_cast<double>(n);
  r.target = t / static_cast<double>(n);
  const double diff = std::abs(r.empirical - r.target);
  r.relative_gap = r.target != 0.0 ? diff / std::abs(r.target) : (diff <= kRoundoff ? 0.0 : diff);
  return r;
}

MeanEstimate process_mean(const TrajectorialProcesses& proc, const std::vector<double>& a, double s, bool square) {
  const std::size_t k = proc.checkpoint(s);
  Moments m;
  for (std::size_t p = 0; p < proc.n_paths; ++p) {
    if (proc.excluded[p]) continue;
    double v = proc.at(a, k, p);
    m.add(square ? v * v : v);
  }
  return {m.mean(), m.se()};
}

std::string rate_identity_name(RateIdentity id) {
  switch (id) {
    case RateIdentity::unperturbed: return "unperturbed";
    case RateIdentity::perturbed_under_pbeta: return "perturbed_under_pbeta";
    case RateIdentity::perturbed_under_p: return "perturbed_under_p";
    case RateIdentity::ratio: return "ratio";
  }
  return "unknown";
}

RateTestReport trajectorial_rate_test(const PathEnsemble& ensemble, const FlowField& field, const FlowField* base,
                                      const Potential& pot, const Perturbation* beta, RateIdentity identity,
                                      double t0, const std::vector<double>& offsets, std::size_t n_bins) {
  if (identity != RateIdentity::unperturbed && (!base || !beta))
    throw Error("perturbed rate identities need the unperturbed field and the perturbation");
  if (!same_time(ensemble.t_grid.front(), t0)) throw Error("rate-test ensemble must start at t0");
  std::vector<std::size_t> idx;
  for (double e : offsets) {
    std::size_t k = 0;
    while (k < ensemble.t_grid.size() && !same_time(ensemble.t_grid[k], t0 + e)) ++k;
    if (k == ensemble.t_grid.size()) throw Error("rate-test ensemble does not record t0 + offset");
    idx.push_back(k);
  }
  const std::size_t np = ensemble.n_paths, no = offsets.size();
  std::vector<double> target(np * no, 0.0), y(np * no, 0.0), xe(np * no, 0.0);
  std::vector<std::uint8_t> use(np, 1);
  for (std::size_t p = 0; p < np; ++p) {
    if (ensemble.exited[p]) {
      use[p] = 0;
      continue;
    }
    const double x0 = ensemble.x(p, 0);
    const auto f0 = field.at(t0, x0);
    const auto b0 = base ? base->at(t0, x0) : f0;
    if (!f0.ok || !b0.ok) {
      use[p] = 0;
      continue;
    }
    const double a = b0.score, dlogp = b0.score - 2.0 * pot.dpsi(x0);
    double tp = 0.0;
    switch (identity) {
      case RateIdentity::unperturbed: tp = 0.5 * a * a; break;
      case RateIdentity::perturbed_under_pbeta:
        tp = 0.5 * a * a - beta->div_beta(x0) + 2.0 * beta->beta(x0) * pot.dpsi(x0);
        break;
      case RateIdentity::perturbed_under_p: tp = 0.5 * a * a - beta->div_beta(x0) - beta->beta(x0) * dlogp; break;
      case RateIdentity::ratio: break;
    }
    for (std::size_t o = 0; o < no; ++o) {
      const double t = t0 + offsets[o], x = ensemble.x(p, idx[o]);
      const auto fe = field.at(t, x);
      if (!fe.ok) {
        use[p] = 0;
        break;
      }
      xe[o * np + p] = x;
      if (identity == RateIdentity::ratio) {
        const auto be = base->at(t, x);
        if (!be.ok) {
          use[p] = 0;
          break;
        }
        // The quotient is a function of X(t0 + eps) alone, so the limit is taken there too.
        const auto bx = base->at(t0, x);
        if (!bx.ok) {
          use[p] = 0;
          break;
        }
        y[o * np + p] = (fe.log_l - be.log_l) / offsets[o];
        target[o * np + p] = beta->div_beta(x) + beta->beta(x) * (bx.score - 2.0 * pot.dpsi(x));
      } else {
        y[o * np + p] = (f0.log_l - fe.log_l) / offsets[o];
        target[o * np + p] = tp;
      }
    }
  }
  RateTestReport rep;
  rep.identity = identity;
  rep.t0 = t0;
  rep.offsets = offsets;
  rep.bins.resize(n_bins);
  std::vector<std::size_t> users;
  for (std::size_t p = 0; p < np; ++p)
    if (use[p]) users.push_back(p);
  if (users.size() < 100 * n_bins) throw InsufficientCoverage("too few usable paths for the rate test");
  std::size_t smallest = static_cast<std::size_t>(std::min_element(offsets.begin(), offsets.end()) - offsets.begin());
  for (std::size_t o = 0; o < no; ++o) {
    std::vector<double> xs(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) xs[i] = xe[o * np + users[i]];
    std::vector<double> lo, hi;
    auto bin = quantile_bins(xs, n_bins, &lo, &hi);
    std::vector<Moments> my(n_bins), mt(n_bins);
    for (std::size_t i = 0; i < users.size(); ++i) {
      my[bin[i]].add(y[o * np + users[i]]);
      mt[bin[i]].add(target[o * np + users[i]]);
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
      rep.bins[b].deviation.push_back(my[b].mean() - mt[b].mean());
      if (o == smallest) {
        rep.bins[b].x_lo = lo[b];
        rep.bins[b].x_hi = hi[b];
        rep.bins[b].count = my[b].n;
        rep.bins[b].target = mt[b].mean();
      }
    }
  }
  // Offsets are expected largest first, halving.
  double num = 0.0, den = 0.0;
  for (auto& b : rep.bins) {
    b.extrapolated = richardson(b.deviation, 1);
    const double w = static_cast<double>(b.count);
    num += w * std::abs(b.extrapolated);
    den += w * std::abs(b.target);
    rep.max_target = std::max(rep.max_target, std::abs(b.target));
  }
  rep.aggregate = den > 0.0 ? num / den : (num <= kRoundoff ? 0.0 : std::numeric_limits<double>::infinity());
  return rep;
}

void write_martingale_json(std::ostream& os, const MartingaleTestReport& r) {
  nlohmann::json j;
  j["pass"] = r.pass;
  j["total_bins"] = r.total_bins;
  j["bins_over"] = r.bins_over;
  j["max_abs_z"] = r.max_abs_z;
  j["notes"] = r.notes;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    nlohmann::json jp;
    jp["s"] = p.s;
    jp["s_prime"] = p.s_prime;
    jp["bins"] = nlohmann::json::array();
    for (const auto& b : p.bins)
      jp["bins"].push_back({{"x_lo", b.x_lo}, {"x_hi", b.x_hi}, {"count", b.count}, {"mean", b.mean}, {"se", b.se},
                            {"z", b.z}, {"merged", b.merged}});
    j["pairs"].push_back(jp);
  }
  os << j.dump(2) << '\n';
}

void write_martingale_csv(std::ostream& os, const MartingaleTestReport& r) {
  auto old = os.precision(17);
  os << "s,s_prime,bin,x_lo,x_hi,count,mean,se,z\n";
  for (const auto& p : r.pairs)
    for (std::size_t b = 0; b < p.bins.size(); ++b) {
      const auto& st = p.bins[b];
      os << p.s << ',' << p.s_prime << ',' << b << ',' << st.x_lo << ',' << st.x_hi << ',' << st.count << ','
         << st.mean << ',' << st.se << ',' << st.z << '\n';
    }
  os.precision(old);
}

}  // namespace entroflow
