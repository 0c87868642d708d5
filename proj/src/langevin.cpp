#include "entroflow/langevin.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "entroflow/errors.hpp"
#include "entroflow/flow_field.hpp"
#include "entroflow/kernels.hpp"
#include "entroflow/wasserstein.hpp"

namespace entroflow {

static_assert(std::endian::native == std::endian::little, "binary ensemble IO assumes a little-endian host");

std::vector<double> PathEnsemble::marginal(std::size_t k, bool skip_exited) const {
  std::vector<double> m;
  m.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p)
    if (!skip_exited || !exited[p]) m.push_back(x(p, k));
  return m;
}

std::size_t PathEnsemble::n_exited() const {
  std::size_t c = 0;
  for (auto e : exited) c += e ? 1 : 0;
  return c;
}

InitSampler point_sampler(double x0) {
  return [x0](std::size_t, const CounterRng&) { return x0; };
}

InitSampler gaussian_sampler(double mean, double std_dev) {
  return [mean, std_dev](std::size_t path, const CounterRng& rng) {
    return mean + std_dev * rng.normal(Stream::initial, path, 0);
  };
}

InitSampler density_sampler(const GridDensity& p) {
  auto shared = std::make_shared<std::pair<GridDensity, std::vector<double>>>(p, p.cdf_edges());
  return [shared](std::size_t path, const CounterRng& rng) {
    return quantile(shared->first, shared->second, rng.uniform(Stream::initial, path, 0));
  };
}

namespace {

std::size_t substeps(double gap, double dt) {
  auto n = static_cast<std::size_t>(std::ceil(gap / dt - 1e-9));
  return n == 0 ? 1 : n;
}

void check_grid(const std::vector<double>& t_grid, double dt_sim) {
  if (t_grid.empty()) throw Error("time grid is empty");
  if (!(dt_sim > 0.0)) throw Error("dt_sim must be positive");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    double gap = t_grid[k] - t_grid[k - 1];
    if (!(gap > 0.0)) throw Error("time grid must be increasing");
    if (dt_sim > gap * (1.0 + 1e-9)) throw Error("dt_sim exceeds the recording interval");
  }
}

}  // namespace

PathEnsemble simulate_forward(const Potential& pot, const Perturbation* beta, const InitSampler& init,
                              std::size_t n_paths, const std::vector<double>& t_grid, std::uint64_t seed,
                              const SimulationOptions& opts) {
  check_grid(t_grid, opts.dt_sim);
  PathEnsemble e;
  e.n_paths = n_paths;
  e.t_grid = t_grid;
  e.seed = seed;
  e.direction = Direction::forward;
  e.horizon = t_grid.back();
  e.positions.assign(n_paths * t_grid.size(), 0.0);
  e.exited.assign(n_paths, 0);
  const CounterRng rng(seed);
  const std::size_t nt = t_grid.size();
  const bool perturbed = beta && !beta->empty();
  for_each_index(n_paths, opts.execution, [&](std::size_t path) {
    double* out = e.positions.data() + path * nt;
    double x = init(path, rng);
    out[0] = x;
    std::uint64_t step = 0;
    bool left = false;
    for (std::size_t k = 1; k < nt; ++k) {
      const double gap = t_grid[k] - t_grid[k - 1];
      const std::size_t n_sub = substeps(gap, opts.dt_sim);
      const double dt = gap / static_cast<double>(n_sub), sq = std::sqrt(dt);
      for (std::size_t j = 0; j < n_sub; ++j) {
        double drift = -pot.dpsi(x);
        if (perturbed) drift -= beta->beta(x);
        x += drift * dt + sq * rng.normal(Stream::forward, path, step++);
      }
      if (!std::isfinite(x)) throw SimulationDiverged("path " + std::to_string(path) + " diverged", path);
      if (opts.domain && !opts.domain->contains(x)) left = true;
      out[k] = x;
    }
    e.exited[path] = left ? 1 : 0;
  });
  return e;
}

double backward_drift(const FlowField& field, const Potential& pot, double t, double x, bool* ok) {
  auto s = field.at(t, x);
  if (ok) *ok = s.ok;
  // (log p)' + Psi' = (log ell)' - Psi'.
  return s.score - pot.dpsi(x);
}

PathEnsemble simulate_time_reversed(const Flow& flow, const Potential& pot, std::size_t n_paths, std::uint64_t seed,
                                    const SimulationOptions& opts) {
  if (flow.size() < 2) throw Error("time reversal needs at least two flow snapshots");
  const GibbsReference ref = gibbs_reference(pot, flow.front().grid);
  const FlowField field(flow, ref);
  if (field.max_gap() > 10.0 * opts.dt_sim * (1.0 + 1e-9))
    throw FlowTooCoarse("flow snapshot spacing exceeds 10 dt_sim");
  const double T = flow.back().time;
  std::vector<double> s_grid;
  for (std::size_t k = flow.size(); k-- > 0;) s_grid.push_back(T - flow[k].time);
  s_grid.front() = 0.0;
  check_grid(s_grid, opts.dt_sim);

  PathEnsemble e;
  e.n_paths = n_paths;
  e.t_grid = s_grid;
  e.seed = seed;
  e.direction = Direction::backward;
  e.horizon = T;
  e.positions.assign(n_paths * s_grid.size(), 0.0);
  e.exited.assign(n_paths, 0);
  const CounterRng rng(seed);
  const auto sampler = density_sampler(flow.back());
  const std::size_t nt = s_grid.size();
  for_each_index(n_paths, opts.execution, [&](std::size_t path) {
    double* out = e.positions.data() + path * nt;
    double x = sampler(path, rng);
    out[0] = x;
    std::uint64_t step = 0;
    bool stopped = false;
    for (std::size_t k = 1; k < nt; ++k) {
      const double gap = s_grid[k] - s_grid[k - 1];
      const std::size_t n_sub = substeps(gap, opts.dt_sim);
      const double dt = gap / static_cast<double>(n_sub), sq = std::sqrt(dt);
      for (std::size_t j = 0; j < n_sub && !stopped; ++j) {
        const double s = s_grid[k - 1] + static_cast<double>(j) * dt;
        bool ok = true;
        const double drift = backward_drift(field, pot, T - s, x, &ok);
        if (!ok) {
          stopped = true;
          break;
        }
        x += drift * dt + sq * rng.normal(Stream::backward, path, step++);
      }
      if (!std::isfinite(x)) throw SimulationDiverged("path " + std::to_string(path) + " diverged", path);
      out[k] = x;
    }
    e.exited[path] = stopped ? 1 : 0;
  });
  return e;
}

std::vector<double> sample_from_density(const GridDensity& p, std::size_t n, std::uint64_t seed) {
  const CounterRng rng(seed);
  auto cdf = p.cdf_edges();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = quantile(p, cdf, rng.uniform(Stream::sampling, i, 0));
  return out;
}

void write_ensemble_csv(std::ostream& os, const PathEnsemble& e) {
  auto old = os.precision(17);
  os << "path_id,t,x\n";
  for (std::size_t p = 0; p < e.n_paths; ++p)
    for (std::size_t k = 0; k < e.t_grid.size(); ++k) os << p << ',' << e.t_grid[k] << ',' << e.x(p, k) << '\n';
  os.precision(old);
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) throw Error("truncated ensemble file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_ensemble_binary(std::ostream& os, const PathEnsemble& e) {
  const char magic[8] = {'E', 'N', 'S', 'F', '1', static_cast<char>(e.direction), 0, 0};
  os.write(magic, 8);
  put<std::uint64_t>(os, e.n_paths);
  put<std::uint64_t>(os, e.t_grid.size());
  put<std::uint64_t>(os, e.seed);
  put<double>(os, e.horizon);
  for (double t : e.t_grid) put<double>(os, t);
  for (double x : e.positions) put<double>(os, x);
  for (auto b : e.exited) put<std::uint8_t>(os, b);
}

PathEnsemble read_ensemble_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, "ENSF1", 5) != 0) throw Error("not an ENSF1 ensemble file");
  PathEnsemble e;
  e.direction = static_cast<Direction>(magic[5]);
  e.n_paths = get<std::uint64_t>(is);
  const auto nt = get<std::uint64_t>(is);
  e.seed = get<std::uint64_t>(is);
  e.horizon = get<double>(is);
  e.t_grid.resize(nt);
  for (auto& t : e.t_grid) t = get<double>(is);
  e.positions.resize(e.n_paths * nt);
  for (auto& x : e.positions) x = get<double>(is);
  e.exited.resize(e.n_paths);
  for (auto& b : e.exited) b = get<std::uint8_t>(is);
  return e;
}

}  // namespace entroflow
