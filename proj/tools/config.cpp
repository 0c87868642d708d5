#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "experiment.hpp"

namespace entroflow::app {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config error: " + field + ": " + what);
}

class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {}

  toml::node_view<const toml::node> node(const std::string& path) {
    used_.insert(path);
    return root_.at_path(path);
  }

  void number(const std::string& path, double& out) {
    auto n = node(path);
    if (!n) return;
    if (auto v = n.value_exact<double>()) {
      out = *v;
    } else if (auto i = n.value_exact<std::int64_t>()) {
      out = static_cast<double>(*i);
    } else {
      fail(path, "expected a number");
    }
    if (!std::isfinite(out)) fail(path, "must be finite");
  }

  void count(const std::string& path, std::size_t& out) {
    auto n = node(path);
    if (!n) return;
    auto i = n.value_exact<std::int64_t>();
    if (!i) fail(path, "expected an integer");
    if (*i < 0) fail(path, "must be nonnegative (got " + std::to_string(*i) + ")");
    out = static_cast<std::size_t>(*i);
  }

  void seed(const std::string& path, std::uint64_t& out) {
    std::size_t v = out;
    count(path, v);
    out = v;
  }

  void text(const std::string& path, std::string& out) {
    auto n = node(path);
    if (!n) return;
    auto s = n.value_exact<std::string>();
    if (!s) fail(path, "expected a string");
    out = *s;
  }

  void flag(const std::string& path, bool& out) {
    auto n = node(path);
    if (!n) return;
    auto b = n.value_exact<bool>();
    if (!b) fail(path, "expected true or false");
    out = *b;
  }

  void numbers(const std::string& path, std::vector<double>& out) {
    auto n = node(path);
    if (!n) return;
    const auto* arr = n.as_array();
    if (!arr) fail(path, "expected an array of numbers");
    out.clear();
    for (const auto& e : *arr) {
      if (auto v = e.value_exact<double>()) {
        out.push_back(*v);
      } else if (auto i = e.value_exact<std::int64_t>()) {
        out.push_back(static_cast<double>(*i));
      } else {
        fail(path, "expected an array of numbers");
      }
    }
  }

  void strings(const std::string& path, std::vector<std::string>& out) {
    auto n = node(path);
    if (!n) return;
    const auto* arr = n.as_array();
    if (!arr) fail(path, "expected an array of strings");
    out.clear();
    for (const auto& e : *arr) {
      auto s = e.value_exact<std::string>();
      if (!s) fail(path, "expected an array of strings");
      out.push_back(*s);
    }
  }

  void bump(const std::string& path, Bump& b) {
    number(path + ".center", b.center);
    number(path + ".width", b.width);
    number(path + ".amplitude", b.amplitude);
  }

  // Every key in the document must have been read.
  void reject_unknown() const { walk(root_, ""); }

 private:
  void walk(const toml::table& t, const std::string& prefix) const {
    for (const auto& [k, v] : t) {
      const std::string path = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
      if (used_.count(path)) continue;
      if (const auto* sub = v.as_table()) {
        walk(*sub, path);
        continue;
      }
      fail(path, "unknown key");
    }
  }

  const toml::table& root_;
  std::set<std::string> used_;
};

void check_offsets(const std::string& field, const std::vector<double>& offs) {
  if (offs.empty()) fail(field, "must not be empty");
  for (std::size_t i = 0; i < offs.size(); ++i) {
    if (!(offs[i] > 0.0)) fail(field, "offsets must be positive");
    if (i > 0 && !(offs[i] < offs[i - 1])) fail(field, "offsets must be strictly decreasing");
  }
}

void positive(const std::string& field, double v) {
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "must be positive (got " << v << ")";
    fail(field, os.str());
  }
}

void at_least(const std::string& field, std::size_t v, std::size_t lo) {
  if (v < lo) fail(field, "must be at least " + std::to_string(lo) + " (got " + std::to_string(v) + ")");
}

// n such that span / n equals step to within round-off; 0 if none.
std::size_t divisions(double span, double step) {
  const double n = std::round(span / step);
  if (n < 1 || std::abs(n * step - span) > 1e-9 * std::max(1.0, span)) return 0;
  return static_cast<std::size_t>(n);
}

}  // namespace

Config parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "line " << e.source().begin.line << ": " << e.description();
    fail("toml", os.str());
  }
  Config c;
  c.source = text;
  c.base_dir = base_dir;
  Reader r(root);
  std::size_t schema = 0;
  r.count("schema", schema);
  if (schema != 1) fail("schema", "expected schema = 1");
  c.schema = 1;
  r.text("scenario", c.scenario);
  r.seed("seed", c.seed);
  r.strings("suites", c.suites);

  r.text("potential.kind", c.potential);
  r.number("potential.alpha", c.alpha);
  r.numbers("potential.coefficients", c.coefficients);

  r.text("initial.kind", c.initial.kind);
  r.number("initial.mean", c.initial.mean);
  r.number("initial.std", c.initial.std_dev);
  r.numbers("initial.weights", c.initial.weights);
  r.numbers("initial.means", c.initial.means);
  r.numbers("initial.stds", c.initial.std_devs);
  r.text("initial.path", c.initial.path);

  r.number("grid.x_min", c.x_min);
  r.number("grid.x_max", c.x_max);
  r.count("grid.cells", c.cells);

  r.number("time.T", c.T);
  r.number("time.dt_max", c.dt_max);
  r.count("time.snapshots", c.snapshots);

  if (auto n = r.node("perturbation.bumps")) {
    const auto* arr = n.as_array();
    if (!arr) fail("perturbation.bumps", "expected an array of tables");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto* t = (*arr)[i].as_table();
      const std::string field = "perturbation.bumps[" + std::to_string(i) + "]";
      if (!t) fail(field, "expected a table");
      Bump b;
      for (const auto& [k, v] : *t) {
        const std::string key(k.str());
        double* dst = key == "center" ? &b.center : key == "width" ? &b.width : key == "amplitude" ? &b.amplitude
                                                                                                      : nullptr;
        if (!dst) fail(field + "." + key, "unknown key");
        if (auto d = v.value<double>()) {
          *dst = *d;
        } else {
          fail(field + "." + key, "expected a number");
        }
      }
      c.bumps.push_back(b);
    }
  }

  r.flag("flow.solver_checks", c.flow.solver_checks);
  r.number("flow.bk_t", c.flow.bk_t);
  r.count("flow.bk_steps", c.flow.bk_steps);

  r.numbers("debruijn.t0", c.debruijn.t0);
  r.numbers("debruijn.offsets", c.debruijn.offsets);

  r.number("steepest.t0", c.steepest.t0);
  r.numbers("steepest.offsets", c.steepest.offsets);
  r.number("steepest.dt_max", c.steepest.dt_max);
  r.count("steepest.random_bumps", c.steepest.random_bumps);
  r.number("steepest.collinear_lambda", c.steepest.collinear_lambda);

  auto& m = c.martingale;
  r.number("martingale.T", m.T);
  r.number("martingale.dt_sim", m.dt_sim);
  r.count("martingale.n_paths", m.n_paths);
  r.number("martingale.checkpoint_step", m.checkpoint_step);
  r.number("martingale.pair_step", m.pair_step);
  r.count("martingale.bins", m.bins);
  r.flag("martingale.negative_control", m.negative_control);
  r.flag("martingale.rate", m.rate);
  r.number("martingale.rate_t0", m.rate_t0);
  r.number("martingale.rate_window", m.rate_window);
  r.count("martingale.rate_paths", m.rate_paths);
  r.number("martingale.rate_dt_sim", m.rate_dt_sim);
  r.count("martingale.rate_bins", m.rate_bins);
  r.bump("martingale.rate_bump", m.rate_bump);

  r.count("hwi.pairs", c.hwi.pairs);
  r.count("hwi.profile_steps", c.hwi.profile_steps);
  r.numbers("hwi.offsets", c.hwi.offsets);
  r.number("hwi.x_min", c.hwi.x_min);
  r.number("hwi.x_max", c.hwi.x_max);
  r.count("hwi.cells", c.hwi.cells);

  r.number("reversal.T", c.reversal.T);
  r.count("reversal.snapshots", c.reversal.snapshots);
  r.count("reversal.n_paths", c.reversal.n_paths);
  r.number("reversal.dt_sim", c.reversal.dt_sim);
  r.count("reversal.seeds", c.reversal.seeds);

  auto& p = c.policy;
  for (auto [key, dst] : std::initializer_list<std::pair<const char*, double*>>{
           {"slope_rel", &p.slope_rel},
           {"w2_slope_rel", &p.w2_slope_rel},
           {"ratio_rel", &p.ratio_rel},
           {"steepest_rel", &p.steepest_rel},
           {"gap_floor", &p.gap_floor},
           {"ibp_abs", &p.ibp_abs},
           {"collinear_abs", &p.collinear_abs},
           {"mass_abs", &p.mass_abs},
           {"stationarity_rel", &p.stationarity_rel},
           {"closed_form_l1", &p.closed_form_l1},
           {"bk_residual", &p.bk_residual},
           {"bk_halving", &p.bk_halving},
           {"z_bin", &p.z_bin},
           {"z_max", &p.z_max},
           {"max_fraction", &p.max_fraction},
           {"qv_rel", &p.qv_rel},
           {"mean_se", &p.mean_se},
           {"mean_rel", &p.mean_rel},
           {"rate_aggregate", &p.rate_aggregate},
           {"ratio_bin_rel", &p.ratio_bin_rel},
           {"ratio_bin_floor", &p.ratio_bin_floor},
           {"deviation_intercept", &p.deviation_intercept},
           {"hwi_slope_rel", &p.hwi_slope_rel},
           {"convexity_c_ratio", &p.convexity_c_ratio},
           {"taylor_rel", &p.taylor_rel},
           {"ks_alpha", &p.ks_alpha}})
    r.number(std::string("policy.") + key, *dst);

  r.text("output.dir", c.out_dir);
  r.reject_unknown();
  validate(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("--config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate(const Config& c) {
  for (const auto& s : c.suites) {
    bool known = false;
    for (const auto& k : kSuites) known = known || k == s;
    if (!known) fail("suites", "unknown suite '" + s + "'");
  }
  if (c.potential == "quadratic") {
    positive("potential.alpha", c.alpha);
  } else if (c.potential == "polynomial") {
    if (c.coefficients.empty()) fail("potential.coefficients", "required for a polynomial potential");
  } else if (c.potential != "double_well" && c.potential != "free") {
    fail("potential.kind", "expected quadratic, double_well, free or polynomial");
  }

  const auto& in = c.initial;
  if (in.kind == "gaussian") {
    positive("initial.std", in.std_dev);
  } else if (in.kind == "mixture") {
    if (in.weights.empty() || in.weights.size() != in.means.size() || in.weights.size() != in.std_devs.size())
      fail("initial.weights", "weights, means and stds must be nonempty and of equal length");
    for (double w : in.weights) positive("initial.weights", w);
    for (double s : in.std_devs) positive("initial.stds", s);
  } else if (in.kind == "file") {
    if (in.path.empty()) fail("initial.path", "required for a file initial density");
    if (!std::filesystem::exists(c.base_dir / in.path)) fail("initial.path", "file not found: " + in.path);
  } else if (in.kind != "gibbs") {
    fail("initial.kind", "expected gaussian, mixture, file or gibbs");
  }

  if (!(c.x_min < c.x_max)) fail("grid.x_max", "must exceed grid.x_min");
  at_least("grid.cells", c.cells, 16);
  positive("time.T", c.T);
  positive("time.dt_max", c.dt_max);
  at_least("time.snapshots", c.snapshots, 2);
  for (std::size_t i = 0; i < c.bumps.size(); ++i) {
    const std::string f = "perturbation.bumps[" + std::to_string(i) + "]";
    positive(f + ".width", c.bumps[i].width);
    if (c.bumps[i].center - c.bumps[i].width <= c.x_min || c.bumps[i].center + c.bumps[i].width >= c.x_max)
      fail(f, "bump support must lie inside the grid");
  }

  positive("flow.bk_t", c.flow.bk_t);
  at_least("flow.bk_steps", c.flow.bk_steps, 4);

  check_offsets("debruijn.offsets", c.debruijn.offsets);
  if (c.debruijn.t0.empty()) fail("debruijn.t0", "must not be empty");
  for (double t0 : c.debruijn.t0)
    if (t0 - c.debruijn.offsets.front() <= 0.0) fail("debruijn.t0", "t0 - max offset must be positive");

  check_offsets("steepest.offsets", c.steepest.offsets);
  positive("steepest.t0", c.steepest.t0);
  positive("steepest.dt_max", c.steepest.dt_max);
  if (c.steepest.collinear_lambda <= -0.5) fail("steepest.collinear_lambda", "must exceed -1/2");
  if (c.steepest.collinear_lambda == 0.0) fail("steepest.collinear_lambda", "must be nonzero");

  const auto& m = c.martingale;
  positive("martingale.T", m.T);
  positive("martingale.dt_sim", m.dt_sim);
  at_least("martingale.n_paths", m.n_paths, 2);
  at_least("martingale.bins", m.bins, 1);
  if (!divisions(m.T, m.dt_sim)) fail("martingale.dt_sim", "must divide martingale.T");
  positive("martingale.checkpoint_step", m.checkpoint_step);
  positive("martingale.pair_step", m.pair_step);
  if (!divisions(m.T, m.checkpoint_step) || !divisions(m.checkpoint_step, m.dt_sim))
    fail("martingale.checkpoint_step", "must divide martingale.T and be a multiple of martingale.dt_sim");
  if (!divisions(m.T, m.pair_step) || !divisions(m.pair_step, m.checkpoint_step))
    fail("martingale.pair_step", "must divide martingale.T and be a multiple of martingale.checkpoint_step");
  if (m.rate) {
    positive("martingale.rate_t0", m.rate_t0);
    positive("martingale.rate_window", m.rate_window);
    positive("martingale.rate_dt_sim", m.rate_dt_sim);
    at_least("martingale.rate_bins", m.rate_bins, 1);
    positive("martingale.rate_bump.width", m.rate_bump.width);
    if (!divisions(m.rate_window / 8.0, m.rate_dt_sim))
      fail("martingale.rate_dt_sim", "must divide martingale.rate_window / 8");
  }

  at_least("hwi.profile_steps", c.hwi.profile_steps, 4);
  check_offsets("hwi.offsets", c.hwi.offsets);
  if (c.hwi.offsets.front() > 1.0) fail("hwi.offsets", "offsets must not exceed 1");
  if (!(c.hwi.x_min < c.hwi.x_max)) fail("hwi.x_max", "must exceed hwi.x_min");
  at_least("hwi.cells", c.hwi.cells, 16);

  positive("reversal.T", c.reversal.T);
  positive("reversal.dt_sim", c.reversal.dt_sim);
  at_least("reversal.snapshots", c.reversal.snapshots, 2);
  at_least("reversal.n_paths", c.reversal.n_paths, 2);
  at_least("reversal.seeds", c.reversal.seeds, 1);

  positive("policy.ks_alpha", c.policy.ks_alpha);
  if (c.out_dir.empty()) fail("output.dir", "must not be empty");
}

Potential Config::make_potential() const {
  if (potential == "quadratic") return Potential::quadratic(alpha);
  if (potential == "double_well") return Potential::double_well();
  if (potential == "free") return Potential::free();
  return Potential::polynomial(coefficients);
}

GridDensity Config::make_initial(const Grid& g) const {
  if (initial.kind == "gaussian") return GridDensity::gaussian(g, initial.mean, initial.std_dev);
  if (initial.kind == "gibbs") return gibbs_reference(make_potential(), g).stationary_density();
  if (initial.kind == "mixture") {
    return GridDensity::from_function(g, [&](double x) {
      double v = 0.0;
      for (std::size_t j = 0; j < initial.weights.size(); ++j) {
        const double z = (x - initial.means[j]) / initial.std_devs[j];
        v += initial.weights[j] * std::exp(-0.5 * z * z) / initial.std_devs[j];
      }
      return v;
    });
  }
  std::ifstream in(base_dir / initial.path);
  GridDensity p = read_density_csv(in);
  const double tol = 1e-9 * (g.x_max - g.x_min);
  if (p.grid.n_cells != g.n_cells || std::abs(p.grid.x_min - g.x_min) > tol || std::abs(p.grid.x_max - g.x_max) > tol)
    fail("initial.path", "density grid does not match the configured grid");
  p.grid = g;
  return p;
}

}  // namespace entroflow::app
