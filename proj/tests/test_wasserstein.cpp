#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "entroflow/errors.hpp"
#include "entroflow/fokker_planck.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/wasserstein.hpp"
#include "support.hpp"

using namespace entroflow;

namespace {

const Grid kGrid = Grid::make(-8, 8, 4096);

GridDensity shifted(const GridDensity& p, int cells) {
  GridDensity r = p;
  std::fill(r.values.begin(), r.values.end(), 0.0);
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const long j = static_cast<long>(i) + cells;
    if (j >= 0 && j < static_cast<long>(p.values.size())) r.values[static_cast<std::size_t>(j)] = p.values[i];
  }
  return r;
}

double l1(const GridDensity& a, const GridDensity& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.grid.h();
}

}  // namespace

TEST_CASE("w2 basic examples") {
  auto p = GridDensity::gaussian(kGrid, 0.5, 0.8);
  CHECK(w2(p, p) == 0.0);
  const double delta = 64 * kGrid.h();
  CHECK(w2(p, shifted(p, 64)) == doctest::Approx(delta).epsilon(1e-6));
  CHECK(w2_exact(p, shifted(p, 64)) == doctest::Approx(delta).epsilon(1e-12));
  auto r = GridDensity::gaussian(kGrid, -0.7, 1.3);
  CHECK(w2(p, r) == doctest::Approx(std::hypot(1.2, 0.5)).epsilon(1e-5));
  CHECK_THROWS_AS(w2(p, r, 512), Error);
}

TEST_CASE("quantile representation") {
  auto p = GridDensity::gaussian(kGrid, 0.3, 0.7);
  auto q = quantile_rep(p);
  CHECK(std::is_sorted(q.x.begin(), q.x.end()));
  double m = 0.0;
  for (double x : q.x) m += x;
  CHECK(m / static_cast<double>(q.x.size()) == doctest::Approx(p.mean()).epsilon(1e-6));
  auto r = GridDensity::gaussian(kGrid, -1.0, 1.1);
  CHECK(std::abs(w2(p, r, std::size_t{1} << 20) - w2(p, r, std::size_t{1} << 21)) < 1e-6);
}

TEST_CASE("metric axioms on built-in densities") {
  const auto g = Grid::make(-4, 4, 2048);
  std::vector<GridDensity> ds{GridDensity::gaussian(g, 0, 0.5), GridDensity::gaussian(g, 1, 0.3),
                              gibbs_reference(Potential::double_well(), g).stationary_density()};
  for (auto& a : ds)
    for (auto& b : ds) {
      CHECK(std::abs(w2(a, b) - w2(b, a)) <= 1e-12);
      for (auto& c : ds) CHECK(w2(a, b) + w2(b, c) - w2(a, c) >= -1e-10);
    }
}

TEST_CASE("optimal map") {
  auto p = GridDensity::gaussian(kGrid, 0.5, 0.8);
  // Where the CDF is flat to round-off the inverse is ill-conditioned; test the bulk.
  auto same = optimal_map(p, p).displacement();
  for (std::size_t i = 0; i < kGrid.n_cells; ++i)
    if (p.values[i] > 1e-4) CHECK(std::abs(same[i]) <= 1e-10);
  const double delta = 64 * kGrid.h();
  auto m = optimal_map(p, shifted(p, 64));
  auto disp = m.displacement();
  for (std::size_t i = 0; i < kGrid.n_cells; ++i)
    if (p.values[i] > 1e-4) CHECK(disp[i] == doctest::Approx(delta).epsilon(1e-10));
  auto dw = gibbs_reference(Potential::double_well(), kGrid).stationary_density();
  auto gs = GridDensity::gaussian(kGrid, 0.4, 0.6);
  auto map = optimal_map(dw, gs);
  CHECK(std::is_sorted(map.target.begin(), map.target.end()));
  CHECK(map.l2_norm(dw) == doctest::Approx(w2(dw, gs)).epsilon(1e-6));
}

TEST_CASE("displacement interpolation") {
  auto p0 = GridDensity::gaussian(kGrid, -1.0, 0.5), p1 = GridDensity::gaussian(kGrid, 1.5, 0.9);
  CHECK(l1(displacement_interpolation(p0, p1, 0.0).density, p0) <= 1e-4);
  CHECK(l1(displacement_interpolation(p0, p1, 1.0).density, p1) <= 1e-4);
  const double W = w2_exact(p0, p1);
  for (double t : {0.25, 0.5, 0.75}) {
    auto pt = displacement_interpolation(p0, p1, t);
    CHECK(std::abs(pt.renormalization - 1.0) <= 1e-6);
    CHECK(w2_exact(p0, pt.density) == doctest::Approx(t * W).epsilon(1e-4));
    const double m = -1.0 + 2.5 * t, s = 0.5 + 0.4 * t;
    CHECK(pt.density.mean() == doctest::Approx(m).epsilon(1e-4));
    CHECK(pt.density.second_moment() - m * m == doctest::Approx(s * s).epsilon(1e-4));
  }
}

TEST_CASE("linearized transport") {
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  auto q = ref.stationary_density();
  auto vq = velocity_field(q, likelihood_field(q, ref));
  for (double tau : {0.0, 0.1, 1.0}) CHECK(l1(linearized_transport(q, vq, tau).density, q) <= 1e-9);

  const double t0 = 0.5;
  std::vector<double> offs{0.004, 0.002, 0.001}, times{0.0, t0};
  for (double d : offs) times.push_back(t0 + d);
  std::sort(times.begin(), times.end());
  auto flow = solve_fokker_planck(Potential::quadratic(), GridDensity::gaussian(kGrid, 2.0, 0.5), times);
  const auto& p = flow[snapshot_index(flow, t0)];
  auto field = likelihood_field(p, ref);
  auto v = velocity_field(p, field);
  CHECK(l1(linearized_transport(p, v, 0.0).density, p) <= 1e-12);
  const double primary = 0.5 * std::sqrt(fisher_information(p, field).value.value());
  for (double d : offs) {
    auto px = linearized_transport(p, v, d).density;
    CHECK(w2_exact(flow[snapshot_index(flow, t0 + d)], px) / d <= 0.1 * primary);
  }
  // a = 3x / 2 for N(0, 2) under the quadratic potential, so the map folds beyond tau = 4 / 3.
  auto wide = GridDensity::gaussian(kGrid, 0.0, std::sqrt(2.0));
  auto vw = velocity_field(wide, likelihood_field(wide, ref));
  CHECK_NOTHROW(linearized_transport(wide, vw, 1.2));
  try {
    linearized_transport(wide, vw, 10.0);
    FAIL("expected StepTooLarge");
  } catch (const StepTooLarge& e) {
    CHECK(e.max_step == doctest::Approx(4.0 / 3.0).epsilon(1e-3));
  }
}

TEST_CASE("Wasserstein slopes on OU and stationary flows") {
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  const double t0 = 0.5;
  std::vector<double> offs{0.02, 0.01, 0.005}, times{0.0, t0};
  for (double d : offs) {
    times.push_back(t0 - d);
    times.push_back(t0 + d);
  }
  std::sort(times.begin(), times.end());
  auto flow = solve_fokker_planck(Potential::quadratic(), GridDensity::gaussian(kGrid, 2.0, 0.5), times);
  const double i0 = fisher_information(flow[snapshot_index(flow, t0)], ref).value.value();
  auto table = slope_w2(flow, t0, offs, true);
  CHECK(table.value == doctest::Approx(0.5 * std::sqrt(i0)).epsilon(0.02));
  auto h = entropy_slope_central(flow, ref, t0, offs);
  CHECK(h.value / table.value == doctest::Approx(-std::sqrt(i0)).epsilon(0.05));

  std::ostringstream os;
  write_slope_table_csv(os, table);
  CHECK(os.str().rfind("offset,w2,ratio\n", 0) == 0);
  CHECK(os.str().find("extrapolated,,") != std::string::npos);

  auto q = ref.stationary_density();
  q.time = t0 - 0.02;
  std::vector<double> st;
  for (double t : times)
    if (t >= t0 - 0.02) st.push_back(t);
  auto still = solve_fokker_planck(Potential::quadratic(), q, st);
  CHECK(std::abs(slope_w2(still, t0, offs, true).value) <= 1e-8);
}
