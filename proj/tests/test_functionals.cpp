#include <doctest.h>

#include <cmath>
#include <sstream>

#include "entroflow/fokker_planck.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/rng.hpp"
#include "support.hpp"

using namespace entroflow;
using testsupport::fixture;
using testsupport::ou_marginal;

namespace {

const Grid kGrid = Grid::make(-8, 8, 4096);

double H(const GridDensity& p, const GibbsReference& ref) { return relative_entropy(p, ref).value.value(); }
double I(const GridDensity& p, const GibbsReference& ref) { return fisher_information(p, ref).value.value(); }

Flow ou_flow(const std::vector<double>& times) {
  return solve_fokker_planck(Potential::quadratic(), GridDensity::gaussian(kGrid, 2.0, 0.5), times);
}

}  // namespace

TEST_CASE("relative entropy closed forms") {
  for (auto pot : {Potential::quadratic(), Potential::double_well()}) {
    auto ref = gibbs_reference(pot, kGrid);
    CHECK(H(ref.stationary_density(), ref) == doctest::Approx(-std::log(ref.Z.value())).epsilon(1e-12));
  }
  auto free_ref = gibbs_reference(Potential::free(), kGrid);
  for (double s : {0.3, 1.0, 1.5}) {
    auto p = GridDensity::gaussian(kGrid, 0.0, s);
    CHECK(H(p, free_ref) == doctest::Approx(-0.5 * std::log(2 * M_PI * M_E * s * s)).epsilon(1e-6));
  }
}

TEST_CASE("the Gibbs state minimizes relative entropy") {
  auto ref = gibbs_reference(Potential::double_well(), kGrid);
  const double h_min = -std::log(ref.Z.value());
  CounterRng rng(42);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const double c = -2.0 + 4.0 * rng.uniform(Stream::suite, k, 0);
    const double a = 0.9 * (2.0 * rng.uniform(Stream::suite, k, 1) - 1.0);
    auto q = ref.stationary_density();
    for (std::size_t i = 0; i < kGrid.n_cells; ++i) q.values[i] *= 1.0 + a * std::exp(-(kGrid.center(i) - c) * (kGrid.center(i) - c));
    q.normalize();
    CHECK(H(q, ref) >= h_min);
  }
}

TEST_CASE("Fisher information closed forms") {
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  CHECK(I(ref.stationary_density(), ref) <= 1e-18);
  auto free_ref = gibbs_reference(Potential::free(), kGrid);
  for (double s : {0.5, 1.0}) CHECK(I(GridDensity::gaussian(kGrid, 0.3, s), free_ref) == doctest::Approx(1 / (s * s)).epsilon(1e-6));
}

TEST_CASE("OU Fisher information and dissipated entropy match the oracle fixtures") {
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  for (double t : {0.2, 0.5, 1.0}) {
    const auto g = ou_marginal(2.0, 0.5, t);
    auto p = GridDensity::gaussian(kGrid, g.m, std::sqrt(g.v));
    const std::string key = t == 0.2 ? "ou_fisher_t0.2" : t == 0.5 ? "ou_fisher_t0.5" : "ou_fisher_t1.0";
    CHECK(I(p, ref) == doctest::Approx(fixture(key)).epsilon(1e-5));
  }
  auto flow = ou_flow(linspace(0.0, 0.5, 101));
  CHECK(H(flow.front(), ref) == doctest::Approx(fixture("ou_H0")).epsilon(1e-5));
  CHECK(H(flow.back(), ref) == doctest::Approx(fixture("ou_H_T0.5")).epsilon(1e-3));
  std::vector<double> t, i;
  for (const auto& p : flow) {
    t.push_back(p.time);
    i.push_back(I(p, ref));
  }
  CHECK(0.5 * trapezoid(t, i) == doctest::Approx(fixture("ou_EF0_T0.5")).epsilon(1e-3));
}

TEST_CASE("integral dissipation identity and monotone entropy along flows") {
  for (auto pot : {Potential::quadratic(), Potential::double_well()}) {
    auto ref = gibbs_reference(pot, kGrid);
    auto flow = solve_fokker_planck(pot, GridDensity::gaussian(kGrid, 1.5, 0.3), linspace(0.0, 0.5, 201));
    std::vector<double> t, i;
    for (std::size_t k = 0; k < flow.size(); ++k) {
      t.push_back(flow[k].time);
      i.push_back(I(flow[k], ref));
      if (k > 0) {
        CHECK(H(flow[k], ref) <= H(flow[k - 1], ref));
        if (i.back() > 1e-6) CHECK(H(flow[k], ref) < H(flow[k - 1], ref));
      }
    }
    CHECK(H(flow.front(), ref) - H(flow.back(), ref) == doctest::Approx(0.5 * trapezoid(t, i)).epsilon(0.01));
  }
}

TEST_CASE("free energy identities") {
  for (auto pot : {Potential::quadratic(), Potential::double_well(), Potential::free()}) {
    auto ref = gibbs_reference(pot, kGrid);
    auto p = GridDensity::gaussian(kGrid, 0.7, 0.6);
    auto f = free_energy(p, ref);
    CHECK(std::abs(2 * f.free - H(p, ref)) <= 1e-8);
    if (pot.kind() == PotentialKind::free) {
      CHECK(f.energy == 0.0);
      CHECK(f.free == doctest::Approx(0.5 * f.entropy));
    }
  }
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  CHECK(free_energy(GridDensity::gaussian(kGrid, 0.0, std::sqrt(0.5)), ref).energy == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("velocity field") {
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  auto q = ref.stationary_density();
  for (double v : velocity_field(q, likelihood_field(q, ref))) CHECK(std::abs(v) <= 1e-9);

  const auto g = ou_marginal(2.0, 0.5, 0.5);
  auto p = GridDensity::gaussian(kGrid, g.m, std::sqrt(g.v));
  auto field = likelihood_field(p, ref);
  auto v = velocity_field(p, field);
  CHECK(std::abs(weighted_inner(p, v, v) - 0.25 * fisher_information(p, field).value.value()) <= 1e-10);
  for (std::size_t i = 1; i + 1 < kGrid.n_cells; i += 61) {
    if (!field.valid[i - 1] || !field.valid[i + 1]) continue;
    const double x = kGrid.center(i);
    CHECK(v[i] == doctest::Approx(-0.5 * (-(x - g.m) / g.v + 2 * x)).epsilon(1e-9));
  }

  Perturbation beta({Bump{1.0, 0.5, 0.5}});
  auto vb = velocity_field(p, field, &beta);
  for (std::size_t i = 0; i < kGrid.n_cells; i += 31) CHECK(vb[i] == doctest::Approx(v[i] - beta.beta(kGrid.center(i))));
}

TEST_CASE("functionals are stable under grid refinement") {
  auto fine = Grid::make(-8, 8, 8192);
  for (auto pot : {Potential::quadratic(), Potential::double_well()}) {
    auto rc = gibbs_reference(pot, kGrid), rf = gibbs_reference(pot, fine);
    auto pc = GridDensity::gaussian(kGrid, 1.0, 0.5), pf = GridDensity::gaussian(fine, 1.0, 0.5);
    CHECK(H(pc, rc) == doctest::Approx(H(pf, rf)).epsilon(1e-4));
    CHECK(I(pc, rc) == doctest::Approx(I(pf, rf)).epsilon(1e-4));
    CHECK(free_energy(pc, rc).energy == doctest::Approx(free_energy(pf, rf).energy).epsilon(1e-4));
  }
}

TEST_CASE("masked mass is negligible and diagnostics serialize") {
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  auto flow = ou_flow(linspace(0.0, 0.2, 21));
  for (const auto& p : flow) CHECK(fisher_information(p, ref).masked_mass <= 1e-8);
  auto rows = diagnostics_series(flow, ref);
  REQUIRE(rows.size() == flow.size());
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].t > rows[k - 1].t);
  std::ostringstream os;
  write_diagnostics_csv(os, rows);
  CHECK(os.str().rfind("t,H,I,F,E,S,w2_to_initial,dHdt_fd,dHdt_target\n", 0) == 0);
}

TEST_CASE("de Bruijn slope on the OU preset") {
  auto ref = gibbs_reference(Potential::quadratic(), kGrid);
  std::vector<double> offs{0.02, 0.01, 0.005}, times{0.0};
  for (double d : offs) {
    times.push_back(0.5 - d);
    times.push_back(0.5 + d);
  }
  times.push_back(0.5);
  std::sort(times.begin(), times.end());
  auto flow = ou_flow(times);
  auto s = entropy_slope_central(flow, ref, 0.5, offs);
  CHECK(s.value == doctest::Approx(-0.5 * I(flow[snapshot_index(flow, 0.5)], ref)).epsilon(0.02));
  auto r = entropy_slope_one_sided(flow, ref, 0.5, offs, +1);
  CHECK(r.value == doctest::Approx(s.value).epsilon(0.02));
}
