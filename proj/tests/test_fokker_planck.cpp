#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "entroflow/errors.hpp"
#include "entroflow/fokker_planck.hpp"
#include "entroflow/functionals.hpp"
#include "support.hpp"

using namespace entroflow;
using testsupport::l1_to_gaussian;
using testsupport::ou_marginal;

namespace {

double sup_diff(const GridDensity& a, const GridDensity& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

Flow ou_flow(std::size_t n_cells, double dt, const std::vector<double>& times) {
  const auto g = Grid::make(-8, 8, n_cells);
  SolverOptions o;
  o.dt_max = dt;
  return solve_fokker_planck(Potential::quadratic(), GridDensity::gaussian(g, 2.0, 0.5), times, o);
}

}  // namespace

TEST_CASE("Gibbs state is a fixed point of the step") {
  const auto g = Grid::make(-8, 8, 4096);
  for (auto pot : {Potential::quadratic(), Potential::double_well()}) {
    auto q = gibbs_reference(pot, g).stationary_density();
    for (double dt : {1e-4, 1e-2, 1.0}) CHECK(sup_diff(step(q, pot, nullptr, dt), q) <= 1e-8);
  }
}

TEST_CASE("mass and positivity are preserved per step") {
  const auto g = Grid::make(-4, 4, 1024);
  Perturbation beta({Bump{1.0, 0.5, 0.5}});
  auto p = GridDensity::gaussian(g, 1.5, 0.3);
  for (int k = 0; k < 200; ++k) {
    const double before = p.mass();
    p = step(p, Potential::double_well(), &beta, 1e-3);
    REQUIRE(std::abs(p.mass() - before) <= 1e-10);
    REQUIRE(*std::min_element(p.values.begin(), p.values.end()) >= 0.0);
  }
}

TEST_CASE("OU closed-form marginal within 1e-3 in L1") {
  auto flow = ou_flow(4096, 1e-4, {0.0, 0.25, 0.5, 1.0});
  for (const auto& p : flow) CHECK(l1_to_gaussian(p, ou_marginal(2.0, 0.5, p.time)) <= 1e-3);
}

TEST_CASE("OU convergence orders in h and dt") {
  const auto ex = ou_marginal(2.0, 0.5, 0.5);
  std::vector<double> hs, eh;
  for (std::size_t n : {256u, 512u, 1024u}) {
    hs.push_back(16.0 / static_cast<double>(n));
    eh.push_back(l1_to_gaussian(ou_flow(n, 1e-5, {0.0, 0.5}).back(), ex));
  }
  CHECK(observed_order(hs, eh) >= 1.8);
  std::vector<double> dts{4e-3, 2e-3, 1e-3}, ed;
  for (double dt : dts) ed.push_back(l1_to_gaussian(ou_flow(4096, dt, {0.0, 0.5}).back(), ex));
  CHECK(observed_order(dts, ed) >= 0.9);
}

TEST_CASE("free potential spreads like the heat kernel") {
  const auto g = Grid::make(-6, 6, 4096);
  const double s0 = 0.05, t = 0.5;
  auto flow = solve_fokker_planck(Potential::free(), GridDensity::gaussian(g, 0.0, s0), {0.0, t});
  const double var0 = flow.front().second_moment(), var1 = flow.back().second_moment();
  CHECK((var1 - var0) == doctest::Approx(t).epsilon(0.01));
}

TEST_CASE("solve lands on requested times and validates inputs") {
  auto flow = ou_flow(512, 1e-3, {0.0, 0.0123, 0.05});
  REQUIRE(flow.size() == 3);
  CHECK(flow[1].time == 0.0123);
  const auto g = Grid::make(-8, 8, 512);
  CHECK_THROWS_AS(step(GridDensity::gaussian(g, 0, 1), Potential::quadratic(), nullptr, 0.0), StepFailure);
  Perturbation outside({Bump{7.8, 0.5, 1.0}});
  CHECK_THROWS_AS(solve_fokker_planck(Potential::quadratic(), GridDensity::gaussian(g, 0, 1), {0.0, 0.1}, {}, &outside),
                  SupportTouchesBoundary);
}

TEST_CASE("backwards Kolmogorov residual") {
  auto dense_ou = [](std::size_t n, double dt) {
    std::vector<double> times{0.0};
    for (int k = 0; k <= static_cast<int>(0.02 / dt + 0.5); ++k) times.push_back(0.2 + k * dt);
    auto flow = ou_flow(n, dt, times);
    flow.erase(flow.begin());
    return backwards_kolmogorov_residual(flow, Potential::quadratic());
  };
  const double r0 = dense_ou(4096, 1e-4);
  const double r1 = dense_ou(8192, 5e-5);
  CHECK(r0 <= 1e-2);
  CHECK(r1 <= 0.5 * r0);

  const auto g = Grid::make(-8, 8, 1024);
  auto q = gibbs_reference(Potential::quadratic(), g).stationary_density();
  auto still = solve_fokker_planck(Potential::quadratic(), q, linspace(0.0, 0.01, 11));
  CHECK(backwards_kolmogorov_residual(still, Potential::quadratic()) <= 1e-8);
}

TEST_CASE("likelihood field examples") {
  const auto g = Grid::make(-8, 8, 4096);
  SUBCASE("stationary likelihood is constant") {
    auto ref = gibbs_reference(Potential::quadratic(), g);
    auto f = likelihood_field(ref.stationary_density(), ref);
    for (std::size_t i = 0; i < g.n_cells; ++i) {
      CHECK(std::abs(f.score[i]) <= 1e-9);
      CHECK(f.l[i] == doctest::Approx(1.0 / ref.Z.value()).epsilon(1e-9));
    }
  }
  SUBCASE("free potential: ell = p") {
    auto ref = gibbs_reference(Potential::free(), g);
    auto p = GridDensity::gaussian(g, 0.5, 1.0);
    auto f = likelihood_field(p, ref);
    for (std::size_t i = 1; i + 1 < g.n_cells; i += 97) {
      CHECK(f.l[i] == doctest::Approx(p.values[i]));
      CHECK(f.score[i] == doctest::Approx(-(g.center(i) - 0.5)).epsilon(1e-9));
    }
  }
  SUBCASE("OU Gaussian score matches the closed form") {
    const auto ex = ou_marginal(2.0, 0.5, 0.5);
    auto ref = gibbs_reference(Potential::quadratic(), g);
    auto f = likelihood_field(GridDensity::gaussian(g, ex.m, std::sqrt(ex.v)), ref);
    double worst = 0.0;
    // Centred cells only; the last valid cell before the mask uses a one-sided difference.
    for (std::size_t i = 1; i + 1 < g.n_cells; ++i) {
      const double x = g.center(i);
      if (!f.valid[i - 1] || !f.valid[i] || !f.valid[i + 1]) continue;
      worst = std::max(worst, std::abs(f.score[i] - (-(x - ex.m) / ex.v + 2 * x)));
    }
    CHECK(worst <= 1e-4);
    CHECK(f.masked_mass <= 1e-8);
  }
}

TEST_CASE("perturbed flow stays close to the unperturbed one near t0") {
  const auto g = Grid::make(-8, 8, 4096);
  const auto pot = Potential::quadratic();
  auto pt = ou_flow(4096, 1e-4, {0.0, 0.2}).back();
  Perturbation beta({Bump{1.0, 1.0, 0.5}});
  auto times = linspace(0.2, 0.204, 33);
  auto base = solve_fokker_planck(pot, pt, times);
  auto pert = solve_fokker_planck(pot, pt, times, {}, &beta);
  const double c = ratio_bound(base, pert);
  CHECK(c >= 1.0);
  CHECK(std::isfinite(c));
  auto prof = ratio_deviation_profile(base, pert, 0.2, {0.001, 0.00075, 0.0005, 0.00025});
  CHECK(std::abs(prof.fit.intercept) <= 1e-3);
  CHECK(prof.fit.slope > 0.0);
}

TEST_CASE("density CSV round trip is exact") {
  const auto g = Grid::make(-2, 3, 64);
  auto p = GridDensity::gaussian(g, 0.3, 0.7);
  std::stringstream ss;
  write_density_csv(ss, p);
  CHECK(ss.str().rfind("x,p\n", 0) == 0);
  auto r = read_density_csv(ss);
  CHECK(r.grid == p.grid);
  CHECK(r.values == p.values);
}
