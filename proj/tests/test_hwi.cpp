#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>
#include <omp.h>

#include "entroflow/hwi.hpp"
#include "entroflow/wasserstein.hpp"

using namespace entroflow;

namespace {

// H(N(m, s^2) | e^{-x^2}) for Psi = x^2 / 2.
double gaussian_H(double m, double s) { return -0.5 * std::log(2 * M_PI * M_E * s * s) + m * m + s * s; }

}  // namespace

TEST_CASE("Gibbs density as the first endpoint") {
  const auto pot = Potential::double_well();
  const auto g = Grid::make(-4, 4, 2048);
  const auto ref = gibbs_reference(pot, g);
  const auto q = ref.stationary_density();
  const auto p1 = GridDensity::gaussian(g, 0.5, 0.4);
  const auto r = hwi_check(q, p1, pot, ref);
  CHECK(r.applicable);
  CHECK(r.lhs <= 0.0);
  CHECK(r.pass);
  CHECK(std::abs(r.inner) <= 1e-10);
  const auto s = entropy_slope_at_zero(q, p1, ref, {0.1, 0.05, 0.025});
  CHECK(s.target == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("Gaussian pair under the quadratic potential matches closed forms") {
  const auto pot = Potential::quadratic();
  const auto g = Grid::make(-8, 8, 4096);
  const auto ref = gibbs_reference(pot, g);
  const double m0 = 0.5, s0 = 0.6, m1 = -0.3, s1 = 0.9;
  const auto p0 = GridDensity::gaussian(g, m0, s0), p1 = GridDensity::gaussian(g, m1, s1);
  const auto r = hwi_check(p0, p1, pot, ref);
  const double c = 2 - 1 / (s0 * s0);
  CHECK(r.kappa == 1.0);
  CHECK(r.H0 == doctest::Approx(gaussian_H(m0, s0)).epsilon(1e-5));
  CHECK(r.H1 == doctest::Approx(gaussian_H(m1, s1)).epsilon(1e-5));
  CHECK(r.W == doctest::Approx(std::hypot(m1 - m0, s1 - s0)).epsilon(1e-5));
  CHECK(r.I0 == doctest::Approx(4 * m0 * m0 + c * c * s0 * s0).epsilon(1e-5));
  CHECK(r.inner == doctest::Approx(2 * m0 * (m1 - m0) + c * (s1 / s0 - 1) * s0 * s0).epsilon(1e-5));
  CHECK(r.pass);
  CHECK(r.rhs_sharp <= r.rhs_std + 1e-10);

  const auto prof = geodesic_entropy_profile(p0, p1, ref, 16);
  double worst = 0.0;
  for (const auto& pt : prof)
    worst = std::max(worst, std::abs(pt.H - gaussian_H(m0 + pt.t * (m1 - m0), s0 + pt.t * (s1 - s0))));
  CHECK(worst <= 1e-3);
}

TEST_CASE("translated Gaussians attain equality at the generator's convexity constant") {
  const auto g = Grid::make(-8, 8, 4096);
  const auto ref = gibbs_reference(Potential::quadratic(), g);
  const auto p0 = GridDensity::gaussian(g, 0.8, 0.6), p1 = GridDensity::gaussian(g, -0.4, 0.6);
  const auto r = hwi_check(p0, p1, ref, 2.0);
  CHECK(std::abs(r.slack_sharp) <= 1e-3 * (1 + std::abs(r.lhs)));
  CHECK(r.slack_std >= r.slack_sharp);
}

TEST_CASE("identical endpoints give a flat profile") {
  const auto g = Grid::make(-8, 8, 1024);
  const auto ref = gibbs_reference(Potential::quadratic(), g);
  const auto p = GridDensity::gaussian(g, 1.0, 0.7);
  const auto prof = geodesic_entropy_profile(p, p, ref, 8);
  for (const auto& pt : prof) CHECK(pt.H == doctest::Approx(prof.front().H).epsilon(1e-12));
  const auto s = entropy_slope_at_zero(p, p, ref, {0.1, 0.05, 0.025});
  CHECK(std::abs(s.measured) <= 1e-10);
  CHECK(std::abs(s.target) <= 1e-10);
}

TEST_CASE("entropy slope at the start of a double-well geodesic") {
  const auto g = Grid::make(-4, 4, 4096);
  const auto ref = gibbs_reference(Potential::double_well(), g);
  const auto p0 = GridDensity::gaussian(g, -0.5, 0.4), p1 = GridDensity::gaussian(g, 0.7, 0.4);
  const auto s = entropy_slope_at_zero(p0, p1, ref, {0.1, 0.05, 0.025});
  CHECK(s.measured == doctest::Approx(s.target).epsilon(0.02));
}

TEST_CASE("random pairs: convexity, Taylor consistency and the inequality") {
  const auto g = Grid::make(-8, 8, 2048);
  const CounterRng rng(7);
  for (auto pot : {Potential::quadratic(), Potential::double_well(), Potential::free()}) {
    CAPTURE(pot.name());
    const auto ref = gibbs_reference(pot, g);
    const double kappa = curvature_lower_bound(pot, g);
    for (std::uint64_t i = 0; i < 3; ++i) {
      const auto a = random_mixture(g, rng, 2 * i), b = random_mixture(g, rng, 2 * i + 1);
      const auto r = hwi_check(a, b, pot, ref);
      CHECK(r.applicable);
      CHECK(r.pass);
      const auto prof = geodesic_entropy_profile(a, b, ref, 64);
      const auto conv = convexity_check(prof, kappa, r.W);
      CHECK(conv.min_excess >= -1e-3 * (1 + std::abs(conv.bound)));
      const auto s = entropy_slope_at_zero(a, b, ref, {0.1, 0.05, 0.025});
      CHECK(s.measured == doctest::Approx(s.target).epsilon(0.02));
      CHECK(std::abs(taylor_residual(prof, s.measured)) <=
            1e-3 * (1 + std::abs(s.measured) + std::abs(prof.back().H - prof.front().H)));
    }
  }
}

TEST_CASE("random suite is thread-count independent and serializes") {
  omp_set_num_threads(4);
  const auto g = Grid::make(-6, 6, 512);
  const auto pot = Potential::double_well();
  const auto a = hwi_random_suite(pot, g, 12, 3, Execution::serial);
  const auto b = hwi_random_suite(pot, g, 12, 3, Execution::parallel);
  REQUIRE(a.reports.size() == 12);
  CHECK(a.violations == 0);
  CHECK(a.sharp_looser == 0);
  std::stringstream ca, cb;
  write_hwi_csv(ca, a.reports);
  write_hwi_csv(cb, b.reports);
  CHECK(ca.str() == cb.str());
  std::string header;
  std::getline(ca, header);
  CHECK(header == "pair_id,lhs,rhs_sharp,rhs_std,slack_sharp,slack_std");

  std::stringstream js;
  write_hwi_json(js, a.reports.front());
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.at("lhs").get<double>() == a.reports.front().lhs);
  CHECK(j.at("pass").get<bool>() == a.reports.front().pass);
}

TEST_CASE("the free potential still yields a report") {
  const auto g = Grid::make(-8, 8, 1024);
  const auto pot = Potential::free();
  const auto ref = gibbs_reference(pot, g);
  const auto r = hwi_check(GridDensity::gaussian(g, 0, 0.5), GridDensity::gaussian(g, 1, 0.8), pot, ref);
  CHECK(r.applicable);
  CHECK(r.kappa == 0.0);
  CHECK(r.pass);
}

TEST_CASE("transport segments carry unit mass and reproduce the entropy at the endpoints") {
  const auto g = Grid::make(-8, 8, 2048);
  const auto ref = gibbs_reference(Potential::double_well(), g);
  const CounterRng rng(11);
  const auto a = random_mixture(g, rng, 0), b = random_mixture(g, rng, 1);
  const auto segs = transport_segments(a, b);
  double mass = 0.0;
  for (const auto& s : segs) mass += s.mass;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(interpolant_entropy(segs, ref, 0.0) == doctest::Approx(relative_entropy(a, ref).value.value()).epsilon(1e-4));
  CHECK(interpolant_entropy(segs, ref, 1.0) == doctest::Approx(relative_entropy(b, ref).value.value()).epsilon(1e-4));
}

TEST_CASE("stretch is near zero for a translation and near s1 / s0 - 1 for a dilation") {
  const auto g = Grid::make(-8, 8, 4096);
  const auto p = GridDensity::gaussian(g, -0.5, 0.6);
  CHECK(geodesic_stretch(transport_segments(p, GridDensity::gaussian(g, 0.7, 0.6))) <= 0.05);
  CHECK(geodesic_stretch(transport_segments(p, GridDensity::gaussian(g, -0.5, 1.2))) ==
        doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("entropy slope stays accurate when the map stretches strongly") {
  const auto g = Grid::make(-8, 8, 2048);
  const auto ref = gibbs_reference(Potential::quadratic(), g);
  const CounterRng rng(1);
  const auto a = random_mixture(g, rng, 68), b = random_mixture(g, rng, 69);
  const double st = geodesic_stretch(transport_segments(a, b));
  CHECK(st > 30.0);
  const double f = 0.4 / (st * 0.1);
  const auto s = entropy_slope_at_zero(a, b, ref, {0.1 * f, 0.05 * f, 0.025 * f});
  CHECK(s.measured == doctest::Approx(s.target).epsilon(0.02));
}

TEST_CASE("double-well translation: the literal kappa bound fails, the generator constant 2 kappa holds") {
  const auto pot = Potential::double_well();
  const auto g = Grid::make(-4, 4, 4096);
  const auto ref = gibbs_reference(pot, g);
  const double kappa = curvature_lower_bound(pot, g);
  CHECK(kappa == doctest::Approx(-4.0));
  // Mass near the origin where Psi'' is close to kappa, moved by a small translation.
  const auto p0 = GridDensity::gaussian(g, -0.15, 0.15), p1 = GridDensity::gaussian(g, 0.15, 0.15);
  const auto literal = hwi_check(p0, p1, ref, kappa);
  const auto generator = hwi_check(p0, p1, ref, 2 * kappa);
  CHECK_FALSE(literal.pass_sharp);
  CHECK(generator.pass);
  const auto prof = geodesic_entropy_profile(p0, p1, ref, 64);
  CHECK(convexity_check(prof, kappa, literal.W).min_excess < -0.1 * std::abs(kappa) * literal.W * literal.W);
  CHECK(convexity_check(prof, 2 * kappa, literal.W).min_excess >= 0.0);
}
