#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "entroflow/grid.hpp"
#include "entroflow/kernels.hpp"
#include "entroflow/rng.hpp"
#include "entroflow/stats.hpp"

using namespace entroflow;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == Philox4x32Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Philox4x32Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Philox4x32Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter-based draws are pure functions of their coordinates") {
  CounterRng a(7), b(7), c(8);
  CHECK(a.normal(Stream::forward, 12, 5) == b.normal(Stream::forward, 12, 5));
  CHECK(a.normal(Stream::forward, 12, 5) != c.normal(Stream::forward, 12, 5));
  CHECK(a.normal(Stream::forward, 12, 5) != a.normal(Stream::backward, 12, 5));
  CHECK(a.normal(Stream::forward, 12, 5) != a.normal(Stream::forward, 13, 5));
  auto [n0, n1] = a.normals(Stream::forward, 3, 2);
  CHECK(a.normal(Stream::forward, 3, 4) == n0);
  CHECK(a.normal(Stream::forward, 3, 5) == n1);
}

TEST_CASE("uniform and normal draws have the right moments") {
  CounterRng rng(2024);
  const std::size_t n = 200000;
  std::vector<double> u(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = rng.uniform(Stream::sampling, i, 0);
    z[i] = rng.normal(Stream::sampling, i, 0);
    REQUIRE(u[i] > 0.0);
    REQUIRE(u[i] < 1.0);
  }
  CHECK(ks_statistic_uniform(u) <= 1.628 / std::sqrt(static_cast<double>(n)));
  const double se = 1.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sample_mean(z)) <= 4 * se);
  CHECK(std::abs(sample_variance(z) - 1.0) <= 4 * std::sqrt(2.0) * se);
}

TEST_CASE("parallel index loop matches the serial one and reports the lowest failing index") {
  omp_set_num_threads(4);
  std::vector<double> s(1000), p(1000);
  CounterRng rng(1);
  for_each_index(s.size(), Execution::serial, [&](std::size_t i) { s[i] = rng.normal(Stream::forward, i, 0); });
  for_each_index(p.size(), Execution::parallel, [&](std::size_t i) { p[i] = rng.normal(Stream::forward, i, 0); });
  CHECK(s == p);
  for (auto exec : {Execution::serial, Execution::parallel}) {
    try {
      for_each_index(1000, exec, [](std::size_t i) {
        if (i == 377 || i == 901) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "377");
    }
  }
}

TEST_CASE("KS statistics") {
  CHECK(ks_statistic_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_statistic_two_sample({0, 1}, {5, 6}) == 1.0);
  CHECK(ks_critical_two_sample(0.01, 100, 100) == doctest::Approx(1.628 * std::sqrt(0.02)));
  CHECK(ks_critical_two_sample(0.05, 100, 100) == doctest::Approx(1.358 * std::sqrt(0.02)));
  const auto g = Grid::make(0, 1, 64);
  GridDensity u(g, std::vector<double>(64, 1.0));
  std::vector<double> x;
  for (int i = 0; i < 100; ++i) x.push_back((i + 0.5) / 100.0);
  CHECK(ks_statistic(x, u) == doctest::Approx(0.005));
  CHECK(ks_statistic_uniform(x) == doctest::Approx(0.005));
}

TEST_CASE("quantile bins are equal-count") {
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(std::sin(i * 1.7));
  std::vector<double> lo, hi;
  auto bin = quantile_bins(x, 10, &lo, &hi);
  std::vector<int> count(10, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++count[bin[i]];
    CHECK(x[i] >= lo[bin[i]]);
    CHECK(x[i] <= hi[bin[i]]);
  }
  for (int c : count) CHECK(c == 100);
}
