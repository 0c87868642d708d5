#include <benchmark/benchmark.h>

#include "entroflow/fokker_planck.hpp"
#include "entroflow/hwi.hpp"
#include "entroflow/langevin.hpp"
#include "entroflow/numerics.hpp"
#include "entroflow/time_reversal.hpp"

using namespace entroflow;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

struct OuFixture {
  Potential pot = Potential::quadratic();
  Grid grid = Grid::make(-8, 8, 2048);
  std::vector<double> t = linspace(0.0, 0.5, 51);
  Flow flow = solve_fokker_planck(pot, GridDensity::gaussian(grid, 2.0, 0.5), t);
  PathEnsemble paths = simulate_forward(pot, nullptr, gaussian_sampler(2.0, 0.5), 4000, t, 1, {});
};

const OuFixture& ou() {
  static const OuFixture f;
  return f;
}

void BM_simulate_forward(benchmark::State& state) {
  const auto& f = ou();
  SimulationOptions o;
  o.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_forward(f.pot, nullptr, gaussian_sampler(2.0, 0.5), 4000, f.t, 1, o));
}

void BM_build_processes(benchmark::State& state) {
  const auto& f = ou();
  ProcessOptions o;
  o.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(build_processes(f.paths, f.flow, f.pot, o));
}

void BM_hwi_random_suite(benchmark::State& state) {
  const auto pot = Potential::double_well();
  const auto grid = Grid::make(-4, 4, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(hwi_random_suite(pot, grid, 8, 1, mode(state)));
}

}  // namespace

BENCHMARK(BM_simulate_forward)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_processes)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hwi_random_suite)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
