#include <benchmark/benchmark.h>

#include "bmstab/scenario.hpp"
#include "bmstab/set_arith.hpp"

using namespace bmstab;

namespace {

ScenarioData ellipse_pair(double h) {
  ScenarioSpec s;
  s.family = ScenarioFamily::ellipsoid_pair;
  s.dim = 2;
  s.t = 0.5;
  s.perturbation = 0.1;
  s.h = h;
  s.seed = 1;
  return generate_scenario(s);
}

}  // namespace

static void MinkowskiVolume2D(benchmark::State& state) {
  const double h = 1.0 / state.range(0);
  ScenarioData d = ellipse_pair(h);
  for (auto _ : state) {
    Measured m = minkowski_volume(d.a, d.b, 0.5);
    benchmark::DoNotOptimize(m.value);
  }
  state.SetLabel(std::to_string(d.a.cell_count()) + " cells/side");
}
BENCHMARK(MinkowskiVolume2D)->Arg(100)->Arg(200)->Arg(400);

static void HullGap2D(benchmark::State& state) {
  const double h = 1.0 / state.range(0);
  ScenarioData d = ellipse_pair(h);
  for (auto _ : state) {
    Measured g = hull_gap(d.a);
    benchmark::DoNotOptimize(g.value);
  }
}
BENCHMARK(HullGap2D)->Arg(100)->Arg(200)->Arg(400);

static void SymDiffSearch2D(benchmark::State& state) {
  const double h = 1.0 / state.range(0);
  ScenarioData d = ellipse_pair(h);
  for (auto _ : state) {
    SymDiffResult r = sym_diff_min_translation(d.a, d.b);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(SymDiffSearch2D)->Arg(100)->Arg(200);
