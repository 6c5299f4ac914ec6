#include <benchmark/benchmark.h>

#include "bmstab/rng.hpp"
#include "bmstab/transport.hpp"

using namespace bmstab;

namespace {

DiscreteMeasure uniform_square(int n, uint64_t seed) {
  Rng rng(seed);
  DiscreteMeasure m;
  for (int i = 0; i < n; ++i) {
    Vec p(2);
    p << rng.uniform01(), rng.uniform01();
    m.points.push_back(p);
  }
  m.weights.assign(n, 1.0 / n);
  return m;
}

}  // namespace

static void ExactTransport(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  DiscreteMeasure mu = uniform_square(n, 1);
  DiscreteMeasure nu = uniform_square(n, 2);
  for (auto& p : nu.points) p[0] += 1.5;
  for (auto _ : state) {
    TransportPlan plan = solve_ot(mu, nu);
    benchmark::DoNotOptimize(plan.cost);
  }
}
BENCHMARK(ExactTransport)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

static void EntropicTransport(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  DiscreteMeasure mu = uniform_square(n, 1);
  DiscreteMeasure nu = uniform_square(n, 2);
  for (auto& p : nu.points) p[0] += 1.5;
  for (auto _ : state) {
    TransportPlan plan = solve_ot(mu, nu, OtMode::entropic, 0.02);
    benchmark::DoNotOptimize(plan.cost);
  }
}
BENCHMARK(EntropicTransport)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
