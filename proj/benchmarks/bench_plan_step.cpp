#include <benchmark/benchmark.h>

#include <random>

#include "p3net/models.hpp"

using namespace p3net;

namespace {

// Planning-network inference latency vs batch size (2B rows per step).
void BM_PlanStep(benchmark::State& state) {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 3);
  std::mt19937 src(5);
  std::uniform_real_distribution<float> coord(0.0f, 40.0f);
  std::vector<float> phi(enc.feature_dim());
  for (auto& v : phi) v = coord(src) / 20.0f;
  const auto rows = static_cast<std::size_t>(2 * state.range(0));
  Mat<float> c(rows, 2), g(rows, 2);
  for (auto& v : c.d) v = coord(src);
  for (auto& v : g.d) v = coord(src);
  Mt19937 rng(11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_step(pnet, phi, c, g, rng));
  }
}
BENCHMARK(BM_PlanStep)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

}  // namespace
