#include <benchmark/benchmark.h>

#include <random>

#include "p3net/geometry.hpp"

using namespace p3net;

namespace {

Workspace<2> random_workspace(int n_obstacles) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> pos(0.0, 40.0);
  Workspace<2> ws;
  ws.bounds = {{{0, 0}}, {{40, 40}}};
  for (int i = 0; i < n_obstacles; ++i) {
    Aabb<2> b;
    for (int k = 0; k < 2; ++k) {
      const double c = pos(rng);
      b.lo[k] = std::max(0.0, c - 2.5);
      b.hi[k] = std::min(40.0, c + 2.5);
    }
    ws.obstacles.push_back(b);
  }
  return ws;
}

// Segment checks at delta = 0.01 across obstacle counts and segment lengths.
void BM_SegmentCheck(benchmark::State& state) {
  const auto ws = random_workspace(static_cast<int>(state.range(0)));
  const double dist = static_cast<double>(state.range(1));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(0.0, 40.0 - dist);
  std::vector<std::pair<Point<2>, Point<2>>> segments;
  for (int i = 0; i < 64; ++i) {
    const double x = pos(rng), y = pos(rng);
    segments.push_back({Point<2>{{x, y}}, Point<2>{{x + dist * 0.7071, y + dist * 0.7071}}});
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = segments[i++ % segments.size()];
    benchmark::DoNotOptimize(segment_in_collision(a, b, ws, 0.01));
  }
}
BENCHMARK(BM_SegmentCheck)
    ->Args({16, 5})
    ->Args({32, 5})
    ->Args({64, 5})
    ->Args({128, 5})
    ->Args({16, 20})
    ->Args({64, 20})
    ->Args({128, 20})
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
