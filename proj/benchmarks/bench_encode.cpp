#include <benchmark/benchmark.h>

#include <random>

#include "p3net/engine.hpp"
#include "p3net/models.hpp"

using namespace p3net;

namespace {

PointCloud random_cloud(int dim, std::size_t n) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> coord(0.0f, 40.0f);
  PointCloud pc;
  pc.dim = dim;
  pc.data.resize(n * static_cast<std::size_t>(dim));
  for (auto& v : pc.data) v = coord(rng);
  return pc;
}

// Feature extraction latency vs cloud size, float and fixed-point.
void BM_EncodeFloat(benchmark::State& state) {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 1);
  enc.refresh_caches();
  const auto pc = random_cloud(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(enc, pc));
  }
}
BENCHMARK(BM_EncodeFloat)->Arg(1400)->Arg(2048)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_EncodeFixed(benchmark::State& state) {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 1);
  const FixedEncoder fixed = quantize_model(enc);
  const auto pc = random_cloud(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_fixed(fixed, pc));
  }
}
BENCHMARK(BM_EncodeFixed)->Arg(1400)->Arg(2048)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_EncodeStreaming(benchmark::State& state) {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 1);
  enc.refresh_caches();
  const auto pc = random_cloud(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_streaming(enc, pc));
  }
}
BENCHMARK(BM_EncodeStreaming)->Arg(1400)->Unit(benchmark::kMillisecond);

}  // namespace
