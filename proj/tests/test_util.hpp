#pragma once

#include <random>
#include <vector>

#include "p3net/geometry.hpp"
#include "p3net/mt19937.hpp"
#include "p3net/pointcloud.hpp"

namespace testutil {

// Test-side randomness deliberately uses std::mt19937 so library RNG bugs
// cannot cancel out in oracle comparisons.
using StdRng = std::mt19937;

template <int D>
p3net::Point<D> random_point(StdRng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  p3net::Point<D> p;
  for (int k = 0; k < D; ++k) p[k] = dist(rng);
  return p;
}

template <int D>
p3net::Workspace<D> random_workspace(StdRng& rng, int n_obstacles, double side = 40.0,
                                     double box_max = 8.0) {
  std::uniform_real_distribution<double> pos(0.0, side);
  std::uniform_real_distribution<double> ext(0.5, box_max);
  p3net::Workspace<D> ws;
  for (int k = 0; k < D; ++k) {
    ws.bounds.lo[k] = 0.0;
    ws.bounds.hi[k] = side;
  }
  for (int i = 0; i < n_obstacles; ++i) {
    p3net::Aabb<D> b;
    for (int k = 0; k < D; ++k) {
      const double c = pos(rng);
      const double e = ext(rng) / 2.0;
      b.lo[k] = std::max(0.0, c - e);
      b.hi[k] = std::min(side, c + e);
    }
    ws.obstacles.push_back(b);
  }
  return ws;
}

inline p3net::PointCloud random_cloud(StdRng& rng, int dim, std::size_t n, double lo = 0.0,
                                      double hi = 40.0) {
  std::uniform_real_distribution<float> dist(static_cast<float>(lo), static_cast<float>(hi));
  p3net::PointCloud pc;
  pc.dim = dim;
  pc.data.resize(n * static_cast<std::size_t>(dim));
  for (auto& v : pc.data) v = dist(rng);
  return pc;
}

/// Records every word served by an inner MT19937.
struct RecordingSource final : p3net::WordSource {
  p3net::Mt19937 inner;
  std::vector<std::uint32_t> tape;
  explicit RecordingSource(std::uint32_t seed) : inner(seed) {}
  std::uint32_t next_u32() override {
    const std::uint32_t w = inner.next_u32();
    tape.push_back(w);
    return w;
  }
};

/// Replays a fixed word sequence.
struct TapeSource final : p3net::WordSource {
  std::vector<std::uint32_t> tape;
  std::size_t pos = 0;
  explicit TapeSource(std::vector<std::uint32_t> t) : tape(std::move(t)) {}
  std::uint32_t next_u32() override { return tape.at(pos++); }
};

/// Serves a constant word (e.g. 0xffffffff = keep everything in dropout).
struct ConstSource final : p3net::WordSource {
  std::uint32_t word;
  explicit ConstSource(std::uint32_t w) : word(w) {}
  std::uint32_t next_u32() override { return word; }
};

}  // namespace testutil
