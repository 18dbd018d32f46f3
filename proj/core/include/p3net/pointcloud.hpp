#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p3net/geometry.hpp"
#include "p3net/mt19937.hpp"

namespace p3net {

/// N obstacle-interior samples in row-major (N x dim) float storage;
/// the encoder input. Immutable after creation.
struct PointCloud {
  int dim = 2;
  std::vector<float> data;  // n() * dim values

  std::size_t n() const { return dim ? data.size() / static_cast<std::size_t>(dim) : 0; }
  const float* point(std::size_t i) const { return data.data() + i * static_cast<std::size_t>(dim); }

  template <int D>
  Point<D> at(std::size_t i) const {
    Point<D> p;
    for (int k = 0; k < D; ++k) p[k] = point(i)[k];
    return p;
  }
};

/// Samples n points uniformly over the union of obstacle volumes: a box is
/// chosen with probability proportional to its volume, then a point is drawn
/// uniformly inside it. Pure function of (ws, n, seed).
/// Throws NoObstacles when the obstacle list is empty.
template <int D>
PointCloud sample_cloud(const Workspace<D>& ws, std::size_t n, std::uint64_t seed);

extern template PointCloud sample_cloud<2>(const Workspace<2>&, std::size_t, std::uint64_t);
extern template PointCloud sample_cloud<3>(const Workspace<3>&, std::size_t, std::uint64_t);

/// Default cloud sizes (1400 points in 2D, 2000 in 3D).
inline std::size_t default_cloud_size(int dim) { return dim == 2 ? 1400u : 2000u; }

/// Cloud file ("P3PC"): magic, version u32=1, dim u32, count u32, then
/// count*dim IEEE-754 binary32 values row-major, all little-endian.
/// Round-trips bit-exactly.
void cloud_write(const PointCloud& pc, const std::string& path);
PointCloud cloud_read(const std::string& path);

std::string cloud_serialize(const PointCloud& pc);
PointCloud cloud_deserialize(const std::uint8_t* data, std::size_t size);

}  // namespace p3net
