#include "p3net/pointcloud.hpp"

#include <numeric>

#include "p3net/errors.hpp"
#include "p3net/io_binary.hpp"

namespace p3net {

namespace {
constexpr char kMagic[4] = {'P', '3', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

template <int D>
PointCloud sample_cloud(const Workspace<D>& ws, std::size_t n, std::uint64_t seed) {
  if (ws.obstacles.empty()) throw NoObstacles("sample_cloud: workspace has no obstacles");

  std::vector<double> cumulative;
  cumulative.reserve(ws.obstacles.size());
  double total = 0.0;
  for (const auto& ob : ws.obstacles) {
    total += ob.volume();
    cumulative.push_back(total);
  }
  if (total <= 0.0) throw NoObstacles("sample_cloud: obstacles have zero total volume");

  Mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  PointCloud pc;
  pc.dim = D;
  pc.data.resize(n * static_cast<std::size_t>(D));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.real53() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const auto box = static_cast<std::size_t>(it - cumulative.begin());
    const Aabb<D>& ob = ws.obstacles[box < ws.obstacles.size() ? box : ws.obstacles.size() - 1];
    for (int k = 0; k < D; ++k) {
      // Keep the float-rounded sample inside the closed box so every stored
      // point still collides with its generating obstacle.
      float f = static_cast<float>(rng.uniform(ob.lo[k], ob.hi[k]));
      while (static_cast<double>(f) < ob.lo[k]) f = std::nextafterf(f, 1e30f);
      while (static_cast<double>(f) > ob.hi[k]) f = std::nextafterf(f, -1e30f);
      pc.data[i * D + k] = f;
    }
  }
  return pc;
}

template PointCloud sample_cloud<2>(const Workspace<2>&, std::size_t, std::uint64_t);
template PointCloud sample_cloud<3>(const Workspace<3>&, std::size_t, std::uint64_t);

std::string cloud_serialize(const PointCloud& pc) {
  std::string out;
  out.append(kMagic, 4);
  io::put_u32(out, kVersion);
  io::put_u32(out, static_cast<std::uint32_t>(pc.dim));
  io::put_u32(out, static_cast<std::uint32_t>(pc.n()));
  for (float v : pc.data) io::put_f32(out, v);
  return out;
}

PointCloud cloud_deserialize(const std::uint8_t* data, std::size_t size) {
  io::Reader r(data, size);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("cloud: bad magic");
  if (r.u32() != kVersion) throw FormatError("cloud: unsupported version");
  const std::uint32_t dim = r.u32();
  if (dim != 2 && dim != 3) throw FormatError("cloud: dim must be 2 or 3");
  const std::uint32_t count = r.u32();
  if (count == 0) throw FormatError("cloud: empty");
  PointCloud pc;
  pc.dim = static_cast<int>(dim);
  pc.data.resize(static_cast<std::size_t>(count) * dim);
  for (auto& v : pc.data) v = r.f32();
  if (r.remaining() != 0) throw FormatError("cloud: trailing bytes");
  return pc;
}

void cloud_write(const PointCloud& pc, const std::string& path) {
  io::write_file(path, cloud_serialize(pc));
}

PointCloud cloud_read(const std::string& path) {
  const auto bytes = io::read_file(path);
  return cloud_deserialize(bytes.data(), bytes.size());
}

}  // namespace p3net
