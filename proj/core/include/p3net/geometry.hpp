#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace p3net {

/// A D-dimensional configuration (D = 2 or 3). The robot is a point mass,
/// so a configuration is just a position in world units.
template <int D>
struct Point {
  std::array<double, D> v{};

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

  friend Point operator+(Point a, const Point& b) {
    for (int k = 0; k < D; ++k) a.v[k] += b.v[k];
    return a;
  }
  friend Point operator-(Point a, const Point& b) {
    for (int k = 0; k < D; ++k) a.v[k] -= b.v[k];
    return a;
  }
  friend Point operator*(Point a, double s) {
    for (int k = 0; k < D; ++k) a.v[k] *= s;
    return a;
  }
  friend bool operator==(const Point& a, const Point& b) { return a.v == b.v; }
};

template <int D>
inline double dot(const Point<D>& a, const Point<D>& b) {
  double s = 0.0;
  for (int k = 0; k < D; ++k) s += a.v[k] * b.v[k];
  return s;
}

template <int D>
inline double norm(const Point<D>& a) {
  return std::sqrt(dot(a, a));
}

template <int D>
inline double distance(const Point<D>& a, const Point<D>& b) {
  return norm(a - b);
}

/// Axis-aligned box. Closed on every face: boundary contact counts as
/// containment (see point_in_collision).
template <int D>
struct Aabb {
  Point<D> lo;
  Point<D> hi;

  bool contains(const Point<D>& p) const {
    for (int k = 0; k < D; ++k) {
      if (p[k] < lo[k] || p[k] > hi[k]) return false;
    }
    return true;
  }

  double volume() const {
    double v = 1.0;
    for (int k = 0; k < D; ++k) v *= hi[k] - lo[k];
    return v;
  }

  bool intersects(const Aabb& o) const {
    for (int k = 0; k < D; ++k) {
      if (hi[k] < o.lo[k] || lo[k] > o.hi[k]) return false;
    }
    return true;
  }
};

/// World bounds plus the obstacle set; the collision-checking substrate.
/// Immutable after construction and safe to share across planner tasks.
template <int D>
struct Workspace {
  Aabb<D> bounds;
  std::vector<Aabb<D>> obstacles;

  /// Checks the structural invariants (box corners ordered, every obstacle
  /// touching the world). Used at deserialization boundaries.
  bool valid() const {
    for (int k = 0; k < D; ++k) {
      if (!(bounds.lo[k] <= bounds.hi[k])) return false;
    }
    for (const auto& ob : obstacles) {
      for (int k = 0; k < D; ++k) {
        if (!(ob.lo[k] <= ob.hi[k])) return false;
      }
      if (!ob.intersects(bounds)) return false;
    }
    return true;
  }
};

template <int D>
using Path = std::vector<Point<D>>;

/// True iff p lies inside any obstacle (closed-interval test per axis).
template <int D>
inline bool point_in_collision(const Point<D>& p, const Workspace<D>& ws) {
  for (const auto& ob : ws.obstacles) {
    if (ob.contains(p)) return true;
  }
  return false;
}

/// Discretized segment test: M = ceil(|b-a| / delta) interpolation steps,
/// testing c_i = a + (i/M)(b-a) for i = 0..M inclusive. Both endpoints are
/// always tested; a == b degenerates to a single point test.
/// `query_count`, when given, is incremented once per call (the planner's
/// collision-check counter).
template <int D>
inline bool segment_in_collision(const Point<D>& a, const Point<D>& b,
                                 const Workspace<D>& ws, double delta,
                                 std::uint64_t* query_count = nullptr) {
  if (query_count) ++(*query_count);
  const Point<D> d = b - a;
  const double len = norm(d);
  const auto steps = static_cast<std::int64_t>(std::ceil(len / delta));
  if (steps <= 0) return point_in_collision(a, ws);
  for (std::int64_t i = 0; i <= steps; ++i) {
    const Point<D> c = a + d * (static_cast<double>(i) / static_cast<double>(steps));
    if (point_in_collision(c, ws)) return true;
  }
  return false;
}

/// True iff any consecutive edge of tau is in collision.
template <int D>
inline bool path_in_collision(const Path<D>& tau, const Workspace<D>& ws,
                              double delta,
                              std::uint64_t* query_count = nullptr) {
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
    if (segment_in_collision(tau[i], tau[i + 1], ws, delta, query_count)) {
      return true;
    }
  }
  return false;
}

/// Sum of Euclidean edge lengths.
template <int D>
inline double path_cost(const Path<D>& tau) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
    c += distance(tau[i], tau[i + 1]);
  }
  return c;
}

/// Greedy waypoint pruning. Scans from the head, each time jumping to the
/// farthest waypoint reachable by a collision-free straight segment, so no
/// retained triple (c_i, c_j, c_k) admits the direct edge (c_i, c_k).
/// Duplicate consecutive waypoints are dropped up front. Keeps endpoints,
/// never increases cost, preserves collision-freeness, and is idempotent.
template <int D>
inline Path<D> smooth(const Path<D>& tau, const Workspace<D>& ws, double delta,
                      std::uint64_t* query_count = nullptr) {
  Path<D> in;
  in.reserve(tau.size());
  for (const auto& p : tau) {
    if (in.empty() || !(in.back() == p)) in.push_back(p);
  }
  if (in.size() <= 2) return in;

  Path<D> out;
  out.push_back(in.front());
  std::size_t i = 0;
  while (i + 1 < in.size()) {
    std::size_t next = i + 1;
    for (std::size_t k = in.size() - 1; k > i + 1; --k) {
      if (!segment_in_collision(in[i], in[k], ws, delta, query_count)) {
        next = k;
        break;
      }
    }
    out.push_back(in[next]);
    i = next;
  }
  return out;
}

}  // namespace p3net
