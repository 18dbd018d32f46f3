#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "p3net/errors.hpp"
#include "p3net/geometry.hpp"
#include "p3net/mt19937.hpp"

namespace p3net {

/// Incremental k-d tree over points inserted in arrival order (no deletion,
/// no rebalancing). Node ids are insertion indices.
template <int D>
class KdTree {
 public:
  void insert(const Point<D>& p) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({p, -1, -1});
    if (id == 0) return;
    int cur = 0;
    int depth = 0;
    for (;;) {
      const int axis = depth % D;
      int& child = p[axis] < nodes_[static_cast<std::size_t>(cur)].p[axis]
                       ? nodes_[static_cast<std::size_t>(cur)].left
                       : nodes_[static_cast<std::size_t>(cur)].right;
      if (child < 0) {
        child = id;
        return;
      }
      cur = child;
      ++depth;
    }
  }

  std::size_t size() const { return nodes_.size(); }

  int nearest(const Point<D>& q) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    nearest_rec(0, 0, q, best, best_d2);
    return best;
  }

  void radius(const Point<D>& q, double r, std::vector<int>& out) const {
    out.clear();
    if (!nodes_.empty()) radius_rec(0, 0, q, r * r, out);
  }

 private:
  struct Node {
    Point<D> p;
    int left;
    int right;
  };

  static double dist2(const Point<D>& a, const Point<D>& b) {
    double s = 0.0;
    for (int k = 0; k < D; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return s;
  }

  void nearest_rec(int id, int depth, const Point<D>& q, int& best, double& best_d2) const {
    if (id < 0 || nodes_.empty()) return;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const double d2 = dist2(n.p, q);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = id;
    }
    const int axis = depth % D;
    const double diff = q[axis] - n.p[axis];
    const int first = diff < 0 ? n.left : n.right;
    const int second = diff < 0 ? n.right : n.left;
    nearest_rec(first, depth + 1, q, best, best_d2);
    if (diff * diff < best_d2) nearest_rec(second, depth + 1, q, best, best_d2);
  }

  void radius_rec(int id, int depth, const Point<D>& q, double r2, std::vector<int>& out) const {
    if (id < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (dist2(n.p, q) <= r2) out.push_back(id);
    const int axis = depth % D;
    const double diff = q[axis] - n.p[axis];
    const int first = diff < 0 ? n.left : n.right;
    const int second = diff < 0 ? n.right : n.left;
    radius_rec(first, depth + 1, q, r2, out);
    if (diff * diff <= r2) radius_rec(second, depth + 1, q, r2, out);
  }

  std::vector<Node> nodes_;
};

struct RrtConfig {
  int iters = 500;
  double step = 1.0;
  double goal_bias = 0.05;
  double delta = 0.01;
  /// Rewiring-radius constant in r = min(gamma (log n / n)^(1/D), step);
  /// 0 selects 2 * step * (world volume / unit-ball volume)^(1/D).
  double gamma = 0.0;
  bool informed = false;
  std::uint64_t seed = 0;
};

/// Exploration tree. Parent links form a tree rooted at node 0 (the start);
/// cost[i] is the exact cost-to-come (maintained through rewiring).
template <int D>
struct RrtTree {
  std::vector<Point<D>> nodes;
  std::vector<int> parent;
  std::vector<double> cost;
  std::vector<std::vector<int>> children;
};

template <int D>
struct RrtResult {
  bool success = false;
  Path<D> path;
  double cost = 0.0;
  int first_solution_iter = -1;
  std::uint64_t collision_checks = 0;
  double total_s = 0.0;
};

/// Uniform sample from the prolate hyperspheroid with foci (start, goal)
/// and transverse diameter c_best, intersected with `bounds` by rejection.
/// Every returned point satisfies |x-start| + |x-goal| <= c_best.
template <int D>
Point<D> informed_sample(Mt19937& rng, const Point<D>& start, const Point<D>& goal, double c_best,
                         const Aabb<D>& bounds) {
  const double c_min = distance(start, goal);
  if (c_best < c_min) c_best = c_min;
  const Point<D> center = (start + goal) * 0.5;

  // Orthonormal frame with the first axis along the foci line.
  std::array<Point<D>, D> axes{};
  Point<D> a1 = (goal - start) * (1.0 / c_min);
  axes[0] = a1;
  if constexpr (D == 2) {
    axes[1] = Point<2>{{-a1[1], a1[0]}};
  } else {
    int h = 0;
    for (int k = 1; k < 3; ++k) {
      if (std::abs(a1[k]) < std::abs(a1[h])) h = k;
    }
    Point<3> e{};
    e[h] = 1.0;
    Point<3> b{{a1[1] * e[2] - a1[2] * e[1], a1[2] * e[0] - a1[0] * e[2],
                a1[0] * e[1] - a1[1] * e[0]}};
    b = b * (1.0 / norm(b));
    axes[1] = b;
    axes[2] = Point<3>{{a1[1] * b[2] - a1[2] * b[1], a1[2] * b[0] - a1[0] * b[2],
                        a1[0] * b[1] - a1[1] * b[0]}};
  }

  std::array<double, D> radii{};
  radii[0] = c_best / 2.0;
  const double conj = std::sqrt(std::max(c_best * c_best - c_min * c_min, 0.0)) / 2.0;
  for (int k = 1; k < D; ++k) radii[k] = conj;

  for (int attempt = 0; attempt < 100000; ++attempt) {
    // Uniform point in the unit D-ball by rejection from the cube.
    std::array<double, D> u{};
    double n2 = 0.0;
    for (int k = 0; k < D; ++k) {
      u[k] = rng.uniform(-1.0, 1.0);
      n2 += u[k] * u[k];
    }
    if (n2 > 1.0) continue;

    Point<D> x = center;
    for (int k = 0; k < D; ++k) x = x + axes[k] * (radii[k] * u[k]);
    if (!bounds.contains(x)) continue;
    if (distance(x, start) + distance(x, goal) > c_best) continue;
    return x;
  }
  return center;  // informed set ~degenerate; the midpoint always qualifies
}

/// RRT* / Informed-RRT*: uniform sampling with goal bias (the informed
/// variant switches to ellipsoidal samples once a solution exists), max
/// step steering, discretized segment checks at delta, rewiring within the
/// shrinking radius, k-d tree nearest/near queries. A node reaches the goal
/// when within one step of it over a free segment. Deterministic per seed.
template <int D>
class RrtStar {
 public:
  RrtStar(const Workspace<D>& ws, const RrtConfig& cfg) : ws_(ws), cfg_(cfg) {
    gamma_ = cfg.gamma;
    if (gamma_ <= 0.0) {
      const double ball = D == 2 ? 3.141592653589793 : 4.0 / 3.0 * 3.141592653589793;
      gamma_ = 2.0 * cfg.step * std::pow(ws.bounds.volume() / ball, 1.0 / D);
    }
  }

  RrtResult<D> run(const Point<D>& start, const Point<D>& goal);

  const RrtTree<D>& tree() const { return tree_; }

 private:
  bool segment_free(const Point<D>& a, const Point<D>& b) {
    return !segment_in_collision(a, b, ws_, cfg_.delta, &cc_);
  }

  /// Applies a cost improvement to `node` and its whole subtree so stored
  /// cost-to-come always equals the path length from the root.
  void propagate_cost(int node, double delta_cost) {
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      tree_.cost[static_cast<std::size_t>(cur)] += delta_cost;
      for (int c : tree_.children[static_cast<std::size_t>(cur)]) stack.push_back(c);
    }
  }

  double best_goal_cost(const Point<D>& goal, int& best_node) const {
    double best = std::numeric_limits<double>::infinity();
    best_node = -1;
    for (int id : goal_nodes_) {
      const double c =
          tree_.cost[static_cast<std::size_t>(id)] + distance(tree_.nodes[static_cast<std::size_t>(id)], goal);
      if (c < best) {
        best = c;
        best_node = id;
      }
    }
    return best;
  }

  const Workspace<D>& ws_;
  RrtConfig cfg_;
  double gamma_ = 0.0;
  RrtTree<D> tree_;
  KdTree<D> index_;
  std::vector<int> goal_nodes_;
  std::uint64_t cc_ = 0;
};

template <int D>
RrtResult<D> RrtStar<D>::run(const Point<D>& start, const Point<D>& goal) {
  if (point_in_collision(start, ws_)) throw InvalidEndpoint("rrt_star: start is in collision");
  if (point_in_collision(goal, ws_)) throw InvalidEndpoint("rrt_star: goal is in collision");

  const auto t0 = std::chrono::steady_clock::now();
  Mt19937 rng(static_cast<std::uint32_t>(cfg_.seed ^ (cfg_.seed >> 32)));

  tree_ = RrtTree<D>{};
  index_ = KdTree<D>{};
  goal_nodes_.clear();
  cc_ = 0;
  tree_.nodes.push_back(start);
  tree_.parent.push_back(-1);
  tree_.cost.push_back(0.0);
  tree_.children.emplace_back();
  index_.insert(start);

  RrtResult<D> res;
  std::vector<int> near;

  for (int iter = 0; iter < cfg_.iters; ++iter) {
    // Sample.
    Point<D> x_rand;
    if (rng.real53() < cfg_.goal_bias) {
      x_rand = goal;
    } else if (cfg_.informed && !goal_nodes_.empty()) {
      int best_node = -1;
      const double c_best = best_goal_cost(goal, best_node);
      x_rand = informed_sample(rng, start, goal, c_best, ws_.bounds);
    } else {
      for (int k = 0; k < D; ++k) x_rand[k] = rng.uniform(ws_.bounds.lo[k], ws_.bounds.hi[k]);
    }

    // Steer from the nearest node by at most one step.
    const int near_id = index_.nearest(x_rand);
    const Point<D>& x_near = tree_.nodes[static_cast<std::size_t>(near_id)];
    Point<D> x_new = x_rand;
    const double d = distance(x_near, x_rand);
    if (d > cfg_.step) x_new = x_near + (x_rand - x_near) * (cfg_.step / d);
    if (d == 0.0) continue;  // duplicate of an existing node
    if (!segment_free(x_near, x_new)) continue;

    // Choose the cheapest valid parent within the shrinking radius.
    const auto n = static_cast<double>(tree_.nodes.size());
    const double radius = std::min(gamma_ * std::pow(std::log(n + 1.0) / (n + 1.0), 1.0 / D), cfg_.step);
    index_.radius(x_new, radius, near);

    int parent = near_id;
    double best_cost = tree_.cost[static_cast<std::size_t>(near_id)] + distance(x_near, x_new);
    for (int z : near) {
      if (z == near_id) continue;
      const double c = tree_.cost[static_cast<std::size_t>(z)] +
                       distance(tree_.nodes[static_cast<std::size_t>(z)], x_new);
      if (c < best_cost && segment_free(tree_.nodes[static_cast<std::size_t>(z)], x_new)) {
        best_cost = c;
        parent = z;
      }
    }

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(x_new);
    tree_.parent.push_back(parent);
    tree_.cost.push_back(best_cost);
    tree_.children.emplace_back();
    tree_.children[static_cast<std::size_t>(parent)].push_back(id);
    index_.insert(x_new);

    // Rewire the neighborhood through the new node where cheaper.
    for (int z : near) {
      if (z == parent) continue;
      const double through =
          best_cost + distance(x_new, tree_.nodes[static_cast<std::size_t>(z)]);
      if (through + 1e-12 < tree_.cost[static_cast<std::size_t>(z)] &&
          segment_free(x_new, tree_.nodes[static_cast<std::size_t>(z)])) {
        auto& old_children = tree_.children[static_cast<std::size_t>(tree_.parent[static_cast<std::size_t>(z)])];
        old_children.erase(std::find(old_children.begin(), old_children.end(), z));
        tree_.parent[static_cast<std::size_t>(z)] = id;
        tree_.children[static_cast<std::size_t>(id)].push_back(z);
        propagate_cost(z, through - tree_.cost[static_cast<std::size_t>(z)]);
      }
    }

    // Goal connection: within one step over a free segment.
    if (distance(x_new, goal) <= cfg_.step && segment_free(x_new, goal)) {
      goal_nodes_.push_back(id);
      if (res.first_solution_iter < 0) res.first_solution_iter = iter;
    }
  }

  int best_node = -1;
  const double best = best_goal_cost(goal, best_node);
  if (best_node >= 0) {
    Path<D> rev;
    for (int id = best_node; id >= 0; id = tree_.parent[static_cast<std::size_t>(id)]) {
      rev.push_back(tree_.nodes[static_cast<std::size_t>(id)]);
    }
    res.path.assign(rev.rbegin(), rev.rend());
    res.path.push_back(goal);
    res.cost = best;
    res.success = true;
  }
  res.collision_checks = cc_;
  res.total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Long-budget RRT* followed by smoothing; the source of training tuples
/// and the denominator of relative cost. Throws GroundTruthFailed when no
/// solution is found within the budget.
template <int D>
Path<D> ground_truth(const Point<D>& start, const Point<D>& goal, const Workspace<D>& ws,
                     double delta, std::uint64_t seed, int iters = 20000) {
  RrtConfig cfg;
  cfg.iters = iters;
  cfg.delta = delta;
  cfg.seed = seed;
  RrtStar<D> planner(ws, cfg);
  const RrtResult<D> res = planner.run(start, goal);
  if (!res.success) throw GroundTruthFailed("ground_truth: no solution within budget");
  return smooth(res.path, ws, delta);
}

}  // namespace p3net
