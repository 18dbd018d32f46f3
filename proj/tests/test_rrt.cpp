#include <doctest.h>

#include "p3net/rrt.hpp"
#include "test_util.hpp"

using namespace p3net;

namespace {

Workspace<2> empty_world() {
  Workspace<2> ws;
  ws.bounds = {{{0, 0}}, {{40, 40}}};
  return ws;
}

template <int D>
void check_tree_invariants(const RrtTree<D>& tree, const Workspace<D>& ws, double delta) {
  REQUIRE_FALSE(tree.nodes.empty());
  CHECK_EQ(tree.parent[0], -1);
  CHECK_EQ(tree.cost[0], 0.0);
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    const int p = tree.parent[i];
    REQUIRE_GE(p, 0);
    // Stored cost-to-come equals the recomputed root-walk length.
    double walked = 0.0;
    int cur = static_cast<int>(i);
    while (tree.parent[static_cast<std::size_t>(cur)] >= 0) {
      const int par = tree.parent[static_cast<std::size_t>(cur)];
      walked += distance(tree.nodes[static_cast<std::size_t>(cur)], tree.nodes[static_cast<std::size_t>(par)]);
      cur = par;
    }
    CHECK_EQ(tree.cost[i], doctest::Approx(walked).epsilon(1e-9));
    CHECK_FALSE(segment_in_collision(tree.nodes[static_cast<std::size_t>(p)], tree.nodes[i], ws, delta));
  }
}

}  // namespace

TEST_CASE("kd-tree nearest and radius queries match brute force") {
  testutil::StdRng rng(3);
  KdTree<2> tree;
  std::vector<Point<2>> pts;
  for (int i = 0; i < 500; ++i) {
    const auto p = testutil::random_point<2>(rng, 0.0, 40.0);
    tree.insert(p);
    pts.push_back(p);

    const auto q = testutil::random_point<2>(rng, 0.0, 40.0);
    int best = -1;
    double best_d = 1e18;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double d = distance(pts[j], q);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    CHECK_EQ(tree.nearest(q), best);

    std::vector<int> got;
    tree.radius(q, 5.0, got);
    std::sort(got.begin(), got.end());
    std::vector<int> want;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (distance(pts[j], q) <= 5.0) want.push_back(static_cast<int>(j));
    }
    CHECK_EQ(got, want);
  }
}

TEST_CASE("rrt* succeeds on empty workspaces with near-straight cost") {
  const auto ws = empty_world();
  const Point<2> a{{5, 5}}, b{{32, 28}};
  const double straight = distance(a, b);
  int successes = 0;
  std::vector<double> costs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RrtConfig cfg;
    cfg.iters = 500;
    cfg.seed = seed;
    RrtStar<2> planner(ws, cfg);
    const auto res = planner.run(a, b);
    if (res.success) {
      ++successes;
      costs.push_back(res.cost);
      CHECK_EQ(res.path.front(), a);
      CHECK_EQ(res.path.back(), b);
    }
  }
  CHECK_GE(successes, 19);  // >= 95% of seeds
  // With the radius capped at the steer step, 500 iterations leave mild
  // zigzag; long-budget runs (see ground_truth) come out near-straight.
  std::sort(costs.begin(), costs.end());
  CHECK_LT(costs[costs.size() / 2], straight * 1.25);
}

TEST_CASE("rrt* with zero iterations fails; same seed reproduces the tree") {
  const auto ws = empty_world();
  RrtConfig cfg;
  cfg.iters = 0;
  RrtStar<2> planner(ws, cfg);
  CHECK_FALSE(planner.run(Point<2>{{1, 1}}, Point<2>{{30, 30}}).success);

  cfg.iters = 300;
  cfg.seed = 7;
  RrtStar<2> p1(ws, cfg), p2(ws, cfg);
  const auto r1 = p1.run(Point<2>{{1, 1}}, Point<2>{{30, 30}});
  const auto r2 = p2.run(Point<2>{{1, 1}}, Point<2>{{30, 30}});
  CHECK_EQ(r1.success, r2.success);
  CHECK_EQ(r1.cost, r2.cost);
  REQUIRE_EQ(p1.tree().nodes.size(), p2.tree().nodes.size());
  for (std::size_t i = 0; i < p1.tree().nodes.size(); ++i) {
    CHECK_EQ(p1.tree().nodes[i], p2.tree().nodes[i]);
  }
  CHECK(r1.path == r2.path);
}

TEST_CASE("rrt* rejects endpoints in collision") {
  auto ws = empty_world();
  ws.obstacles.push_back({{{10, 10}}, {{14, 14}}});
  RrtConfig cfg;
  RrtStar<2> planner(ws, cfg);
  CHECK_THROWS_AS(planner.run(Point<2>{{12, 12}}, Point<2>{{30, 30}}), InvalidEndpoint);
}

TEST_CASE("rrt* tree invariants hold after rewiring") {
  testutil::StdRng trng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const auto ws = testutil::random_workspace<2>(trng, 5);
    Point<2> a, b;
    do {
      a = testutil::random_point<2>(trng, 0.0, 40.0);
    } while (point_in_collision(a, ws));
    do {
      b = testutil::random_point<2>(trng, 0.0, 40.0);
    } while (point_in_collision(b, ws));
    RrtConfig cfg;
    cfg.iters = 400;
    cfg.seed = static_cast<std::uint64_t>(trial);
    RrtStar<2> planner(ws, cfg);
    planner.run(a, b);
    check_tree_invariants(planner.tree(), ws, cfg.delta);
  }
}

TEST_CASE("informed sampler stays inside the ellipse and the bounds") {
  Mt19937 rng(11);
  const Point<2> f1{{8, 9}}, f2{{30, 24}};
  Aabb<2> bounds{{{0, 0}}, {{40, 40}}};
  const double c_best = distance(f1, f2) * 1.2;
  for (int i = 0; i < 10000; ++i) {
    const auto x = informed_sample(rng, f1, f2, c_best, bounds);
    CHECK_LE(distance(x, f1) + distance(x, f2), c_best + 1e-9);
    CHECK(bounds.contains(x));
  }
  // 3D variant as well.
  Mt19937 rng3(12);
  const Point<3> g1{{5, 5, 5}}, g2{{30, 20, 12}};
  Aabb<3> bounds3{{{0, 0, 0}}, {{40, 40, 40}}};
  const double cb3 = distance(g1, g2) * 1.3;
  for (int i = 0; i < 5000; ++i) {
    const auto x = informed_sample(rng3, g1, g2, cb3, bounds3);
    CHECK_LE(distance(x, g1) + distance(x, g2), cb3 + 1e-9);
    CHECK(bounds3.contains(x));
  }
}

TEST_CASE("informed rrt* behaves exactly like rrt* before the first solution") {
  auto ws = empty_world();
  ws.obstacles.push_back({{{15, 5}}, {{25, 35}}});
  const Point<2> a{{5, 20}}, b{{35, 20}};

  RrtConfig plain;
  plain.iters = 2000;
  plain.seed = 3;
  RrtStar<2> probe(ws, plain);
  const auto res = probe.run(a, b);
  REQUIRE(res.success);
  REQUIRE_GE(res.first_solution_iter, 0);

  // Rerun both planners up to the iteration of the first solution: the
  // informed planner has not yet sampled the ellipse, so trees must match.
  RrtConfig cut = plain;
  cut.iters = res.first_solution_iter + 1;
  RrtConfig cutInformed = cut;
  cutInformed.informed = true;
  RrtStar<2> p1(ws, cut), p2(ws, cutInformed);
  p1.run(a, b);
  p2.run(a, b);
  REQUIRE_EQ(p1.tree().nodes.size(), p2.tree().nodes.size());
  for (std::size_t i = 0; i < p1.tree().nodes.size(); ++i) {
    CHECK_EQ(p1.tree().nodes[i], p2.tree().nodes[i]);
  }
}

TEST_CASE("informed rrt* final cost never exceeds its first solution") {
  auto ws = empty_world();
  ws.obstacles.push_back({{{15, 5}}, {{25, 35}}});
  const Point<2> a{{5, 20}}, b{{35, 20}};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RrtConfig cfg;
    cfg.iters = 1500;
    cfg.informed = true;
    cfg.seed = seed;
    RrtStar<2> planner(ws, cfg);
    const auto full = planner.run(a, b);
    if (!full.success) continue;

    RrtConfig first = cfg;
    first.iters = full.first_solution_iter + 1;
    RrtStar<2> probe(ws, first);
    const auto early = probe.run(a, b);
    REQUIRE(early.success);
    CHECK_LE(full.cost, early.cost + 1e-9);
  }
}

TEST_CASE("ground truth on an empty workspace is the straight line") {
  const auto ws = empty_world();
  const Point<2> a{{4, 4}}, b{{30, 22}};
  const auto path = ground_truth(a, b, ws, 0.05, 1, 3000);
  REQUIRE_EQ(path.size(), 2);
  CHECK_EQ(path.front(), a);
  CHECK_EQ(path.back(), b);
  CHECK_EQ(path_cost(path) / path_cost(path), 1.0);  // self-relative cost
}

TEST_CASE("ground truth fails when the goal is sealed off") {
  auto ws = empty_world();
  // A closed ring of boxes around the goal pocket.
  ws.obstacles.push_back({{{15, 15}}, {{25, 17}}});
  ws.obstacles.push_back({{{15, 23}}, {{25, 25}}});
  ws.obstacles.push_back({{{15, 17}}, {{17, 23}}});
  ws.obstacles.push_back({{{23, 17}}, {{25, 23}}});
  const Point<2> goal{{20, 20}};
  REQUIRE_FALSE(point_in_collision(goal, ws));
  CHECK_THROWS_AS(ground_truth(Point<2>{{5, 5}}, goal, ws, 0.05, 1, 1500), GroundTruthFailed);
}
