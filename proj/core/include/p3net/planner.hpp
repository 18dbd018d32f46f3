#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "p3net/engine.hpp"
#include "p3net/errors.hpp"
#include "p3net/geometry.hpp"
#include "p3net/mt19937.hpp"
#include "p3net/pointcloud.hpp"

namespace p3net {

struct PlannerConfig {
  int batch = 1;           // B: forward-backward path pairs per inference
  int max_iters = 50;      // I: bidirectional iterations per sub-plan
  int init_attempts = 1;   // I_Init
  int replan_rounds = 50;  // I_Replan
  int refine_rounds = 0;   // I_Refine
  double delta = 0.01;     // collision-check interval
  std::uint64_t seed = 0;
};

struct PlanCounters {
  std::uint64_t pnet_calls = 0;
  std::uint64_t collision_checks = 0;
};

struct PhaseTimes {
  double encode_s = 0.0;
  double initial_s = 0.0;
  double replan_s = 0.0;
  double refine_s = 0.0;
  double total_s = 0.0;
};

template <int D>
struct PlanResult {
  bool success = false;
  Path<D> path;       // meaningful iff success
  double cost = 0.0;  // meaningful iff success
  PhaseTimes times;
  PlanCounters counters;
  /// Best cost entering refinement followed by the best after each round;
  /// filled only when refinement runs. Non-increasing by construction.
  std::vector<double> refine_costs;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <int D>
void clamp_to_bounds(std::vector<double>& rows, const Aabb<D>& bounds) {
  const std::size_t n = rows.size() / D;
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < D; ++k) {
      double& v = rows[i * D + k];
      if (v < bounds.lo[k]) v = bounds.lo[k];
      if (v > bounds.hi[k]) v = bounds.hi[k];
    }
  }
}

template <int D>
Point<D> row_point(const std::vector<double>& rows, std::size_t i) {
  Point<D> p;
  for (int k = 0; k < D; ++k) p[k] = rows[i * D + k];
  return p;
}

template <int D>
void set_row(std::vector<double>& rows, std::size_t i, const Point<D>& p) {
  for (int k = 0; k < D; ++k) rows[i * D + k] = p[k];
}

}  // namespace detail

/// Batched bidirectional neural planning. Expands B forward paths from c_s
/// and B backward paths from c_g; each iteration runs one planning
/// inference over all 2B endpoints, then tries per pair, in order, the
/// three connections (new fwd, old bwd), (old fwd, new bwd), (new fwd, new
/// bwd). The first connectable pair wins and the joined path is returned
/// start-to-goal (the backward half reversed). Endpoint buffers advance
/// once per iteration, after the pair scan. Predicted waypoints are clamped
/// to the world bounds before any collision test.
///
/// `allow_direct` short-circuits a directly connectable (c_s, c_g) before
/// the loop. It is used for top-level initial planning only; refinement
/// sub-plans must sample fresh waypoints to be useful, and replanning calls
/// it on pairs already known to be blocked.
template <int D>
std::optional<Path<D>> neural_planner_ex(const Point<D>& c_s, const Point<D>& c_g,
                                         const std::vector<double>& phi, const Workspace<D>& ws,
                                         const PlannerConfig& cfg, const InferenceEngine& engine,
                                         WordSource& rng, PlanCounters& ctr,
                                         bool allow_direct) {
  const double delta = cfg.delta;
  if (allow_direct && !segment_in_collision(c_s, c_g, ws, delta, &ctr.collision_checks)) {
    return Path<D>{c_s, c_g};
  }

  const auto b = static_cast<std::size_t>(cfg.batch);
  std::vector<Path<D>> fwd(b, Path<D>{c_s});
  std::vector<Path<D>> bwd(b, Path<D>{c_g});

  const std::size_t rows = 2 * b;
  std::vector<double> cur(rows * D), goals(rows * D), next;
  for (std::size_t j = 0; j < b; ++j) {
    detail::set_row<D>(cur, 2 * j, c_s);
    detail::set_row<D>(cur, 2 * j + 1, c_g);
    detail::set_row<D>(goals, 2 * j, c_g);
    detail::set_row<D>(goals, 2 * j + 1, c_s);
  }

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    engine.plan_step(phi, cur, goals, rows, rng, next);
    ++ctr.pnet_calls;
    detail::clamp_to_bounds<D>(next, ws.bounds);

    for (std::size_t j = 0; j < b; ++j) {
      const Point<D> a_cur = detail::row_point<D>(cur, 2 * j);
      const Point<D> b_cur = detail::row_point<D>(cur, 2 * j + 1);
      const Point<D> a_new = detail::row_point<D>(next, 2 * j);
      const Point<D> b_new = detail::row_point<D>(next, 2 * j + 1);

      bool expand_a = true, expand_b = true, connected = true;
      if (!segment_in_collision(a_new, b_cur, ws, delta, &ctr.collision_checks)) {
        expand_a = true;
        expand_b = false;
      } else if (!segment_in_collision(a_cur, b_new, ws, delta, &ctr.collision_checks)) {
        expand_a = false;
        expand_b = true;
      } else if (!segment_in_collision(a_new, b_new, ws, delta, &ctr.collision_checks)) {
        expand_a = true;
        expand_b = true;
      } else {
        connected = false;
      }

      if (expand_a) fwd[j].push_back(a_new);
      if (expand_b) bwd[j].push_back(b_new);

      if (connected) {
        Path<D> tau = fwd[j];
        tau.insert(tau.end(), bwd[j].rbegin(), bwd[j].rend());
        return tau;
      }
    }
    cur = next;
  }
  return std::nullopt;
}

/// Keeps every connectable pair of consecutive waypoints and replaces each
/// blocked pair with a freshly planned detour, splicing the detour's
/// interior waypoints in place. Fails if any detour cannot be found.
template <int D>
std::optional<Path<D>> replan(const Path<D>& tau, const std::vector<double>& phi,
                              const Workspace<D>& ws, const PlannerConfig& cfg,
                              const InferenceEngine& engine, WordSource& rng, PlanCounters& ctr) {
  Path<D> out{tau.front()};
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
    if (!segment_in_collision(tau[i], tau[i + 1], ws, cfg.delta, &ctr.collision_checks)) {
      out.push_back(tau[i + 1]);
      continue;
    }
    const auto detour =
        neural_planner_ex(tau[i], tau[i + 1], phi, ws, cfg, engine, rng, ctr, false);
    if (!detour) return std::nullopt;
    out.insert(out.end(), detour->begin() + 1, detour->end());
  }
  return out;
}

/// Re-plans every edge of a collision-free path and splices a sub-path in
/// only when one was found and is itself collision-free, so the output is
/// always collision-free. Cost acceptance happens at the caller.
template <int D>
Path<D> refine(const Path<D>& tau, const std::vector<double>& phi, const Workspace<D>& ws,
               const PlannerConfig& cfg, const InferenceEngine& engine, WordSource& rng,
               PlanCounters& ctr) {
  Path<D> out{tau.front()};
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
    const auto sub = neural_planner_ex(tau[i], tau[i + 1], phi, ws, cfg, engine, rng, ctr, false);
    if (sub && !path_in_collision(*sub, ws, cfg.delta, &ctr.collision_checks)) {
      out.insert(out.end(), sub->begin() + 1, sub->end());
    } else {
      out.push_back(tau[i + 1]);
    }
  }
  return out;
}

/// Full planning pipeline: encode once, up to I_Init initial bidirectional
/// attempts, smoothing, up to I_Replan replan+smooth rounds when the
/// candidate still collides, then I_Refine refine+smooth rounds accepting
/// only strict cost improvements. A replan round whose detour search fails
/// leaves the current candidate in place and consumes the round. All
/// randomness stems from cfg.seed. Throws InvalidEndpoint when start or
/// goal lies inside an obstacle.
template <int D>
PlanResult<D> p3net_plan(const Point<D>& c_start, const Point<D>& c_goal, const PointCloud& pc,
                         const Workspace<D>& ws, const PlannerConfig& cfg,
                         const InferenceEngine& engine) {
  if (point_in_collision(c_start, ws)) throw InvalidEndpoint("p3net_plan: start is in collision");
  if (point_in_collision(c_goal, ws)) throw InvalidEndpoint("p3net_plan: goal is in collision");

  PlanResult<D> res;
  Mt19937 rng(static_cast<std::uint32_t>(cfg.seed ^ (cfg.seed >> 32)));
  const auto t_start = std::chrono::steady_clock::now();

  auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> phi = engine.encode(pc);
  res.times.encode_s = detail::seconds_since(t0);

  // Initial coarse planning.
  t0 = std::chrono::steady_clock::now();
  std::optional<Path<D>> tau;
  for (int attempt = 0; attempt < cfg.init_attempts && !tau; ++attempt) {
    tau = neural_planner_ex(c_start, c_goal, phi, ws, cfg, engine, rng, res.counters, true);
  }
  if (!tau) {
    res.times.initial_s = detail::seconds_since(t0);
    res.times.total_s = detail::seconds_since(t_start);
    return res;
  }
  Path<D> current = smooth(*tau, ws, cfg.delta, &res.counters.collision_checks);
  bool feasible = !path_in_collision(current, ws, cfg.delta, &res.counters.collision_checks);
  res.times.initial_s = detail::seconds_since(t0);

  // Replanning.
  if (!feasible) {
    t0 = std::chrono::steady_clock::now();
    for (int round = 0; round < cfg.replan_rounds && !feasible; ++round) {
      auto candidate = replan(current, phi, ws, cfg, engine, rng, res.counters);
      if (!candidate) continue;  // keep the current path, retry with fresh samples
      current = smooth(*candidate, ws, cfg.delta, &res.counters.collision_checks);
      feasible = !path_in_collision(current, ws, cfg.delta, &res.counters.collision_checks);
    }
    res.times.replan_s = detail::seconds_since(t0);
    if (!feasible) {
      res.times.total_s = detail::seconds_since(t_start);
      return res;
    }
  }

  // Refinement: accept a candidate only when it strictly lowers the cost.
  Path<D> best = current;
  double best_cost = path_cost(best);
  if (cfg.refine_rounds > 0) {
    t0 = std::chrono::steady_clock::now();
    res.refine_costs.push_back(best_cost);
    for (int round = 0; round < cfg.refine_rounds; ++round) {
      Path<D> candidate = refine(best, phi, ws, cfg, engine, rng, res.counters);
      candidate = smooth(candidate, ws, cfg.delta, &res.counters.collision_checks);
      const double cost = path_cost(candidate);
      if (cost < best_cost) {
        best = std::move(candidate);
        best_cost = cost;
      }
      res.refine_costs.push_back(best_cost);
    }
    res.times.refine_s = detail::seconds_since(t0);
  }

  res.success = true;
  res.path = std::move(best);
  res.cost = best_cost;
  res.times.total_s = detail::seconds_since(t_start);
  return res;
}

}  // namespace p3net
