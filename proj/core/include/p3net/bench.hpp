#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p3net/datagen.hpp"
#include "p3net/engine.hpp"
#include "p3net/planner.hpp"

namespace p3net {

/// One benchmarked planner configuration. `type` is one of p3net, mpnet,
/// rrt_star, informed_rrt_star; mpnet pins the special-case fields
/// (B = 1, I_Init = 1, I_Refine = 0).
struct PlannerSetup {
  std::string type = "p3net";
  PlannerConfig cfg;
  int rrt_iters = 500;

  std::string params_string() const;
};

/// One (planner, task) measurement row of results.csv.
struct BenchRecord {
  std::string planner;
  std::string params;
  std::string task;
  int success = 0;
  double encode_s = 0.0;
  double initial_s = 0.0;
  double replan_s = 0.0;
  double refine_s = 0.0;
  double total_s = 0.0;
  double cost = -1.0;      // < 0 means absent (failure)
  double rel_cost = -1.0;  // < 0 means absent (failure or no ground truth)
  std::uint64_t pnet_calls = 0;
  std::uint64_t cc_calls = 0;
};

/// results.csv with a versioned schema comment line. Rows are written
/// sorted by (planner, params, task).
void results_write(const std::vector<BenchRecord>& rows, const std::string& path);
std::vector<BenchRecord> results_read(const std::string& path);

struct BenchOptions {
  std::vector<Split> splits{Split::seen, Split::unseen};
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Runs every planner setup over every task of the selected splits.
/// Per-task seeds come from a splitmix expansion of (seed, planner index,
/// task ordinal), so results are independent of --jobs scheduling; rows
/// are sorted before return. Wall times are the only nondeterministic
/// columns. Task failures (e.g. InvalidEndpoint) are recorded as
/// success = 0 rather than aborting the run.
template <int D>
std::vector<BenchRecord> run_bench(const Dataset<D>& ds, const InferenceEngine* engine,
                                   const std::vector<PlannerSetup>& planners,
                                   const BenchOptions& opt);

extern template std::vector<BenchRecord> run_bench<2>(const Dataset<2>&, const InferenceEngine*,
                                                      const std::vector<PlannerSetup>&,
                                                      const BenchOptions&);
extern template std::vector<BenchRecord> run_bench<3>(const Dataset<3>&, const InferenceEngine*,
                                                      const std::vector<PlannerSetup>&,
                                                      const BenchOptions&);

/// Per-(planner, params) aggregates: success rate (percent), mean/median
/// total time, and quartiles of relative cost over successful rows that
/// have ground truth. Quantiles use linear interpolation between order
/// statistics (h = (n-1)p).
struct SummaryRow {
  std::string planner;
  std::string params;
  std::size_t n_tasks = 0;
  double success_rate = 0.0;
  double mean_total_s = 0.0;
  double median_total_s = 0.0;
  std::size_t n_rel = 0;
  double median_rel_cost = -1.0;
  double q1_rel_cost = -1.0;
  double q3_rel_cost = -1.0;
};

double quantile(std::vector<double> values, double p);
std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& rows);
void summary_write(const std::vector<SummaryRow>& rows, const std::string& path);

}  // namespace p3net
