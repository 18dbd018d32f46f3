#include "p3net/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>
#include <tuple>

#include "p3net/rrt.hpp"

namespace p3net {

namespace {
constexpr const char* kResultsSchema = "# p3net results v1";
constexpr const char* kResultsHeader =
    "planner,params,task,success,encode_s,initial_s,replan_s,refine_s,total_s,cost,rel_cost,"
    "pnet_calls,cc_calls";
constexpr const char* kSummarySchema = "# p3net summary v1";
constexpr const char* kSummaryHeader =
    "planner,params,n_tasks,success_rate,mean_total_s,median_total_s,n_rel,median_rel_cost,"
    "q1_rel_cost,q3_rel_cost";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string opt_field(double v) { return v < 0 ? std::string() : fmt(v); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string PlannerSetup::params_string() const {
  char buf[160];
  if (type == "rrt_star" || type == "informed_rrt_star") {
    std::snprintf(buf, sizeof(buf), "iters=%d;step=1;delta=%g", rrt_iters, cfg.delta);
  } else {
    std::snprintf(buf, sizeof(buf), "B=%d;I=%d;I_Init=%d;I_Replan=%d;I_Refine=%d;delta=%g",
                  cfg.batch, cfg.max_iters, cfg.init_attempts, cfg.replan_rounds,
                  cfg.refine_rounds, cfg.delta);
  }
  return buf;
}

void results_write(const std::vector<BenchRecord>& rows, const std::string& path) {
  std::vector<const BenchRecord*> sorted;
  sorted.reserve(rows.size());
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const BenchRecord* a, const BenchRecord* b) {
    return std::tie(a->planner, a->params, a->task) < std::tie(b->planner, b->params, b->task);
  });

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << kResultsSchema << '\n' << kResultsHeader << '\n';
  for (const auto* r : sorted) {
    f << r->planner << ',' << r->params << ',' << r->task << ',' << r->success << ','
      << fmt(r->encode_s) << ',' << fmt(r->initial_s) << ',' << fmt(r->replan_s) << ','
      << fmt(r->refine_s) << ',' << fmt(r->total_s) << ',' << opt_field(r->cost) << ','
      << opt_field(r->rel_cost) << ',' << r->pnet_calls << ',' << r->cc_calls << '\n';
  }
}

std::vector<BenchRecord> results_read(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != kResultsSchema) throw FormatError("results: bad schema line");
  if (!std::getline(f, line) || line != kResultsHeader) throw FormatError("results: bad header");
  std::vector<BenchRecord> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 13) throw FormatError("results: wrong column count");
    BenchRecord r;
    r.planner = cols[0];
    r.params = cols[1];
    r.task = cols[2];
    r.success = std::stoi(cols[3]);
    r.encode_s = std::stod(cols[4]);
    r.initial_s = std::stod(cols[5]);
    r.replan_s = std::stod(cols[6]);
    r.refine_s = std::stod(cols[7]);
    r.total_s = std::stod(cols[8]);
    r.cost = cols[9].empty() ? -1.0 : std::stod(cols[9]);
    r.rel_cost = cols[10].empty() ? -1.0 : std::stod(cols[10]);
    r.pnet_calls = std::stoull(cols[11]);
    r.cc_calls = std::stoull(cols[12]);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

template <int D>
BenchRecord run_one(const Dataset<D>& ds, const DatasetTask<D>& task, const InferenceEngine* engine,
                    const PlannerSetup& setup, std::uint64_t seed) {
  BenchRecord rec;
  rec.planner = setup.type;
  rec.params = setup.params_string();
  rec.task = task.id;
  const Workspace<D>& ws = ds.workspaces[static_cast<std::size_t>(task.ws_index)].ws;

  double cost = -1.0;
  try {
    if (setup.type == "rrt_star" || setup.type == "informed_rrt_star") {
      RrtConfig rc;
      rc.iters = setup.rrt_iters;
      rc.delta = setup.cfg.delta;
      rc.informed = setup.type == "informed_rrt_star";
      rc.seed = seed;
      RrtStar<D> planner(ws, rc);
      const RrtResult<D> res = planner.run(task.start, task.goal);
      rec.success = res.success ? 1 : 0;
      rec.initial_s = res.total_s;
      rec.total_s = res.total_s;
      rec.cc_calls = res.collision_checks;
      if (res.success) cost = res.cost;
    } else {
      PlannerConfig cfg = setup.cfg;
      if (setup.type == "mpnet") {
        cfg.batch = 1;
        cfg.init_attempts = 1;
        cfg.refine_rounds = 0;
      }
      cfg.seed = seed;
      const auto& cloud = ds.workspaces[static_cast<std::size_t>(task.ws_index)].cloud;
      const PlanResult<D> res = p3net_plan(task.start, task.goal, cloud, ws, cfg, *engine);
      rec.success = res.success ? 1 : 0;
      rec.encode_s = res.times.encode_s;
      rec.initial_s = res.times.initial_s;
      rec.replan_s = res.times.replan_s;
      rec.refine_s = res.times.refine_s;
      rec.total_s = res.times.total_s;
      rec.pnet_calls = res.counters.pnet_calls;
      rec.cc_calls = res.counters.collision_checks;
      if (res.success) cost = res.cost;
    }
  } catch (const Error&) {
    rec.success = 0;
  }

  if (rec.success && cost >= 0) {
    rec.cost = cost;
    if (task.ground_truth && task.ground_truth->size() >= 2) {
      const double gt = path_cost(*task.ground_truth);
      if (gt > 0) rec.rel_cost = cost / gt;
    }
  }
  return rec;
}

}  // namespace

template <int D>
std::vector<BenchRecord> run_bench(const Dataset<D>& ds, const InferenceEngine* engine,
                                   const std::vector<PlannerSetup>& planners,
                                   const BenchOptions& opt) {
  std::vector<const DatasetTask<D>*> tasks;
  for (const auto& t : ds.tasks) {
    for (Split s : opt.splits) {
      if (t.split == s) {
        tasks.push_back(&t);
        break;
      }
    }
  }

  struct Unit {
    std::size_t planner;
    std::size_t task;
    std::uint64_t seed;
  };
  std::vector<Unit> units;
  units.reserve(planners.size() * tasks.size());
  for (std::size_t p = 0; p < planners.size(); ++p) {
    const bool neural = planners[p].type != "rrt_star" && planners[p].type != "informed_rrt_star";
    if (neural && engine == nullptr) throw ConfigError("run_bench: neural planner without models");
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      units.push_back({p, t, derive_seed(opt.seed ^ (0xB5u + p), t)});
    }
  }

  std::vector<BenchRecord> rows(units.size());
  std::atomic<std::size_t> next{0};
  const int jobs = std::max(1, opt.jobs);
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= units.size()) return;
      const Unit& u = units[i];
      rows[i] = run_one<D>(ds, *tasks[u.task], engine, planners[u.planner], u.seed);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::sort(rows.begin(), rows.end(), [](const BenchRecord& a, const BenchRecord& b) {
    return std::tie(a.planner, a.params, a.task) < std::tie(b.planner, b.params, b.task);
  });
  return rows;
}

template std::vector<BenchRecord> run_bench<2>(const Dataset<2>&, const InferenceEngine*,
                                               const std::vector<PlannerSetup>&, const BenchOptions&);
template std::vector<BenchRecord> run_bench<3>(const Dataset<3>&, const InferenceEngine*,
                                               const std::vector<PlannerSetup>&, const BenchOptions&);

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return -1.0;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& rows) {
  std::map<std::pair<std::string, std::string>, std::vector<const BenchRecord*>> groups;
  for (const auto& r : rows) groups[{r.planner, r.params}].push_back(&r);

  std::vector<SummaryRow> out;
  for (const auto& [key, recs] : groups) {
    SummaryRow s;
    s.planner = key.first;
    s.params = key.second;
    s.n_tasks = recs.size();
    std::vector<double> times, rel;
    double succ = 0;
    for (const auto* r : recs) {
      succ += r->success;
      times.push_back(r->total_s);
      if (r->success && r->rel_cost >= 0) rel.push_back(r->rel_cost);
    }
    s.success_rate = 100.0 * succ / static_cast<double>(recs.size());
    s.mean_total_s = 0;
    for (double t : times) s.mean_total_s += t;
    s.mean_total_s /= static_cast<double>(times.size());
    s.median_total_s = quantile(times, 0.5);
    s.n_rel = rel.size();
    if (!rel.empty()) {
      s.median_rel_cost = quantile(rel, 0.5);
      s.q1_rel_cost = quantile(rel, 0.25);
      s.q3_rel_cost = quantile(rel, 0.75);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void summary_write(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << kSummarySchema << '\n' << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    f << r.planner << ',' << r.params << ',' << r.n_tasks << ',' << fmt(r.success_rate) << ','
      << fmt(r.mean_total_s) << ',' << fmt(r.median_total_s) << ',' << r.n_rel << ','
      << opt_field(r.median_rel_cost) << ',' << opt_field(r.q1_rel_cost) << ','
      << opt_field(r.q3_rel_cost) << '\n';
  }
}

}  // namespace p3net
