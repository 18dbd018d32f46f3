// p3net: dataset generation, training, planning, benchmark sweeps, and
// report aggregation for the batched bidirectional neural planner and its
// RRT*-family baselines.
//
// Exit codes: 0 success, 1 runtime error, 2 usage/config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "p3net/bench.hpp"
#include "p3net/checkpoint.hpp"
#include "p3net/datagen.hpp"
#include "p3net/planner.hpp"
#include "p3net/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace p3net;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  try {
    json j;
    f >> j;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// CLI flag wins; otherwise the config key; otherwise the built-in default
// already stored in `value`.
template <typename T>
void merge(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool fixed_point = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file (flags win over keys)");
  cmd->add_option("--seed", args.seed, "master seed");
  cmd->add_option("--jobs", args.jobs, "worker threads for task sweeps");
  cmd->add_flag("--fixed-point", args.fixed_point, "run inference in Q16.16/Q8.16");
  cmd->add_option("--out", args.out, "output directory");
}

// The float engine refers to the models by address, so they live behind
// unique_ptrs: moving a LoadedModels keeps them stable.
struct LoadedModels {
  std::unique_ptr<EncoderModel> enc;
  std::unique_ptr<PlannerModel> pnet;
  std::unique_ptr<InferenceEngine> engine;
};

LoadedModels load_models(const std::string& dir, bool fixed, int expect_dim) {
  LoadedModels m;
  m.enc = std::make_unique<EncoderModel>(
      checkpoint_read_encoder((fs::path(dir) / "enet.p3nm").string()));
  m.pnet = std::make_unique<PlannerModel>(
      checkpoint_read_planner((fs::path(dir) / "pnet.p3nm").string()));
  if (m.enc->dim != expect_dim || m.pnet->dim != expect_dim) {
    throw FormatError("checkpoint dim does not match the dataset");
  }
  if (fixed) {
    m.engine = std::make_unique<FixedEngine>(*m.enc, *m.pnet);
  } else {
    m.engine = std::make_unique<FloatEngine>(*m.enc, *m.pnet);
  }
  return m;
}

std::vector<PlannerSetup> default_grid(double delta) {
  std::vector<PlannerSetup> grid;
  for (int b : {1, 2, 4, 8}) {
    for (int replan : {10, 20, 50, 100}) {
      PlannerSetup s;
      s.type = "p3net";
      s.cfg.batch = b;
      s.cfg.init_attempts = 5;
      s.cfg.replan_rounds = replan;
      s.cfg.refine_rounds = 0;
      s.cfg.delta = delta;
      grid.push_back(s);
    }
  }
  return grid;
}

std::vector<PlannerSetup> grid_from_config(const json& cfg, double delta, bool with_baselines) {
  std::vector<PlannerSetup> grid;
  if (cfg.contains("planners")) {
    for (const auto& jp : cfg.at("planners")) {
      const std::string type = jp.value("type", "p3net");
      auto ints = [&](const char* key, std::vector<int> dflt) {
        if (!jp.contains(key)) return dflt;
        const auto& v = jp.at(key);
        if (v.is_array()) return v.get<std::vector<int>>();
        return std::vector<int>{v.get<int>()};
      };
      if (type == "rrt_star" || type == "informed_rrt_star") {
        for (int iters : ints("iters", {500})) {
          PlannerSetup s;
          s.type = type;
          s.rrt_iters = iters;
          s.cfg.delta = jp.value("delta", delta);
          grid.push_back(s);
        }
      } else if (type == "p3net" || type == "mpnet") {
        for (int b : ints("B", {type == "mpnet" ? 1 : 4})) {
          for (int replan : ints("I_Replan", {50})) {
            PlannerSetup s;
            s.type = type;
            s.cfg.batch = b;
            s.cfg.init_attempts = jp.value("I_Init", type == "mpnet" ? 1 : 5);
            s.cfg.replan_rounds = replan;
            s.cfg.refine_rounds = jp.value("I_Refine", 0);
            s.cfg.max_iters = jp.value("I", 50);
            s.cfg.delta = jp.value("delta", delta);
            grid.push_back(s);
          }
        }
      } else {
        throw ConfigError("unknown planner type: " + type);
      }
    }
  } else {
    grid = default_grid(delta);
  }
  if (with_baselines) {
    for (const char* type : {"rrt_star", "informed_rrt_star"}) {
      PlannerSetup s;
      s.type = type;
      s.rrt_iters = 500;
      s.cfg.delta = delta;
      grid.push_back(s);
    }
  }
  return grid;
}

std::vector<Split> parse_splits(const std::string& csv) {
  std::vector<Split> out;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(split_from_name(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (out.empty()) throw ConfigError("no splits selected");
  return out;
}

// ---------------------------------------------------------------- gen ----

int cmd_gen(const CommonArgs& common, const json& cfg, int dim, bool hard) {
  DatasetSpec spec;
  spec.recipe = default_recipe(dim, hard);
  spec.seed = common.seed;
  if (cfg.contains("cloud_points")) spec.recipe.cloud_points = cfg.at("cloud_points").get<std::size_t>();
  if (cfg.contains("train_workspaces")) spec.train_workspaces = cfg.at("train_workspaces").get<int>();
  if (cfg.contains("train_tasks_per_ws")) spec.train_tasks_per_ws = cfg.at("train_tasks_per_ws").get<int>();
  if (cfg.contains("seen_tasks_per_ws")) spec.seen_tasks_per_ws = cfg.at("seen_tasks_per_ws").get<int>();
  if (cfg.contains("unseen_workspaces")) spec.unseen_workspaces = cfg.at("unseen_workspaces").get<int>();
  if (cfg.contains("unseen_tasks_per_ws")) spec.unseen_tasks_per_ws = cfg.at("unseen_tasks_per_ws").get<int>();
  if (cfg.contains("gt_iters")) spec.gt_iters = cfg.at("gt_iters").get<int>();
  if (cfg.contains("delta")) spec.delta = cfg.at("delta").get<double>();

  if (common.out.empty()) throw ConfigError("gen: --out is required");

  int skipped = 0;
  std::size_t n_ws = 0, n_tasks = 0;
  if (dim == 2) {
    const auto ds = build_dataset<2>(spec, &skipped);
    dataset_write(ds, common.out);
    n_ws = ds.workspaces.size();
    n_tasks = ds.tasks.size();
  } else {
    const auto ds = build_dataset<3>(spec, &skipped);
    dataset_write(ds, common.out);
    n_ws = ds.workspaces.size();
    n_tasks = ds.tasks.size();
  }
  std::printf("dataset: %zu workspaces, %zu tasks (%d skipped) -> %s\n", n_ws, n_tasks, skipped,
              common.out.c_str());
  return 0;
}

// -------------------------------------------------------------- train ----

int cmd_train(const CommonArgs& common, const json& cfg, const std::string& dataset_dir,
              int epochs, int batch, double lr, bool resume) {
  if (common.out.empty()) throw ConfigError("train: --out is required");
  fs::create_directories(common.out);
  const int dim = dataset_peek_dim(dataset_dir);

  TrainingData data;
  if (dim == 2) {
    data = training_tuples(dataset_read<2>(dataset_dir));
  } else {
    data = training_tuples(dataset_read<3>(dataset_dir));
  }

  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch;
  tc.lr = lr;
  tc.seed = common.seed;
  if (cfg.contains("bn_momentum")) tc.bn_momentum = cfg.at("bn_momentum").get<double>();

  const auto enc_path = (fs::path(common.out) / "enet.p3nm").string();
  const auto pnet_path = (fs::path(common.out) / "pnet.p3nm").string();
  const auto state_path = (fs::path(common.out) / "train_state.p3ts").string();

  EncoderModel enc;
  PlannerModel pnet;
  AdamState state;
  if (resume) {
    enc = checkpoint_read_encoder(enc_path);
    pnet = checkpoint_read_planner(pnet_path);
    state = train_state_read(state_path);
    std::printf("resuming at epoch %d\n", state.next_epoch);
  } else {
    enc = enet_lite<float>(dim);
    pnet = pnet_lite<float>(dim);
    init_params(enc, pnet, common.seed);
    state = make_adam_state(enc, pnet);
  }

  const auto res = train(enc, pnet, data, tc, &state);

  checkpoint_write(enc, enc_path);
  checkpoint_write(pnet, pnet_path);
  train_state_write(state, state_path);

  std::ofstream curve(fs::path(common.out) / "loss_curve.csv",
                      resume ? std::ios::app : std::ios::trunc);
  if (!resume) curve << "epoch,loss\n";
  const int first_epoch = state.next_epoch - static_cast<int>(res.loss_curve.size());
  for (std::size_t i = 0; i < res.loss_curve.size(); ++i) {
    curve << (first_epoch + static_cast<int>(i)) << ',' << res.loss_curve[i] << '\n';
  }
  std::printf("trained %zu tuples for %zu epochs; final train loss %.6f\n", data.tuples.size(),
              res.loss_curve.size(), res.loss_curve.empty() ? 0.0 : res.loss_curve.back());
  std::printf("checkpoints: %s, %s\n", enc_path.c_str(), pnet_path.c_str());
  return 0;
}

// --------------------------------------------------------------- plan ----

template <int D>
int plan_on(const Dataset<D>& ds, const LoadedModels& models, const std::string& task_id,
            PlannerConfig pc, const std::string& dump) {
  const DatasetTask<D>* task = nullptr;
  for (const auto& t : ds.tasks) {
    if (t.id == task_id) task = &t;
  }
  if (!task) throw ConfigError("unknown task id: " + task_id);
  const auto& w = ds.workspaces[static_cast<std::size_t>(task->ws_index)];

  const auto res = p3net_plan(task->start, task->goal, w.cloud, w.ws, pc, *models.engine);
  std::printf("task %s: %s\n", task->id.c_str(), res.success ? "success" : "failure");
  std::printf("  times  encode %.4fs initial %.4fs replan %.4fs refine %.4fs total %.4fs\n",
              res.times.encode_s, res.times.initial_s, res.times.replan_s, res.times.refine_s,
              res.times.total_s);
  std::printf("  counters  pnet_calls %llu collision_checks %llu\n",
              static_cast<unsigned long long>(res.counters.pnet_calls),
              static_cast<unsigned long long>(res.counters.collision_checks));
  if (res.success) {
    std::printf("  cost %.6f", res.cost);
    if (task->ground_truth) {
      std::printf("  relative cost %.6f", res.cost / path_cost(*task->ground_truth));
    }
    std::printf("  waypoints %zu\n", res.path.size());
    if (!dump.empty()) {
      std::ofstream f(dump, std::ios::trunc);
      f << (D == 2 ? "x,y\n" : "x,y,z\n");
      for (const auto& p : res.path) {
        for (int k = 0; k < D; ++k) f << (k ? "," : "") << p[k];
        f << '\n';
      }
      std::printf("  path written to %s\n", dump.c_str());
    }
  }
  return res.success ? 0 : 1;
}

template <int D>
int synthetic_on(const LoadedModels& models, PlannerConfig pc) {
  // A near-empty world whose single obstacle sits away from the straight
  // start-goal segment: trivially plannable, and the straight solution has
  // relative cost exactly 1.
  Workspace<D> ws;
  for (int k = 0; k < D; ++k) {
    ws.bounds.lo[k] = 0.0;
    ws.bounds.hi[k] = 40.0;
  }
  Aabb<D> box;
  box.lo[0] = 0.5;
  box.hi[0] = 1.5;
  for (int k = 1; k < D; ++k) {
    box.lo[k] = 30.0;
    box.hi[k] = 31.0;
  }
  ws.obstacles.push_back(box);
  const PointCloud cloud = sample_cloud<D>(ws, default_cloud_size(D), 1);
  Point<D> start, goal;
  for (int k = 0; k < D; ++k) {
    start[k] = 5.0;
    goal[k] = 35.0;
  }
  const auto res = p3net_plan(start, goal, cloud, ws, pc, *models.engine);
  const double straight = distance(start, goal);
  std::printf("synthetic task: %s\n", res.success ? "success" : "failure");
  if (res.success) {
    std::printf("  cost %.6f  relative cost %.6f  total %.4fs\n", res.cost, res.cost / straight,
                res.times.total_s);
  }
  return res.success ? 0 : 1;
}

// -------------------------------------------------------------- bench ----

int cmd_bench(const CommonArgs& common, const json& cfg, const std::string& dataset_dir,
              const std::string& ckpt_dir, const std::string& splits_csv, bool with_baselines) {
  if (common.out.empty()) throw ConfigError("bench: --out is required");
  fs::create_directories(common.out);
  const int dim = dataset_peek_dim(dataset_dir);

  BenchOptions opt;
  opt.splits = parse_splits(splits_csv);
  opt.seed = common.seed;
  opt.jobs = common.jobs;

  auto run = [&](auto dim_tag) {
    constexpr int D = decltype(dim_tag)::value;
    const auto ds = dataset_read<D>(dataset_dir);
    const auto grid = grid_from_config(cfg, ds.delta, with_baselines);
    bool needs_models = false;
    for (const auto& s : grid) {
      needs_models |= s.type == "p3net" || s.type == "mpnet";
    }
    LoadedModels models;
    if (needs_models) {
      if (ckpt_dir.empty()) throw ConfigError("bench: neural planners need --checkpoints");
      models = load_models(ckpt_dir, common.fixed_point, D);
    }
    const auto rows = run_bench<D>(ds, models.engine.get(), grid, opt);
    const auto out_path = (fs::path(common.out) / "results.csv").string();
    results_write(rows, out_path);
    std::printf("%zu rows -> %s\n", rows.size(), out_path.c_str());
  };
  if (dim == 2) {
    run(std::integral_constant<int, 2>{});
  } else {
    run(std::integral_constant<int, 3>{});
  }
  return 0;
}

// ------------------------------------------------------------- report ----

int cmd_report(const std::string& results_path, const std::string& out_path) {
  const auto rows = results_read(results_path);
  const auto summary = summarize(rows);
  if (!out_path.empty()) {
    summary_write(summary, out_path);
    std::printf("summary -> %s\n", out_path.c_str());
  }
  std::printf("%-18s %-48s %6s %7s %9s %9s %8s\n", "planner", "params", "tasks", "succ%", "mean_s",
              "median_s", "med_rel");
  for (const auto& s : summary) {
    char rel[16] = "-";
    if (s.median_rel_cost >= 0) std::snprintf(rel, sizeof(rel), "%.4f", s.median_rel_cost);
    std::printf("%-18s %-48s %6zu %7.2f %9.4f %9.4f %8s\n", s.planner.c_str(), s.params.c_str(),
                s.n_tasks, s.success_rate, s.mean_total_s, s.median_total_s, rel);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched bidirectional neural path planning toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a dataset (workspaces, clouds, tasks, ground truth)");
  CommonArgs gen_common;
  add_common(gen, gen_common);
  int gen_dim = 2;
  bool gen_hard = false;
  auto* gen_dim_opt = gen->add_option("--dim", gen_dim, "world dimension (2 or 3)");
  gen->add_flag("--hard", gen_hard, "double the obstacle count");

  // train
  auto* tr = app.add_subcommand("train", "train the encoder and planner end to end");
  CommonArgs tr_common;
  add_common(tr, tr_common);
  std::string tr_dataset;
  int tr_epochs = 50;
  int tr_batch = 128;
  double tr_lr = 1e-3;
  bool tr_resume = false;
  tr->add_option("--dataset", tr_dataset, "dataset directory")->required();
  auto* tr_epochs_opt = tr->add_option("--epochs", tr_epochs, "training epochs");
  auto* tr_batch_opt = tr->add_option("--batch", tr_batch, "batch size");
  auto* tr_lr_opt = tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_flag("--resume", tr_resume, "continue from checkpoints + optimizer state in --out");

  // plan
  auto* pl = app.add_subcommand("plan", "run one planner on one task");
  CommonArgs pl_common;
  add_common(pl, pl_common);
  std::string pl_dataset, pl_ckpt, pl_task, pl_dump;
  bool pl_synthetic = false;
  int pl_b = 4, pl_init = 5, pl_replan = 50, pl_refine = 0, pl_iters = 50;
  double pl_delta = 0.01;
  int pl_dim = 2;
  pl->add_option("--dataset", pl_dataset, "dataset directory (for --task)");
  pl->add_option("--checkpoints", pl_ckpt, "checkpoint directory")->required();
  pl->add_option("--task", pl_task, "task id from the dataset manifest");
  pl->add_flag("--synthetic", pl_synthetic, "plan a trivial synthetic task instead");
  pl->add_option("--dim", pl_dim, "dimension for --synthetic");
  pl->add_option("--B", pl_b, "batch of bidirectional path pairs");
  pl->add_option("--i-init", pl_init, "initial planning attempts");
  pl->add_option("--i-replan", pl_replan, "replanning rounds");
  pl->add_option("--i-refine", pl_refine, "refinement rounds");
  pl->add_option("--i-max", pl_iters, "bidirectional iterations per sub-plan");
  pl->add_option("--delta", pl_delta, "collision-check interval");
  pl->add_option("--dump-path", pl_dump, "write the waypoints as CSV");

  // bench
  auto* be = app.add_subcommand("bench", "sweep planners over dataset tasks");
  CommonArgs be_common;
  add_common(be, be_common);
  std::string be_dataset, be_ckpt, be_splits = "seen,unseen";
  bool be_baselines = false;
  be->add_option("--dataset", be_dataset, "dataset directory")->required();
  be->add_option("--checkpoints", be_ckpt, "checkpoint directory");
  be->add_option("--splits", be_splits, "comma-separated splits to run");
  be->add_flag("--with-baselines", be_baselines, "add RRT* and Informed-RRT* at 500 iterations");

  // report
  auto* re = app.add_subcommand("report", "aggregate a results.csv into summary tables");
  std::string re_results, re_out;
  re->add_option("--results", re_results, "results.csv from bench")->required();
  re->add_option("--out", re_out, "summary csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const json cfg = load_config(gen_common.config_path);
      merge(gen_dim_opt, cfg, "dim", gen_dim);
      if (gen_dim != 2 && gen_dim != 3) throw ConfigError("gen: dim must be 2 or 3");
      return cmd_gen(gen_common, cfg, gen_dim, gen_hard);
    }
    if (tr->parsed()) {
      const json cfg = load_config(tr_common.config_path);
      merge(tr_epochs_opt, cfg, "epochs", tr_epochs);
      merge(tr_batch_opt, cfg, "batch", tr_batch);
      merge(tr_lr_opt, cfg, "lr", tr_lr);
      return cmd_train(tr_common, cfg, tr_dataset, tr_epochs, tr_batch, tr_lr, tr_resume);
    }
    if (pl->parsed()) {
      PlannerConfig pc;
      pc.batch = pl_b;
      pc.init_attempts = pl_init;
      pc.replan_rounds = pl_replan;
      pc.refine_rounds = pl_refine;
      pc.max_iters = pl_iters;
      pc.delta = pl_delta;
      pc.seed = pl_common.seed;
      if (pl_synthetic) {
        if (pl_dim != 2 && pl_dim != 3) throw ConfigError("plan: dim must be 2 or 3");
        const auto models = load_models(pl_ckpt, pl_common.fixed_point, pl_dim);
        return pl_dim == 2 ? synthetic_on<2>(models, pc) : synthetic_on<3>(models, pc);
      }
      if (pl_dataset.empty() || pl_task.empty()) {
        throw ConfigError("plan: need --dataset and --task (or --synthetic)");
      }
      const int dim = dataset_peek_dim(pl_dataset);
      const auto models = load_models(pl_ckpt, pl_common.fixed_point, dim);
      if (dim == 2) {
        return plan_on<2>(dataset_read<2>(pl_dataset), models, pl_task, pc, pl_dump);
      }
      return plan_on<3>(dataset_read<3>(pl_dataset), models, pl_task, pc, pl_dump);
    }
    if (be->parsed()) {
      const json cfg = load_config(be_common.config_path);
      return cmd_bench(be_common, cfg, be_dataset, be_ckpt, be_splits, be_baselines);
    }
    if (re->parsed()) {
      return cmd_report(re_results, re_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
