#include "p3net/datagen.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "p3net/errors.hpp"
#include "p3net/io_binary.hpp"
#include "p3net/mt19937.hpp"
#include "p3net/rrt.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace p3net {

namespace {

constexpr std::uint32_t kManifestVersion = 1;
constexpr char kGtMagic[4] = {'P', '3', 'G', 'T'};
constexpr std::uint32_t kGtVersion = 1;

// Seed-stream tags: one disjoint splitmix domain per kind of drawn object.
enum SeedTag : std::uint64_t {
  kSeedWsTrain = 1,
  kSeedWsUnseen = 2,
  kSeedCloud = 3,
  kSeedTask = 4,
  kSeedGt = 5,
};

std::uint64_t tagged_seed(std::uint64_t master, SeedTag tag, std::uint64_t index) {
  return derive_seed(master ^ (static_cast<std::uint64_t>(tag) << 56), index);
}

// Snap every coordinate to its binary32 value (paths are serialized as f32,
// so the in-memory dataset must already carry the rounded values). The
// vectorizer is disabled here: GCC 11 -O3 miscompiles the double->float->
// double narrowing loop into a no-op when it vectorizes it.
template <int D>
#if defined(__GNUC__) && !defined(__clang__)
__attribute__((optimize("no-tree-vectorize")))
#endif
Path<D> round_path_f32(const Path<D>& p) {
  std::vector<float> tmp;
  tmp.reserve(p.size() * static_cast<std::size_t>(D));
  for (const auto& w : p) {
    for (int k = 0; k < D; ++k) tmp.push_back(static_cast<float>(w[k]));
  }
  Path<D> out(p.size());
  std::size_t i = 0;
  for (auto& w : out) {
    for (int k = 0; k < D; ++k) w[k] = static_cast<double>(tmp[i++]);
  }
  return out;
}

}  // namespace

WorkspaceRecipe default_recipe(int dim, bool hard) {
  if (dim != 2 && dim != 3) throw ConfigError("recipe: dim must be 2 or 3");
  WorkspaceRecipe r;
  r.dim = dim;
  r.obstacles = dim == 2 ? 7 : 10;
  r.hard = hard;
  return r;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::seen: return "seen";
    default: return "unseen";
  }
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "seen") return Split::seen;
  if (name == "unseen") return Split::unseen;
  throw FormatError("unknown split: " + name);
}

template <int D>
Workspace<D> gen_workspace(const WorkspaceRecipe& recipe, std::uint64_t seed) {
  if (recipe.dim != D) throw DimMismatch("gen_workspace: recipe dim mismatch");
  if (D == 3 && recipe.extent_choices.empty()) throw ConfigError("gen_workspace: no extent choices");
  Mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  Workspace<D> ws;
  for (int k = 0; k < D; ++k) {
    ws.bounds.lo[k] = 0.0;
    ws.bounds.hi[k] = recipe.world_side;
  }
  const int n = recipe.count();
  for (int i = 0; i < n; ++i) {
    std::array<double, 3> extent{};
    for (int k = 0; k < D; ++k) {
      if (D == 2) {
        extent[static_cast<std::size_t>(k)] = recipe.square_side;
      } else {
        const auto pick = rng.below(recipe.extent_choices.size());
        extent[static_cast<std::size_t>(k)] = recipe.extent_choices[pick];
      }
    }
    Aabb<D> box;
    for (int k = 0; k < D; ++k) {
      const double e = extent[static_cast<std::size_t>(k)];
      const double c = rng.uniform(e / 2.0, recipe.world_side - e / 2.0);
      box.lo[k] = c - e / 2.0;
      box.hi[k] = c + e / 2.0;
    }
    ws.obstacles.push_back(box);
  }
  return ws;
}

template <int D>
TaskEndpoints<D> gen_task(const Workspace<D>& ws, std::uint64_t seed, double delta,
                          int max_attempts) {
  Mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  auto free_point = [&](int budget) -> std::optional<Point<D>> {
    for (int i = 0; i < budget; ++i) {
      Point<D> p;
      for (int k = 0; k < D; ++k) p[k] = rng.uniform(ws.bounds.lo[k], ws.bounds.hi[k]);
      if (!point_in_collision(p, ws)) return p;
    }
    return std::nullopt;
  };
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const auto s = free_point(64);
    const auto g = free_point(64);
    if (!s || !g) continue;
    if (segment_in_collision(*s, *g, ws, delta)) return TaskEndpoints<D>{*s, *g};
  }
  throw TaskGenExhausted("gen_task: no non-trivial task found");
}

template <int D>
Dataset<D> build_dataset(const DatasetSpec& spec, int* skipped) {
  if (spec.recipe.dim != D) throw DimMismatch("build_dataset: recipe dim mismatch");
  Dataset<D> ds;
  ds.recipe = spec.recipe;
  ds.delta = spec.delta;

  char name[64];
  for (int i = 0; i < spec.train_workspaces; ++i) {
    DatasetWorkspace<D> w;
    std::snprintf(name, sizeof(name), "train%04d", i);
    w.id = name;
    w.origin = Split::train;
    w.ws = gen_workspace<D>(spec.recipe, tagged_seed(spec.seed, kSeedWsTrain, static_cast<std::uint64_t>(i)));
    w.cloud = sample_cloud<D>(w.ws, spec.recipe.cloud_size(),
                              tagged_seed(spec.seed, kSeedCloud, static_cast<std::uint64_t>(i)));
    ds.workspaces.push_back(std::move(w));
  }
  for (int i = 0; i < spec.unseen_workspaces; ++i) {
    DatasetWorkspace<D> w;
    std::snprintf(name, sizeof(name), "unseen%04d", i);
    w.id = name;
    w.origin = Split::unseen;
    w.ws = gen_workspace<D>(spec.recipe, tagged_seed(spec.seed, kSeedWsUnseen, static_cast<std::uint64_t>(i)));
    w.cloud = sample_cloud<D>(w.ws, spec.recipe.cloud_size(),
                              tagged_seed(spec.seed, kSeedCloud, 1000000u + static_cast<std::uint64_t>(i)));
    ds.workspaces.push_back(std::move(w));
  }

  struct TaskPlanEntry {
    int ws_index;
    Split split;
    int local;
    std::uint64_t task_seed;
    std::uint64_t gt_seed;
    bool want_gt;
  };
  std::vector<TaskPlanEntry> plan;
  std::uint64_t unit = 0;
  auto add_units = [&](int ws_index, Split split, int count, bool want_gt) {
    for (int t = 0; t < count; ++t) {
      plan.push_back({ws_index, split, t, tagged_seed(spec.seed, kSeedTask, unit),
                      tagged_seed(spec.seed, kSeedGt, unit), want_gt});
      ++unit;
    }
  };
  for (int i = 0; i < spec.train_workspaces; ++i) {
    add_units(i, Split::train, spec.train_tasks_per_ws, true);
  }
  for (int i = 0; i < spec.train_workspaces; ++i) {
    add_units(i, Split::seen, spec.seen_tasks_per_ws, spec.gt_for_eval);
  }
  for (int i = 0; i < spec.unseen_workspaces; ++i) {
    add_units(spec.train_workspaces + i, Split::unseen, spec.unseen_tasks_per_ws, spec.gt_for_eval);
  }

  std::vector<std::optional<DatasetTask<D>>> results(plan.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(plan.size()); ++pi) {
    const TaskPlanEntry& e = plan[static_cast<std::size_t>(pi)];
    const Workspace<D>& ws = ds.workspaces[static_cast<std::size_t>(e.ws_index)].ws;
    try {
      const auto ends = gen_task<D>(ws, e.task_seed, spec.delta);
      DatasetTask<D> task;
      task.ws_index = e.ws_index;
      task.split = e.split;
      task.start = ends.start;
      task.goal = ends.goal;
      if (e.want_gt) {
        task.ground_truth =
            round_path_f32<D>(ground_truth<D>(ends.start, ends.goal, ws, spec.delta, e.gt_seed, spec.gt_iters));
      }
      results[static_cast<std::size_t>(pi)] = std::move(task);
    } catch (const TaskGenExhausted&) {
    } catch (const GroundTruthFailed&) {
    }
  }

  int n_skipped = 0;
  for (std::size_t pi = 0; pi < plan.size(); ++pi) {
    if (!results[pi]) {
      ++n_skipped;
      continue;
    }
    DatasetTask<D> task = std::move(*results[pi]);
    std::snprintf(name, sizeof(name), "%s_%s_t%04d",
                  ds.workspaces[static_cast<std::size_t>(task.ws_index)].id.c_str(),
                  split_name(task.split), plan[pi].local);
    task.id = name;
    ds.tasks.push_back(std::move(task));
  }
  if (skipped) *skipped = n_skipped;
  return ds;
}

template <int D>
void gt_write(const Path<D>& path, const std::string& file) {
  std::string out;
  out.append(kGtMagic, 4);
  io::put_u32(out, kGtVersion);
  io::put_u32(out, static_cast<std::uint32_t>(D));
  io::put_u32(out, static_cast<std::uint32_t>(path.size()));
  for (const auto& p : path) {
    for (int k = 0; k < D; ++k) io::put_f32(out, static_cast<float>(p[k]));
  }
  io::write_file(file, out);
}

template <int D>
Path<D> gt_read(const std::string& file) {
  const auto bytes = io::read_file(file);
  io::Reader r(bytes.data(), bytes.size());
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kGtMagic, 4) != 0) throw FormatError("gt: bad magic");
  if (r.u32() != kGtVersion) throw FormatError("gt: unsupported version");
  if (r.u32() != static_cast<std::uint32_t>(D)) throw FormatError("gt: dim mismatch");
  const std::uint32_t count = r.u32();
  Path<D> path(count);
  for (auto& p : path) {
    for (int k = 0; k < D; ++k) p[k] = static_cast<double>(r.f32());
  }
  return path;
}

namespace {

template <int D>
json aabb_to_json(const Aabb<D>& b) {
  json lo = json::array(), hi = json::array();
  for (int k = 0; k < D; ++k) {
    lo.push_back(b.lo[k]);
    hi.push_back(b.hi[k]);
  }
  return json::array({lo, hi});
}

template <int D>
Aabb<D> aabb_from_json(const json& j) {
  Aabb<D> b;
  if (!j.is_array() || j.size() != 2) throw FormatError("manifest: bad aabb");
  for (int k = 0; k < D; ++k) {
    b.lo[k] = j[0].at(static_cast<std::size_t>(k)).get<double>();
    b.hi[k] = j[1].at(static_cast<std::size_t>(k)).get<double>();
  }
  return b;
}

template <int D>
json point_to_json(const Point<D>& p) {
  json a = json::array();
  for (int k = 0; k < D; ++k) a.push_back(p[k]);
  return a;
}

template <int D>
Point<D> point_from_json(const json& j) {
  Point<D> p;
  for (int k = 0; k < D; ++k) p[k] = j.at(static_cast<std::size_t>(k)).get<double>();
  return p;
}

}  // namespace

template <int D>
void dataset_write(const Dataset<D>& ds, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["version"] = kManifestVersion;
  j["recipe"] = {{"dim", ds.recipe.dim},
                 {"world_side", ds.recipe.world_side},
                 {"obstacles", ds.recipe.obstacles},
                 {"square_side", ds.recipe.square_side},
                 {"extent_choices", ds.recipe.extent_choices},
                 {"hard", ds.recipe.hard},
                 {"cloud_points", ds.recipe.cloud_points}};
  j["delta"] = ds.delta;

  json jws = json::array();
  for (const auto& w : ds.workspaces) {
    json obstacles = json::array();
    for (const auto& ob : w.ws.obstacles) obstacles.push_back(aabb_to_json<D>(ob));
    const std::string cloud_file = w.id + ".p3pc";
    jws.push_back({{"id", w.id},
                   {"origin", split_name(w.origin)},
                   {"bounds", aabb_to_json<D>(w.ws.bounds)},
                   {"obstacles", obstacles},
                   {"cloud", cloud_file}});
    cloud_write(w.cloud, (fs::path(dir) / cloud_file).string());
  }
  j["workspaces"] = std::move(jws);

  json jtasks = json::array();
  for (const auto& t : ds.tasks) {
    json jt = {{"id", t.id},
               {"workspace", ds.workspaces[static_cast<std::size_t>(t.ws_index)].id},
               {"split", split_name(t.split)},
               {"start", point_to_json<D>(t.start)},
               {"goal", point_to_json<D>(t.goal)}};
    if (t.ground_truth) {
      const std::string gt_file = t.id + ".p3gt";
      gt_write<D>(*t.ground_truth, (fs::path(dir) / gt_file).string());
      jt["ground_truth"] = gt_file;
    } else {
      jt["ground_truth"] = nullptr;
    }
    jtasks.push_back(std::move(jt));
  }
  j["tasks"] = std::move(jtasks);

  std::ofstream f(fs::path(dir) / "manifest.json");
  if (!f) throw IoError("cannot write manifest in " + dir);
  f << j.dump(2) << '\n';
}

namespace {

json load_manifest(const std::string& dir) {
  std::ifstream f(fs::path(dir) / "manifest.json");
  if (!f) throw IoError("cannot open manifest.json in " + dir);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<std::uint32_t>() != kManifestVersion) {
    throw FormatError("manifest: unsupported version");
  }
  return j;
}

}  // namespace

int dataset_peek_dim(const std::string& dir) {
  const json j = load_manifest(dir);
  return j.at("recipe").at("dim").get<int>();
}

template <int D>
Dataset<D> dataset_read(const std::string& dir) {
  const json j = load_manifest(dir);
  Dataset<D> ds;
  try {
    const json& jr = j.at("recipe");
    ds.recipe.dim = jr.at("dim").get<int>();
    if (ds.recipe.dim != D) throw FormatError("manifest: dim mismatch");
    ds.recipe.world_side = jr.at("world_side").get<double>();
    ds.recipe.obstacles = jr.at("obstacles").get<int>();
    ds.recipe.square_side = jr.at("square_side").get<double>();
    ds.recipe.extent_choices = jr.at("extent_choices").get<std::vector<double>>();
    ds.recipe.hard = jr.at("hard").get<bool>();
    ds.recipe.cloud_points = jr.at("cloud_points").get<std::size_t>();
    ds.delta = j.at("delta").get<double>();

    for (const auto& jw : j.at("workspaces")) {
      DatasetWorkspace<D> w;
      w.id = jw.at("id").get<std::string>();
      w.origin = split_from_name(jw.at("origin").get<std::string>());
      w.ws.bounds = aabb_from_json<D>(jw.at("bounds"));
      for (const auto& job : jw.at("obstacles")) w.ws.obstacles.push_back(aabb_from_json<D>(job));
      if (!w.ws.valid()) throw FormatError("manifest: invalid workspace " + w.id);
      const fs::path cloud_path = fs::path(dir) / jw.at("cloud").get<std::string>();
      if (!fs::exists(cloud_path)) throw FormatError("manifest: missing cloud file " + cloud_path.string());
      w.cloud = cloud_read(cloud_path.string());
      if (w.cloud.dim != D) throw FormatError("cloud dim mismatch in " + cloud_path.string());
      ds.workspaces.push_back(std::move(w));
    }

    for (const auto& jt : j.at("tasks")) {
      DatasetTask<D> t;
      t.id = jt.at("id").get<std::string>();
      const std::string ws_id = jt.at("workspace").get<std::string>();
      t.ws_index = -1;
      for (std::size_t i = 0; i < ds.workspaces.size(); ++i) {
        if (ds.workspaces[i].id == ws_id) {
          t.ws_index = static_cast<int>(i);
          break;
        }
      }
      if (t.ws_index < 0) throw FormatError("manifest: task references unknown workspace " + ws_id);
      t.split = split_from_name(jt.at("split").get<std::string>());
      t.start = point_from_json<D>(jt.at("start"));
      t.goal = point_from_json<D>(jt.at("goal"));
      if (jt.contains("ground_truth") && !jt.at("ground_truth").is_null()) {
        const fs::path gt_path = fs::path(dir) / jt.at("ground_truth").get<std::string>();
        if (!fs::exists(gt_path)) throw FormatError("manifest: missing ground-truth file " + gt_path.string());
        t.ground_truth = gt_read<D>(gt_path.string());
      }
      ds.tasks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return ds;
}

template <int D>
TrainingData training_tuples(const Dataset<D>& ds) {
  TrainingData data;
  data.dim = D;
  std::vector<int> cloud_of_ws(ds.workspaces.size(), -1);
  for (std::size_t i = 0; i < ds.workspaces.size(); ++i) {
    if (ds.workspaces[i].origin == Split::train) {
      cloud_of_ws[i] = static_cast<int>(data.clouds.size());
      data.clouds.push_back(ds.workspaces[i].cloud);
    }
  }
  auto emit = [&](int cloud_index, const Path<D>& path) {
    if (path.size() < 2) return;
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
      TrainTuple tup;
      tup.cloud_index = cloud_index;
      for (int k = 0; k < D; ++k) {
        tup.current[static_cast<std::size_t>(k)] = static_cast<float>(path[t][k]);
        tup.goal[static_cast<std::size_t>(k)] = static_cast<float>(path.back()[k]);
        tup.target[static_cast<std::size_t>(k)] = static_cast<float>(path[t + 1][k]);
      }
      data.tuples.push_back(tup);
    }
  };
  for (const auto& t : ds.tasks) {
    if (t.split != Split::train || !t.ground_truth) continue;
    const int ci = cloud_of_ws[static_cast<std::size_t>(t.ws_index)];
    if (ci < 0) continue;
    emit(ci, *t.ground_truth);
    Path<D> rev(t.ground_truth->rbegin(), t.ground_truth->rend());
    emit(ci, rev);
  }
  if (data.tuples.empty()) throw EmptyDataset("training_tuples: no train tuples");
  return data;
}

template Workspace<2> gen_workspace<2>(const WorkspaceRecipe&, std::uint64_t);
template Workspace<3> gen_workspace<3>(const WorkspaceRecipe&, std::uint64_t);
template TaskEndpoints<2> gen_task<2>(const Workspace<2>&, std::uint64_t, double, int);
template TaskEndpoints<3> gen_task<3>(const Workspace<3>&, std::uint64_t, double, int);
template Dataset<2> build_dataset<2>(const DatasetSpec&, int*);
template Dataset<3> build_dataset<3>(const DatasetSpec&, int*);
template void dataset_write<2>(const Dataset<2>&, const std::string&);
template void dataset_write<3>(const Dataset<3>&, const std::string&);
template Dataset<2> dataset_read<2>(const std::string&);
template Dataset<3> dataset_read<3>(const std::string&);
template void gt_write<2>(const Path<2>&, const std::string&);
template void gt_write<3>(const Path<3>&, const std::string&);
template Path<2> gt_read<2>(const std::string&);
template Path<3> gt_read<3>(const std::string&);
template TrainingData training_tuples<2>(const Dataset<2>&);
template TrainingData training_tuples<3>(const Dataset<3>&);

}  // namespace p3net
