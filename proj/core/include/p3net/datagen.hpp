#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "p3net/geometry.hpp"
#include "p3net/pointcloud.hpp"

namespace p3net {

/// Obstacle-layout recipe. 2D: `obstacles` axis-aligned squares of side
/// `square_side`; 3D: `obstacles` cuboids whose per-axis extents are drawn
/// independently from `extent_choices`. Hard mode doubles the count.
struct WorkspaceRecipe {
  int dim = 2;
  double world_side = 40.0;
  int obstacles = 7;
  double square_side = 5.0;
  std::vector<double> extent_choices{5.0, 10.0};
  bool hard = false;
  std::size_t cloud_points = 0;  // 0 = per-dim default

  int count() const { return obstacles * (hard ? 2 : 1); }
  std::size_t cloud_size() const { return cloud_points ? cloud_points : default_cloud_size(dim); }
};

WorkspaceRecipe default_recipe(int dim, bool hard = false);

/// Obstacle centers are sampled uniformly with every box fully inside the
/// world. Deterministic per seed.
template <int D>
Workspace<D> gen_workspace(const WorkspaceRecipe& recipe, std::uint64_t seed);

template <int D>
struct TaskEndpoints {
  Point<D> start;
  Point<D> goal;
};

/// Rejection-samples a non-trivial task: both endpoints collision-free and
/// the straight segment between them blocked. Throws TaskGenExhausted after
/// `max_attempts` rejections.
template <int D>
TaskEndpoints<D> gen_task(const Workspace<D>& ws, std::uint64_t seed, double delta,
                          int max_attempts = 20000);

enum class Split { train, seen, unseen };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

/// Desk-scale dataset shape: train workspaces with ground-truth tasks, a
/// seen split reusing the train workspaces with fresh tasks, and an unseen
/// split on fresh workspaces.
struct DatasetSpec {
  WorkspaceRecipe recipe;
  int train_workspaces = 10;
  int train_tasks_per_ws = 100;
  int seen_tasks_per_ws = 20;
  int unseen_workspaces = 3;
  int unseen_tasks_per_ws = 20;
  int gt_iters = 20000;
  bool gt_for_eval = true;  // ground truth on seen/unseen (relative-cost denominators)
  double delta = 0.01;
  std::uint64_t seed = 0;
};

template <int D>
struct DatasetWorkspace {
  std::string id;
  Split origin = Split::train;
  Workspace<D> ws;
  PointCloud cloud;
};

template <int D>
struct DatasetTask {
  std::string id;
  int ws_index = 0;
  Split split = Split::train;
  Point<D> start;
  Point<D> goal;
  std::optional<Path<D>> ground_truth;
};

template <int D>
struct Dataset {
  WorkspaceRecipe recipe;
  double delta = 0.01;
  std::vector<DatasetWorkspace<D>> workspaces;
  std::vector<DatasetTask<D>> tasks;

  std::vector<const DatasetTask<D>*> split_tasks(Split s) const {
    std::vector<const DatasetTask<D>*> out;
    for (const auto& t : tasks) {
      if (t.split == s) out.push_back(&t);
    }
    return out;
  }
};

/// Generates workspaces, clouds, and tasks (ground truth via long-budget
/// RRT*, smoothed). Tasks that fail generation are skipped and counted in
/// `skipped` when given. Deterministic per spec.seed; task units run in
/// parallel.
template <int D>
Dataset<D> build_dataset(const DatasetSpec& spec, int* skipped = nullptr);

/// Directory layout: manifest.json + one "P3PC" cloud per workspace + one
/// "P3GT" ground-truth file per task that has one.
template <int D>
void dataset_write(const Dataset<D>& ds, const std::string& dir);
template <int D>
Dataset<D> dataset_read(const std::string& dir);

/// Reads just the recipe dim from a dataset directory (template dispatch).
int dataset_peek_dim(const std::string& dir);

/// Ground-truth path file ("P3GT"): magic, version u32=1, dim u32,
/// waypoint count u32, f32 coords row-major. Bit-exact round-trip.
template <int D>
void gt_write(const Path<D>& path, const std::string& file);
template <int D>
Path<D> gt_read(const std::string& file);

/// One supervised step along a ground-truth path:
/// (cloud, current, destination) -> next waypoint.
struct TrainTuple {
  int cloud_index = 0;
  std::array<float, 3> current{};
  std::array<float, 3> goal{};
  std::array<float, 3> target{};
};

struct TrainingData {
  int dim = 2;
  std::vector<PointCloud> clouds;
  std::vector<TrainTuple> tuples;
};

/// Tuples from every train-split ground-truth path, one per consecutive
/// waypoint pair, plus the reversed-path augmentation (the planner runs
/// bidirectionally at inference).
template <int D>
TrainingData training_tuples(const Dataset<D>& ds);

extern template Workspace<2> gen_workspace<2>(const WorkspaceRecipe&, std::uint64_t);
extern template Workspace<3> gen_workspace<3>(const WorkspaceRecipe&, std::uint64_t);
extern template TaskEndpoints<2> gen_task<2>(const Workspace<2>&, std::uint64_t, double, int);
extern template TaskEndpoints<3> gen_task<3>(const Workspace<3>&, std::uint64_t, double, int);
extern template Dataset<2> build_dataset<2>(const DatasetSpec&, int*);
extern template Dataset<3> build_dataset<3>(const DatasetSpec&, int*);
extern template void dataset_write<2>(const Dataset<2>&, const std::string&);
extern template void dataset_write<3>(const Dataset<3>&, const std::string&);
extern template Dataset<2> dataset_read<2>(const std::string&);
extern template Dataset<3> dataset_read<3>(const std::string&);
extern template void gt_write<2>(const Path<2>&, const std::string&);
extern template void gt_write<3>(const Path<3>&, const std::string&);
extern template Path<2> gt_read<2>(const std::string&);
extern template Path<3> gt_read<3>(const std::string&);
extern template TrainingData training_tuples<2>(const Dataset<2>&);
extern template TrainingData training_tuples<3>(const Dataset<3>&);

}  // namespace p3net
