#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "p3net/datagen.hpp"
#include "p3net/errors.hpp"
#include "test_util.hpp"

using namespace p3net;
namespace fs = std::filesystem;

namespace {

DatasetSpec tiny_spec(std::uint64_t seed) {
  DatasetSpec spec;
  spec.recipe = default_recipe(2);
  spec.train_workspaces = 2;
  spec.train_tasks_per_ws = 3;
  spec.seen_tasks_per_ws = 1;
  spec.unseen_workspaces = 1;
  spec.unseen_tasks_per_ws = 1;
  spec.gt_iters = 1200;
  spec.delta = 0.05;
  spec.seed = seed;
  return spec;
}

std::string temp_dir(const char* name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("gen_workspace follows the recipe") {
  const auto recipe = default_recipe(2);
  const auto ws = gen_workspace<2>(recipe, 5);
  REQUIRE_EQ(ws.obstacles.size(), 7);
  for (const auto& ob : ws.obstacles) {
    CHECK_EQ(ob.hi[0] - ob.lo[0], doctest::Approx(5.0).epsilon(1e-12));
    CHECK_EQ(ob.hi[1] - ob.lo[1], doctest::Approx(5.0).epsilon(1e-12));
    CHECK_GE(ob.lo[0], 0.0);
    CHECK_GE(ob.lo[1], 0.0);
    CHECK_LE(ob.hi[0], 40.0);
    CHECK_LE(ob.hi[1], 40.0);
  }
  CHECK(ws.valid());

  auto hard = default_recipe(2, true);
  CHECK_EQ(gen_workspace<2>(hard, 5).obstacles.size(), 14);

  const auto again = gen_workspace<2>(recipe, 5);
  for (std::size_t i = 0; i < ws.obstacles.size(); ++i) {
    CHECK_EQ(ws.obstacles[i].lo, again.obstacles[i].lo);
    CHECK_EQ(ws.obstacles[i].hi, again.obstacles[i].hi);
  }

  const auto r3 = default_recipe(3);
  const auto ws3 = gen_workspace<3>(r3, 9);
  REQUIRE_EQ(ws3.obstacles.size(), 10);
  for (const auto& ob : ws3.obstacles) {
    for (int k = 0; k < 3; ++k) {
      const double e = ob.hi[k] - ob.lo[k];
      CHECK((std::abs(e - 5.0) < 1e-9 || std::abs(e - 10.0) < 1e-9));
    }
  }
}

TEST_CASE("gen_task produces non-trivial tasks with free endpoints") {
  const auto ws = gen_workspace<2>(default_recipe(2, true), 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto task = gen_task<2>(ws, seed, 0.05);
    CHECK_FALSE(point_in_collision(task.start, ws));
    CHECK_FALSE(point_in_collision(task.goal, ws));
    CHECK(segment_in_collision(task.start, task.goal, ws, 0.05));
  }
}

TEST_CASE("gen_task exhausts on an empty workspace") {
  Workspace<2> empty;
  empty.bounds = {{{0, 0}}, {{40, 40}}};
  CHECK_THROWS_AS(gen_task<2>(empty, 1, 0.05, 50), TaskGenExhausted);
}

TEST_CASE("build_dataset structure, splits, and tuple counts") {
  int skipped = -1;
  const auto ds = build_dataset<2>(tiny_spec(11), &skipped);
  CHECK_GE(skipped, 0);
  REQUIRE_EQ(ds.workspaces.size(), 3);
  CHECK_EQ(ds.workspaces[0].origin, Split::train);
  CHECK_EQ(ds.workspaces[2].origin, Split::unseen);
  for (const auto& w : ds.workspaces) {
    CHECK_EQ(w.cloud.n(), default_cloud_size(2));
    CHECK(w.ws.valid());
  }
  CHECK_LE(ds.tasks.size(), 2 * 3 + 2 * 1 + 1 * 1);
  for (const auto& t : ds.tasks) {
    const auto& ws = ds.workspaces[static_cast<std::size_t>(t.ws_index)].ws;
    CHECK_FALSE(point_in_collision(t.start, ws));
    CHECK_FALSE(point_in_collision(t.goal, ws));
    CHECK(segment_in_collision(t.start, t.goal, ws, ds.delta));
    if (t.split == Split::train) {
      REQUIRE(t.ground_truth.has_value());
      CHECK_GE(t.ground_truth->size(), 2);
      CHECK_FALSE(path_in_collision(*t.ground_truth, ws, ds.delta));
    }
    if (t.split == Split::seen) {
      CHECK_EQ(ds.workspaces[static_cast<std::size_t>(t.ws_index)].origin, Split::train);
    }
    if (t.split == Split::unseen) {
      CHECK_EQ(ds.workspaces[static_cast<std::size_t>(t.ws_index)].origin, Split::unseen);
    }
  }

  // Tuple count = sum over train ground truths of (len - 1), doubled by the
  // reverse augmentation.
  const auto data = training_tuples(ds);
  std::size_t expect = 0;
  for (const auto& t : ds.tasks) {
    if (t.split == Split::train && t.ground_truth) expect += 2 * (t.ground_truth->size() - 1);
  }
  CHECK_EQ(data.tuples.size(), expect);
  CHECK_EQ(data.clouds.size(), 2);
}

TEST_CASE("dataset serialization: byte-identical per seed, round-trip, rejects damage") {
  const auto ds1 = build_dataset<2>(tiny_spec(21), nullptr);
  const auto ds2 = build_dataset<2>(tiny_spec(21), nullptr);
  const auto dir1 = temp_dir("p3net_ds1");
  const auto dir2 = temp_dir("p3net_ds2");
  dataset_write(ds1, dir1);
  dataset_write(ds2, dir2);

  // Same seed -> byte-identical serialized artifacts.
  for (const auto& entry : fs::directory_iterator(dir1)) {
    const auto other = fs::path(dir2) / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK_EQ(slurp(entry.path()), slurp(other));
  }

  // Round trip preserves content.
  CHECK_EQ(dataset_peek_dim(dir1), 2);
  const auto back = dataset_read<2>(dir1);
  REQUIRE_EQ(back.workspaces.size(), ds1.workspaces.size());
  REQUIRE_EQ(back.tasks.size(), ds1.tasks.size());
  for (std::size_t i = 0; i < ds1.workspaces.size(); ++i) {
    CHECK_EQ(back.workspaces[i].id, ds1.workspaces[i].id);
    CHECK(back.workspaces[i].cloud.data == ds1.workspaces[i].cloud.data);
    REQUIRE_EQ(back.workspaces[i].ws.obstacles.size(), ds1.workspaces[i].ws.obstacles.size());
    for (std::size_t k = 0; k < ds1.workspaces[i].ws.obstacles.size(); ++k) {
      CHECK_EQ(back.workspaces[i].ws.obstacles[k].lo, ds1.workspaces[i].ws.obstacles[k].lo);
      CHECK_EQ(back.workspaces[i].ws.obstacles[k].hi, ds1.workspaces[i].ws.obstacles[k].hi);
    }
  }
  for (std::size_t i = 0; i < ds1.tasks.size(); ++i) {
    CHECK_EQ(back.tasks[i].id, ds1.tasks[i].id);
    CHECK_EQ(back.tasks[i].split, ds1.tasks[i].split);
    CHECK_EQ(back.tasks[i].start, ds1.tasks[i].start);
    CHECK_EQ(back.tasks[i].goal, ds1.tasks[i].goal);
    CHECK_EQ(back.tasks[i].ground_truth.has_value(), ds1.tasks[i].ground_truth.has_value());
    if (ds1.tasks[i].ground_truth) {
      CHECK_EQ(*back.tasks[i].ground_truth, *ds1.tasks[i].ground_truth);
    }
  }

  SUBCASE("missing cloud file") {
    fs::remove(fs::path(dir1) / (ds1.workspaces[0].id + ".p3pc"));
    CHECK_THROWS_AS(dataset_read<2>(dir1), FormatError);
  }
  SUBCASE("version mismatch") {
    const auto mpath = fs::path(dir1) / "manifest.json";
    auto text = slurp(mpath);
    const auto pos = text.find("\"version\": 1");
    REQUIRE_NE(pos, std::string::npos);
    text.replace(pos, std::string("\"version\": 1").size(), "\"version\": 99");
    std::ofstream(mpath, std::ios::trunc) << text;
    CHECK_THROWS_AS(dataset_read<2>(dir1), FormatError);
  }

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("ground-truth files round-trip") {
  const Path<2> p{{{1.5, 2.5}}, {{3.25, 4.75}}, {{10, 20}}};
  const auto file = (fs::temp_directory_path() / "p3net_test.p3gt").string();
  gt_write<2>(p, file);
  CHECK_EQ(gt_read<2>(file), p);
  fs::remove(file);
}

TEST_CASE("training tuples carry the path goal and reverse augmentation") {
  Dataset<2> ds;
  ds.recipe = default_recipe(2);
  DatasetWorkspace<2> w;
  w.id = "train0000";
  w.origin = Split::train;
  w.ws.bounds = {{{0, 0}}, {{40, 40}}};
  w.ws.obstacles.push_back({{{1, 1}}, {{2, 2}}});
  w.cloud = sample_cloud(w.ws, 8, 1);
  ds.workspaces.push_back(std::move(w));

  DatasetTask<2> t;
  t.id = "train0000_t0000";
  t.ws_index = 0;
  t.split = Split::train;
  t.start = {{0, 0}};
  t.goal = {{4, 0}};
  t.ground_truth = Path<2>{{{0, 0}}, {{2, 1}}, {{4, 0}}};
  ds.tasks.push_back(t);

  const auto data = training_tuples(ds);
  REQUIRE_EQ(data.tuples.size(), 4);
  // Forward tuples aim at the path's end; reversed ones at its start.
  CHECK_EQ(data.tuples[0].current[0], 0.0f);
  CHECK_EQ(data.tuples[0].goal[0], 4.0f);
  CHECK_EQ(data.tuples[0].target[0], 2.0f);
  CHECK_EQ(data.tuples[2].current[0], 4.0f);
  CHECK_EQ(data.tuples[2].goal[0], 0.0f);
  CHECK_EQ(data.tuples[2].target[0], 2.0f);
}
