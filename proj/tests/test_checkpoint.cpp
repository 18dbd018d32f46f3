#include <doctest.h>

#include <filesystem>

#include "p3net/checkpoint.hpp"
#include "p3net/io_binary.hpp"
#include "test_util.hpp"

using namespace p3net;

namespace {
std::string temp_file(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("model checkpoints round-trip bit-exactly") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 77);
  testutil::StdRng rng(1);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (auto& blk : enc.blocks) {
    for (auto& v : blk.bn.running_mean) v = dist(rng);
    for (auto& v : blk.bn.running_var) v = std::abs(dist(rng)) + 0.1f;
    for (auto& v : blk.bn.gamma) v = dist(rng);
    for (auto& v : blk.bn.beta) v = dist(rng);
  }

  const auto epath = temp_file("p3net_test_enc.p3nm");
  const auto ppath = temp_file("p3net_test_pnet.p3nm");
  checkpoint_write(enc, epath);
  checkpoint_write(pnet, ppath);
  const auto enc2 = checkpoint_read_encoder(epath);
  const auto pnet2 = checkpoint_read_planner(ppath);

  REQUIRE_EQ(enc2.blocks.size(), enc.blocks.size());
  for (std::size_t i = 0; i < enc.blocks.size(); ++i) {
    CHECK(enc2.blocks[i].fc.w.d == enc.blocks[i].fc.w.d);
    CHECK(enc2.blocks[i].fc.b == enc.blocks[i].fc.b);
    CHECK(enc2.blocks[i].bn.gamma == enc.blocks[i].bn.gamma);
    CHECK(enc2.blocks[i].bn.beta == enc.blocks[i].bn.beta);
    CHECK(enc2.blocks[i].bn.running_mean == enc.blocks[i].bn.running_mean);
    CHECK(enc2.blocks[i].bn.running_var == enc.blocks[i].bn.running_var);
  }
  REQUIRE_EQ(pnet2.blocks.size(), pnet.blocks.size());
  for (std::size_t i = 0; i < pnet.blocks.size(); ++i) {
    CHECK(pnet2.blocks[i].fc.w.d == pnet.blocks[i].fc.w.d);
    CHECK(pnet2.blocks[i].fc.b == pnet.blocks[i].fc.b);
    CHECK_EQ(pnet2.blocks[i].relu_dropout, pnet.blocks[i].relu_dropout);
  }
  // Serialized forms identical too.
  CHECK_EQ(checkpoint_serialize(enc), checkpoint_serialize(enc2));
  CHECK_EQ(checkpoint_serialize(pnet), checkpoint_serialize(pnet2));

  std::filesystem::remove(epath);
  std::filesystem::remove(ppath);
}

TEST_CASE("checkpoint loader rejects malformed files") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 78);
  const auto path = temp_file("p3net_test_bad.p3nm");

  SUBCASE("bad magic") {
    auto bytes = checkpoint_serialize(enc);
    bytes[0] = 'Z';
    io::write_file(path, bytes);
    CHECK_THROWS_AS(checkpoint_read_encoder(path), FormatError);
  }
  SUBCASE("wrong model kind") {
    checkpoint_write(pnet, path);
    CHECK_THROWS_AS(checkpoint_read_encoder(path), FormatError);
  }
  SUBCASE("truncated") {
    auto bytes = checkpoint_serialize(pnet);
    bytes.resize(bytes.size() / 2);
    io::write_file(path, bytes);
    CHECK_THROWS_AS(checkpoint_read_planner(path), FormatError);
  }
  SUBCASE("bad version") {
    auto bytes = checkpoint_serialize(enc);
    bytes[4] = 9;
    io::write_file(path, bytes);
    CHECK_THROWS_AS(checkpoint_read_encoder(path), FormatError);
  }
  std::filesystem::remove(path);
}
