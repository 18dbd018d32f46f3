#include <doctest.h>

#include <cmath>

#include "p3net/models.hpp"
#include "test_util.hpp"

using namespace p3net;

namespace {

template <typename T>
void fill_random(Mat<T>& m, testutil::StdRng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : m.d) v = static_cast<T>(dist(rng));
}

template <typename T>
void fill_random(std::vector<T>& v, testutil::StdRng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& x : v) x = static_cast<T>(dist(rng));
}

}  // namespace

TEST_CASE("fc_forward identity and constant rows") {
  Linear<float> id;
  id.w = Mat<float>(3, 3);
  for (int i = 0; i < 3; ++i) id.w.at(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 1.0f;
  id.b.assign(3, 0.0f);
  Mat<float> x(2, 3);
  x.d = {1, 2, 3, 4, 5, 6};
  CHECK(fc_forward(id, x).d == x.d);

  Linear<float> zero;
  zero.w = Mat<float>(3, 2);
  zero.b = {7.0f, -2.0f};
  const auto y = fc_forward(zero, x);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK_EQ(y.at(i, 0), 7.0f);
    CHECK_EQ(y.at(i, 1), -2.0f);
  }
}

TEST_CASE("fc_forward matches an extended-precision dot-product oracle") {
  testutil::StdRng rng(31);
  Linear<float> fc;
  fc.w = Mat<float>(9, 5);
  fc.b.resize(5);
  fill_random(fc.w, rng);
  fill_random(fc.b, rng);
  Mat<float> x(4, 9);
  fill_random(x, rng, -2.0, 2.0);
  const auto y = fc_forward(fc, x);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      long double acc = fc.b[j];
      for (std::size_t k = 0; k < 9; ++k) acc += static_cast<long double>(x.at(i, k)) * fc.w.at(k, j);
      CHECK_EQ(y.at(i, j), doctest::Approx(static_cast<double>(acc)).epsilon(1e-5));
    }
  }
  CHECK_THROWS_AS(fc_forward(fc, Mat<float>(2, 4)), ShapeMismatch);
}

TEST_CASE("bn_relu_infer identity BN reduces to ReLU") {
  BatchNorm<float> bn(4);
  for (auto& v : bn.running_var) v = 1.0f - bn.eps;
  bn.refresh_fused();
  Mat<float> x(2, 4);
  x.d = {-1, 2, -3, 4, 0.5f, -0.5f, 0, 7};
  Mat<float> y;
  bn_relu_infer(bn, x, y);
  for (std::size_t i = 0; i < x.d.size(); ++i) {
    CHECK_EQ(y.d[i], doctest::Approx(std::max(0.0f, x.d[i])).epsilon(1e-6));
  }
}

TEST_CASE("bn_relu_infer clamps at the batch mean with non-positive beta") {
  BatchNorm<float> bn(3);
  bn.running_mean = {1.0f, -2.0f, 0.5f};
  bn.beta = {0.0f, -1.0f, -0.1f};
  bn.refresh_fused();
  Mat<float> x(1, 3);
  x.d = {1.0f, -2.0f, 0.5f};  // x == running mean
  Mat<float> y;
  bn_relu_infer(bn, x, y);
  for (float v : y.d) CHECK_EQ(v, 0.0f);
}

TEST_CASE("bn_relu_infer matches the unfused formula") {
  testutil::StdRng rng(17);
  BatchNorm<float> bn(16);
  fill_random(bn.gamma, rng, 0.2, 2.0);
  fill_random(bn.beta, rng);
  fill_random(bn.running_mean, rng, -3.0, 3.0);
  fill_random(bn.running_var, rng, 0.05, 4.0);
  bn.refresh_fused();
  Mat<float> x(8, 16);
  fill_random(x, rng, -5.0, 5.0);
  Mat<float> y;
  bn_relu_infer(bn, x, y);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t c = 0; c < 16; ++c) {
      const double unfused =
          std::max(0.0, static_cast<double>(bn.gamma[c]) * (x.at(i, c) - bn.running_mean[c]) /
                            std::sqrt(static_cast<double>(bn.running_var[c]) + bn.eps) +
                        bn.beta[c]);
      CHECK_EQ(y.at(i, c), doctest::Approx(unfused).epsilon(1e-6));
    }
  }
}

TEST_CASE("bn_relu_infer rejects a stale cache") {
  BatchNorm<float> bn(2);
  Mat<float> x(1, 2), y;
  CHECK_THROWS_AS(bn_relu_infer(bn, x, y), InvalidCache);
  bn.refresh_fused();
  CHECK_NOTHROW(bn_relu_infer(bn, x, y));
  bn.invalidate();
  CHECK_THROWS_AS(bn_relu_infer(bn, x, y), InvalidCache);
}

TEST_CASE("dropout_relu zeroes negatives regardless of the random words") {
  Mat<float> x(2, 3);
  x.d = {-1, -2, -3, -4, -5, -6};
  Mat<float> y;
  testutil::ConstSource keep_all(0xffffffffu);
  std::vector<std::uint8_t> mask;
  dropout_relu(x, y, keep_all, &mask);
  for (float v : y.d) CHECK_EQ(v, 0.0f);
  for (auto m : mask) CHECK_EQ(m, 0);
}

TEST_CASE("dropout with an all-keep tape equals ReLU times the survivor scale") {
  testutil::StdRng rng(23);
  Mat<float> x(4, 8);
  fill_random(x, rng, -2.0, 2.0);
  Mat<float> y, r;
  std::vector<std::uint8_t> mask;
  testutil::ConstSource keep_all(0xffffffffu);
  dropout_relu(x, y, keep_all, &mask);
  relu(x, r);
  REQUIRE_EQ(y.d.size(), r.d.size());
  for (std::size_t i = 0; i < x.d.size(); ++i) {
    CHECK_EQ(y.d[i], 2.0f * r.d[i]);
    CHECK_EQ(mask[i], x.d[i] >= 0.0f ? 1 : 0);
  }
}

TEST_CASE("dropout zeroes half the positive activations at p = 0.5") {
  Mat<float> x(1000, 1000);
  for (auto& v : x.d) v = 1.0f;
  Mat<float> y;
  Mt19937 rng(12345);
  dropout_relu(x, y, rng, nullptr);
  std::size_t zeros = 0;
  for (float v : y.d) zeros += v == 0.0f;
  const double frac = static_cast<double>(zeros) / 1e6;
  CHECK_GT(frac, 0.497);
  CHECK_LT(frac, 0.503);
}

TEST_CASE("encode of a single point equals its pointwise feature") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 5);
  enc.refresh_caches();
  testutil::StdRng rng(2);
  const auto pc = testutil::random_cloud(rng, 2, 1);
  CHECK(encode(enc, pc) == encode_streaming(enc, pc));
}

TEST_CASE("encode is invariant to duplicating every point") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 6);
  enc.refresh_caches();
  testutil::StdRng rng(3);
  const auto pc = testutil::random_cloud(rng, 2, 40);
  PointCloud doubled;
  doubled.dim = 2;
  doubled.data = pc.data;
  doubled.data.insert(doubled.data.end(), pc.data.begin(), pc.data.end());
  CHECK(encode(enc, pc) == encode(enc, doubled));
}

TEST_CASE("encode is bit-exactly permutation invariant and streaming-equivalent") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 7);
  enc.refresh_caches();
  testutil::StdRng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pc = testutil::random_cloud(rng, 2, 64);
    const auto phi = encode(enc, pc);
    CHECK(phi == encode_streaming(enc, pc));

    PointCloud shuffled = pc;
    std::vector<std::size_t> perm(pc.n());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (int k = 0; k < 2; ++k) shuffled.data[i * 2 + static_cast<std::size_t>(k)] = pc.point(perm[i])[k];
    }
    CHECK(phi == encode(enc, shuffled));
  }
}

TEST_CASE("plan_step with zero weights returns zeros; seeds govern determinism") {
  auto pnet = pnet_lite<float>(2);  // all-zero weights by construction
  std::vector<float> phi(252, 0.5f);
  Mat<float> c(4, 2), g(4, 2);
  c.d = {1, 2, 3, 4, 5, 6, 7, 8};
  g.d = {8, 7, 6, 5, 4, 3, 2, 1};
  Mt19937 rng(1);
  const auto out = plan_step(pnet, phi, c, g, rng);
  for (float v : out.d) CHECK_EQ(v, 0.0f);

  auto enc = enet_lite<float>(2);
  init_params(enc, pnet, 8);
  Mt19937 r1(9), r2(9), r3(10);
  const auto a = plan_step(pnet, phi, c, g, r1);
  const auto b = plan_step(pnet, phi, c, g, r2);
  const auto d3 = plan_step(pnet, phi, c, g, r3);
  CHECK(a.d == b.d);
  CHECK(a.d != d3.d);
}

TEST_CASE("plan_step rows embedded in a larger batch match a B=1 run with replayed words") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 9);
  std::vector<float> phi(252);
  testutil::StdRng rng(5);
  std::uniform_real_distribution<double> dist(0.0, 3.0);
  for (auto& v : phi) v = static_cast<float>(dist(rng));

  Mat<float> c(8, 2), g(8, 2);  // B = 4
  fill_random(c, rng, 0.0, 40.0);
  fill_random(g, rng, 0.0, 40.0);

  testutil::RecordingSource rec(77);
  const auto big = plan_step(pnet, phi, c, g, rec);

  const auto widths = pnet.dropout_widths();
  for (std::size_t pair = 0; pair < 4; ++pair) {
    // Slice the recorded tape down to the words rows (2j, 2j+1) consumed.
    std::vector<std::uint32_t> tape;
    std::size_t offset = 0;
    for (std::size_t w : widths) {
      for (std::size_t i = 2 * pair * w; i < (2 * pair + 2) * w; ++i) {
        tape.push_back(rec.tape[offset + i]);
      }
      offset += 8 * w;
    }
    Mat<float> c1(2, 2), g1(2, 2);
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t k = 0; k < 2; ++k) {
        c1.at(r, k) = c.at(2 * pair + r, k);
        g1.at(r, k) = g.at(2 * pair + r, k);
      }
    }
    testutil::TapeSource replay(tape);
    const auto small = plan_step(pnet, phi, c1, g1, replay);
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t k = 0; k < 2; ++k) {
        REQUIRE_EQ(small.at(r, k), big.at(2 * pair + r, k));
      }
    }
  }
}

TEST_CASE("parameter counts reproduce the published model sizes") {
  auto enc2 = enet_lite<float>(2);
  auto pnet2 = pnet_lite<float>(2);
  auto enc3 = enet_lite<float>(3);
  auto pnet3 = pnet_lite<float>(3);

  CHECK_EQ(param_count(enc2), 50484u);
  CHECK_EQ(param_count(pnet2), 115394u);
  CHECK_EQ(param_count(enc3), 50286u);
  CHECK_EQ(param_count(pnet3), 1780995u);

  // Reported totals: 0.05M / 0.12M (within 10%) and 1.62M (within 15%).
  CHECK_LT(std::abs(static_cast<double>(param_count(enc2)) - 0.05e6), 0.1 * 0.05e6);
  CHECK_LT(std::abs(static_cast<double>(param_count(pnet2)) - 0.12e6), 0.1 * 0.12e6);
  CHECK_LT(std::abs(static_cast<double>(param_count(pnet3)) - 1.62e6), 0.15 * 1.62e6);
}

TEST_CASE("encode rejects a mismatched cloud") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 5);
  enc.refresh_caches();
  testutil::StdRng rng(2);
  const auto pc = testutil::random_cloud(rng, 3, 4);
  CHECK_THROWS_AS(encode(enc, pc), DimMismatch);
}
