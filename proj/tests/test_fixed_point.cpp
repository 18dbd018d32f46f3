#include <doctest.h>

#include <cmath>

#include "p3net/engine.hpp"
#include "p3net/fixed_point.hpp"
#include "test_util.hpp"

using namespace p3net;

TEST_CASE("parameter quantization stays within half an ulp") {
  testutil::StdRng rng(41);
  std::uniform_real_distribution<double> dist(-127.9, 127.9);
  for (int i = 0; i < 20000; ++i) {
    const double v = dist(rng);
    const std::int32_t q = fx::quantize_param(v, "t");
    CHECK_LE(std::abs(fx::from_q16(q) - v), std::pow(2.0, -17));
  }
}

TEST_CASE("quantization overflow names the offending tensor") {
  CHECK_THROWS_AS(fx::quantize_param(200.0, "layer x"), RangeOverflow);
  try {
    auto pnet = pnet_lite<float>(2);
    pnet.blocks[1].fc.w.at(0, 0) = 200.0f;
    quantize_model(pnet);
    FAIL("expected RangeOverflow");
  } catch (const RangeOverflow& e) {
    CHECK(std::string(e.what()).find("planner block 1") != std::string::npos);
  }
}

TEST_CASE("fixed multiply truncates toward negative infinity") {
  // (-1 - 2^-16) * 1 must floor to -2 in raw units after the shift.
  const std::int64_t a = -65537;  // raw Q16.16
  const std::int64_t one = 65536;
  CHECK_EQ(fx::sat_q16((a * one) >> 16), -65537);
  CHECK_EQ(fx::sat_q16((a * (one / 2)) >> 16), -32769);  // -1.000015 * 0.5 floors
  CHECK_EQ(fx::sat_q16((std::int64_t(-1) * 1) >> 16), -1);  // tiny negative floors away from 0
}

TEST_CASE("fixed inference of a small planner tracks the float path") {
  testutil::StdRng rng(43);
  std::uniform_real_distribution<double> wdist(-0.8, 0.8);
  PlannerModelT<float> pnet;
  pnet.dim = 2;
  const std::vector<std::size_t> plan{8, 6, 2};
  pnet = make_planner<float>(2, plan);
  for (auto& blk : pnet.blocks) {
    for (auto& v : blk.fc.w.d) v = static_cast<float>(wdist(rng));
    for (auto& v : blk.fc.b) v = static_cast<float>(wdist(rng));
  }

  const FixedPlanner fixed = quantize_model(pnet);
  std::uniform_real_distribution<double> xdist(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> phi(4);
    for (auto& v : phi) v = static_cast<float>(xdist(rng));
    Mat<float> c(2, 2), g(2, 2);
    for (auto& v : c.d) v = static_cast<float>(xdist(rng));
    for (auto& v : g.d) v = static_cast<float>(xdist(rng));

    // Identical dropout words on both paths.
    testutil::RecordingSource rec(100 + static_cast<std::uint32_t>(trial));
    const auto yf = plan_step(pnet, phi, c, g, rec);

    std::vector<std::int32_t> phiq, cq, gq, out;
    for (float v : phi) phiq.push_back(fx::to_q16(v));
    for (float v : c.d) cq.push_back(fx::to_q16(v));
    for (float v : g.d) gq.push_back(fx::to_q16(v));
    testutil::TapeSource replay(rec.tape);
    plan_step_fixed(fixed, phiq, cq, gq, 2, replay, out);

    for (std::size_t i = 0; i < yf.d.size(); ++i) {
      CHECK_LT(std::abs(fx::from_q16(out[i]) - static_cast<double>(yf.d[i])), 1e-2);
    }
  }
}

TEST_CASE("fixed encoder matches float encode closely on a trained-scale model") {
  auto enc = enet_lite<float>(2);
  auto pnet = pnet_lite<float>(2);
  init_params(enc, pnet, 3);
  // Give BN non-identity statistics so the fused path is exercised.
  testutil::StdRng rng(44);
  std::uniform_real_distribution<double> mdist(-0.5, 0.5), vdist(0.25, 2.0);
  for (auto& blk : enc.blocks) {
    for (auto& v : blk.bn.running_mean) v = static_cast<float>(mdist(rng));
    for (auto& v : blk.bn.running_var) v = static_cast<float>(vdist(rng));
  }
  enc.refresh_caches();

  const auto pc = testutil::random_cloud(rng, 2, 64);
  const FloatEngine fe(enc, pnet);
  const FixedEngine xe(enc, pnet);
  const auto pf = fe.encode(pc);
  const auto pq = xe.encode(pc);
  REQUIRE_EQ(pf.size(), pq.size());
  for (std::size_t i = 0; i < pf.size(); ++i) {
    CHECK_LT(std::abs(pf[i] - pq[i]), 2e-2);
  }
}

TEST_CASE("fixed dropout consumes the same word stream as float dropout") {
  auto pnet = make_planner<float>(2, {6, 4, 2});
  testutil::StdRng rng(45);
  std::uniform_real_distribution<double> wdist(-0.5, 0.5);
  for (auto& blk : pnet.blocks) {
    for (auto& v : blk.fc.w.d) v = static_cast<float>(wdist(rng));
  }
  const FixedPlanner fixed = quantize_model(pnet);

  Mt19937 a(7), b(7);
  std::vector<float> phi(2, 0.25f);
  Mat<float> c(2, 2), g(2, 2);
  c.d = {0.1f, 0.2f, 0.3f, 0.4f};
  g.d = {0.4f, 0.3f, 0.2f, 0.1f};
  plan_step(pnet, phi, c, g, a);
  std::vector<std::int32_t> phiq{fx::to_q16(0.25), fx::to_q16(0.25)};
  std::vector<std::int32_t> cq, gq, out;
  for (float v : c.d) cq.push_back(fx::to_q16(v));
  for (float v : g.d) gq.push_back(fx::to_q16(v));
  plan_step_fixed(fixed, phiq, cq, gq, 2, b, out);
  // Both paths drew exactly one word per dropout element.
  CHECK_EQ(a.next_u32(), b.next_u32());
}
