#include "p3net/fixed_point.hpp"

#include <cmath>

#include "p3net/errors.hpp"

namespace p3net {

namespace fx {

std::int32_t to_q16(double v) {
  const double scaled = v * 65536.0;
  if (scaled >= static_cast<double>(kQ16Max)) return static_cast<std::int32_t>(kQ16Max);
  if (scaled <= static_cast<double>(kQ16Min)) return static_cast<std::int32_t>(kQ16Min);
  return static_cast<std::int32_t>(std::llround(scaled));
}

std::int32_t quantize_param(double v, const std::string& where) {
  const std::int64_t raw = std::llround(v * 65536.0);
  if (raw < kQ8Min || raw > kQ8Max) {
    throw RangeOverflow("quantize: " + where + " value " + std::to_string(v) +
                        " exceeds the Q8.16 range [-128, 128)");
  }
  return static_cast<std::int32_t>(raw);
}

namespace {

// y = sat((sum_k w[k][j] x[k]) >> 16 + b[j]); the dot product accumulates
// raw products (scale 2^-32) in 64 bits.
void fc_forward(const FixedLinear& fc, const std::int32_t* x, std::int32_t* y) {
  for (std::size_t j = 0; j < fc.out_dim; ++j) {
    std::int64_t acc = 0;
    for (std::size_t k = 0; k < fc.in_dim; ++k) {
      acc += static_cast<std::int64_t>(fc.w[k * fc.out_dim + j]) * x[k];
    }
    y[j] = sat_q16((acc >> kFracBits) + fc.b[j]);
  }
}

void bn_relu(const FixedEncoderBlock& blk, std::int32_t* x) {
  for (std::size_t c = 0; c < blk.fc.out_dim; ++c) {
    const std::int64_t diff = static_cast<std::int64_t>(x[c]) - blk.mean[c];
    const std::int64_t prod = diff * blk.scale[c];
    const std::int32_t v = sat_q16((prod >> kFracBits) + blk.beta[c]);
    x[c] = v > 0 ? v : 0;
  }
}

}  // namespace
}  // namespace fx

FixedEncoder quantize_model(const EncoderModel& m) {
  FixedEncoder out;
  out.dim = m.dim;
  for (std::size_t bi = 0; bi < m.blocks.size(); ++bi) {
    const auto& blk = m.blocks[bi];
    FixedEncoderBlock fb;
    fb.fc.in_dim = blk.fc.in_dim();
    fb.fc.out_dim = blk.fc.out_dim();
    const std::string tag = "encoder block " + std::to_string(bi);
    fb.fc.w.reserve(blk.fc.w.d.size());
    for (float v : blk.fc.w.d) fb.fc.w.push_back(fx::quantize_param(v, tag + " weight"));
    for (float v : blk.fc.b) fb.fc.b.push_back(fx::quantize_param(v, tag + " bias"));
    for (std::size_t c = 0; c < blk.bn.channels(); ++c) {
      const double s = static_cast<double>(blk.bn.gamma[c]) /
                       std::sqrt(static_cast<double>(blk.bn.running_var[c]) + blk.bn.eps);
      fb.scale.push_back(fx::quantize_param(s, tag + " bn scale"));
      fb.mean.push_back(fx::quantize_param(blk.bn.running_mean[c], tag + " bn mean"));
      fb.beta.push_back(fx::quantize_param(blk.bn.beta[c], tag + " bn beta"));
    }
    out.blocks.push_back(std::move(fb));
  }
  return out;
}

FixedPlanner quantize_model(const PlannerModel& m) {
  FixedPlanner out;
  out.dim = m.dim;
  for (std::size_t bi = 0; bi < m.blocks.size(); ++bi) {
    const auto& blk = m.blocks[bi];
    FixedPlannerBlock fb;
    fb.relu_dropout = blk.relu_dropout;
    fb.fc.in_dim = blk.fc.in_dim();
    fb.fc.out_dim = blk.fc.out_dim();
    const std::string tag = "planner block " + std::to_string(bi);
    fb.fc.w.reserve(blk.fc.w.d.size());
    for (float v : blk.fc.w.d) fb.fc.w.push_back(fx::quantize_param(v, tag + " weight"));
    for (float v : blk.fc.b) fb.fc.b.push_back(fx::quantize_param(v, tag + " bias"));
    out.blocks.push_back(std::move(fb));
  }
  return out;
}

std::vector<std::int32_t> encode_fixed(const FixedEncoder& m, const PointCloud& pc) {
  if (pc.dim != m.dim) throw DimMismatch("encode_fixed: cloud dim does not match the model");
  std::vector<std::int32_t> phi(m.feature_dim(), 0);
  std::vector<std::int32_t> bufa, bufb;
  for (std::size_t i = 0; i < pc.n(); ++i) {
    bufa.assign(static_cast<std::size_t>(pc.dim), 0);
    for (int k = 0; k < pc.dim; ++k) {
      bufa[static_cast<std::size_t>(k)] = fx::to_q16(pc.point(i)[k]);
    }
    for (const auto& blk : m.blocks) {
      bufb.assign(blk.fc.out_dim, 0);
      fx::fc_forward(blk.fc, bufa.data(), bufb.data());
      fx::bn_relu(blk, bufb.data());
      bufa.swap(bufb);
    }
    for (std::size_t c = 0; c < phi.size(); ++c) {
      if (bufa[c] > phi[c]) phi[c] = bufa[c];
    }
  }
  return phi;
}

void plan_step_fixed(const FixedPlanner& m, const std::vector<std::int32_t>& phi,
                     const std::vector<std::int32_t>& c, const std::vector<std::int32_t>& c_goal,
                     std::size_t rows, WordSource& rng, std::vector<std::int32_t>& out) {
  const auto d = static_cast<std::size_t>(m.dim);
  if (c.size() != rows * d || c_goal.size() != rows * d)
    throw DimMismatch("plan_step_fixed: endpoint batch shapes disagree");
  if (phi.size() + 2 * d != m.in_dim())
    throw DimMismatch("plan_step_fixed: feature+endpoint width does not match the model");

  std::vector<std::int32_t> x(rows * m.in_dim());
  for (std::size_t i = 0; i < rows; ++i) {
    std::int32_t* xr = x.data() + i * m.in_dim();
    for (std::size_t j = 0; j < phi.size(); ++j) xr[j] = phi[j];
    for (std::size_t k = 0; k < d; ++k) xr[phi.size() + k] = c[i * d + k];
    for (std::size_t k = 0; k < d; ++k) xr[phi.size() + d + k] = c_goal[i * d + k];
  }

  std::vector<std::int32_t> y;
  std::size_t width = m.in_dim();
  for (const auto& blk : m.blocks) {
    y.assign(rows * blk.fc.out_dim, 0);
    for (std::size_t i = 0; i < rows; ++i) {
      fx::fc_forward(blk.fc, x.data() + i * width, y.data() + i * blk.fc.out_dim);
    }
    if (blk.relu_dropout) {
      // Zero per the ReLU/word rule, then the exact x2 survivor scale
      // (p = 0.5 inverted dropout is a saturating left shift).
      for (auto& v : y) {
        const std::uint32_t r = rng.next_u32();
        if (v < 0 || r < 0x80000000u) {
          v = 0;
        } else {
          v = fx::sat_q16(static_cast<std::int64_t>(v) << 1);
        }
      }
    }
    x.swap(y);
    width = blk.fc.out_dim;
  }
  out = std::move(x);
}

}  // namespace p3net
