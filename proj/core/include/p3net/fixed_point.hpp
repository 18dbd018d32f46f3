#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p3net/models.hpp"

namespace p3net {

// Fixed-point inference mirrors the IP-core numerics: activations in Q16.16
// (32-bit), parameters in Q8.16 (24-bit, stored in 32-bit words). Products
// take 64-bit intermediates and are truncated toward negative infinity by an
// arithmetic right shift; out-of-range results saturate.
namespace fx {

constexpr int kFracBits = 16;
constexpr std::int64_t kQ16Min = INT32_MIN;
constexpr std::int64_t kQ16Max = INT32_MAX;
constexpr std::int64_t kQ8Min = -(std::int64_t(1) << 23);
constexpr std::int64_t kQ8Max = (std::int64_t(1) << 23) - 1;

inline std::int32_t sat_q16(std::int64_t raw) {
  if (raw > kQ16Max) return static_cast<std::int32_t>(kQ16Max);
  if (raw < kQ16Min) return static_cast<std::int32_t>(kQ16Min);
  return static_cast<std::int32_t>(raw);
}

/// Round-to-nearest conversion of an activation/input value to Q16.16,
/// saturating at the format limits.
std::int32_t to_q16(double v);

inline double from_q16(std::int32_t raw) { return static_cast<double>(raw) / 65536.0; }

/// Round-to-nearest parameter quantization to Q8.16. Throws RangeOverflow
/// (naming `where`) when |v| exceeds the 8-bit integer range.
std::int32_t quantize_param(double v, const std::string& where);

}  // namespace fx

struct FixedLinear {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<std::int32_t> w;  // row-major (in_dim x out_dim), Q8.16
  std::vector<std::int32_t> b;  // Q8.16
};

struct FixedEncoderBlock {
  FixedLinear fc;
  // Fused BN-ReLU parameters: y = max(0, (x - mean) * scale + beta).
  std::vector<std::int32_t> mean;
  std::vector<std::int32_t> scale;
  std::vector<std::int32_t> beta;
};

struct FixedEncoder {
  int dim = 2;
  std::vector<FixedEncoderBlock> blocks;
  std::size_t feature_dim() const { return blocks.back().fc.out_dim; }
};

struct FixedPlannerBlock {
  FixedLinear fc;
  bool relu_dropout = true;
};

struct FixedPlanner {
  int dim = 2;
  std::vector<FixedPlannerBlock> blocks;
  std::size_t in_dim() const { return blocks.front().fc.in_dim; }
};

/// Parameter quantization. The encoder's BN is folded into (mean, scale,
/// beta) with scale = gamma / sqrt(running_var + eps) computed in double
/// before rounding. Throws RangeOverflow identifying the offending tensor.
FixedEncoder quantize_model(const EncoderModel& m);
FixedPlanner quantize_model(const PlannerModel& m);

/// Fixed-point feature extraction. The running max starts at zero (the IP
/// behavior); with ReLU outputs this equals the max over all points.
std::vector<std::int32_t> encode_fixed(const FixedEncoder& m, const PointCloud& pc);

/// Fixed-point planning inference over (rows x dim) Q16.16 endpoint
/// batches. Dropout consumes MT words exactly like the float path.
void plan_step_fixed(const FixedPlanner& m, const std::vector<std::int32_t>& phi,
                     const std::vector<std::int32_t>& c, const std::vector<std::int32_t>& c_goal,
                     std::size_t rows, WordSource& rng, std::vector<std::int32_t>& out);

}  // namespace p3net
