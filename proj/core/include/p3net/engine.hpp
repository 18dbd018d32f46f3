#pragma once

#include <memory>
#include <vector>

#include "p3net/fixed_point.hpp"
#include "p3net/models.hpp"

namespace p3net {

/// Numeric backend for the planner: float inference or the Q16.16/Q8.16
/// emulation. Features and coordinates cross this boundary as doubles,
/// which represent every Q16.16 value exactly, so the fixed-point pipeline
/// loses nothing in transit. Engines are immutable and safe to share across
/// concurrent planning tasks; callers own the RNG.
class InferenceEngine {
 public:
  virtual ~InferenceEngine() = default;

  virtual int dim() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual std::vector<double> encode(const PointCloud& pc) const = 0;

  /// c, c_goal, out: (rows x dim) row-major coordinate batches.
  virtual void plan_step(const std::vector<double>& phi, const std::vector<double>& c,
                         const std::vector<double>& c_goal, std::size_t rows, WordSource& rng,
                         std::vector<double>& out) const = 0;
};

class FloatEngine final : public InferenceEngine {
 public:
  FloatEngine(const EncoderModel& enc, const PlannerModel& pnet) : enc_(&enc), pnet_(&pnet) {
    enc.refresh_caches();
  }

  int dim() const override { return pnet_->dim; }
  std::size_t feature_dim() const override { return enc_->feature_dim(); }
  std::vector<double> encode(const PointCloud& pc) const override;
  void plan_step(const std::vector<double>& phi, const std::vector<double>& c,
                 const std::vector<double>& c_goal, std::size_t rows, WordSource& rng,
                 std::vector<double>& out) const override;

 private:
  const EncoderModel* enc_;
  const PlannerModel* pnet_;
};

class FixedEngine final : public InferenceEngine {
 public:
  /// Quantizes the given float models (throws RangeOverflow if any
  /// parameter falls outside Q8.16).
  FixedEngine(const EncoderModel& enc, const PlannerModel& pnet)
      : enc_(quantize_model(enc)), pnet_(quantize_model(pnet)) {}

  int dim() const override { return pnet_.dim; }
  std::size_t feature_dim() const override { return enc_.feature_dim(); }
  std::vector<double> encode(const PointCloud& pc) const override;
  void plan_step(const std::vector<double>& phi, const std::vector<double>& c,
                 const std::vector<double>& c_goal, std::size_t rows, WordSource& rng,
                 std::vector<double>& out) const override;

 private:
  FixedEncoder enc_;
  FixedPlanner pnet_;
};

}  // namespace p3net
