#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p3net/layers.hpp"
#include "p3net/pointcloud.hpp"

namespace p3net {

/// One encoder building block: FC -> BN -> ReLU.
template <typename T>
struct EncoderBlock {
  Linear<T> fc;
  BatchNorm<T> bn;
};

/// PointNet-style encoder: per-point blocks followed by a channelwise max
/// over all points, so the global feature is permutation invariant.
template <typename T>
struct EncoderModelT {
  int dim = 2;
  std::vector<EncoderBlock<T>> blocks;

  std::size_t feature_dim() const { return blocks.back().fc.out_dim(); }

  void refresh_caches() const {
    for (const auto& blk : blocks) blk.bn.refresh_fused();
  }
  void invalidate_caches() const {
    for (const auto& blk : blocks) blk.bn.invalidate();
  }
};

/// One planner building block: FC, then ReLU + Dropout(0.5) unless final.
template <typename T>
struct PlannerBlock {
  Linear<T> fc;
  bool relu_dropout = true;
};

/// MLP planning head: maps [feature, current, destination] rows to next
/// positions. Dropout stays active at inference (MC dropout).
template <typename T>
struct PlannerModelT {
  int dim = 2;  // coordinate dimension of the planning space
  std::vector<PlannerBlock<T>> blocks;

  std::size_t in_dim() const { return blocks.front().fc.in_dim(); }
  std::size_t out_dim() const { return blocks.back().fc.out_dim(); }

  std::vector<std::size_t> dropout_widths() const {
    std::vector<std::size_t> w;
    for (const auto& blk : blocks) {
      if (blk.relu_dropout) w.push_back(blk.fc.out_dim());
    }
    return w;
  }
};

using EncoderModel = EncoderModelT<float>;
using PlannerModel = PlannerModelT<float>;

/// Channel plans. Encoder: 2 -> 64 -> 64 -> 64 -> 128 -> 252 (2D) with the
/// first/last widths swapped to 3/250 in 3D. Planner: 256 -> 256 -> 128 ->
/// 64 -> 64 -> 64 -> D in 2D; 256 -> 1024 -> 768 -> 512 -> 384 -> 256 ->
/// 128 -> 64 -> 3 in 3D.
std::vector<std::size_t> enet_lite_plan(int dim);
std::vector<std::size_t> pnet_lite_plan(int dim);

template <typename T>
EncoderModelT<T> make_encoder(int dim, const std::vector<std::size_t>& plan);
template <typename T>
PlannerModelT<T> make_planner(int dim, const std::vector<std::size_t>& plan);

template <typename T>
EncoderModelT<T> enet_lite(int dim) {
  return make_encoder<T>(dim, enet_lite_plan(dim));
}
template <typename T>
PlannerModelT<T> pnet_lite(int dim) {
  return make_planner<T>(dim, pnet_lite_plan(dim));
}

/// Initializes every linear layer from U(-1/sqrt(m), 1/sqrt(m)); BN params
/// stay at identity. Deterministic per seed.
template <typename T>
void init_params(EncoderModelT<T>& enc, PlannerModelT<T>& pnet, std::uint64_t seed);

/// Learnable parameter totals (FC weights and biases, BN gamma and beta).
template <typename T>
std::size_t param_count(const EncoderModelT<T>& m);
template <typename T>
std::size_t param_count(const PlannerModelT<T>& m);

/// Inference encode: runs all points through the block pipeline as one
/// (N x width) batch and takes the channelwise max (initialized at -inf).
template <typename T>
std::vector<T> encode(const EncoderModelT<T>& m, const PointCloud& pc);

/// Streaming encode: points one at a time with O(1) buffering, updating
/// phi <- max(phi, psi(p)). Bit-identical to encode().
template <typename T>
std::vector<T> encode_streaming(const EncoderModelT<T>& m, const PointCloud& pc);

/// One batched planning inference with MC dropout: rows of C/C_goal are
/// stacked as [phi, C_row, G_row] and pushed through the planner.
/// C, G, out are (rows x dim) row-major.
template <typename T>
Mat<T> plan_step(const PlannerModelT<T>& m, const std::vector<T>& phi, const Mat<T>& c,
                 const Mat<T>& c_goal, WordSource& rng);

extern template EncoderModelT<float> make_encoder<float>(int, const std::vector<std::size_t>&);
extern template EncoderModelT<double> make_encoder<double>(int, const std::vector<std::size_t>&);
extern template PlannerModelT<float> make_planner<float>(int, const std::vector<std::size_t>&);
extern template PlannerModelT<double> make_planner<double>(int, const std::vector<std::size_t>&);
extern template void init_params<float>(EncoderModelT<float>&, PlannerModelT<float>&, std::uint64_t);
extern template void init_params<double>(EncoderModelT<double>&, PlannerModelT<double>&, std::uint64_t);
extern template std::size_t param_count<float>(const EncoderModelT<float>&);
extern template std::size_t param_count<float>(const PlannerModelT<float>&);
extern template std::size_t param_count<double>(const EncoderModelT<double>&);
extern template std::size_t param_count<double>(const PlannerModelT<double>&);
extern template std::vector<float> encode<float>(const EncoderModelT<float>&, const PointCloud&);
extern template std::vector<double> encode<double>(const EncoderModelT<double>&, const PointCloud&);
extern template std::vector<float> encode_streaming<float>(const EncoderModelT<float>&, const PointCloud&);
extern template std::vector<double> encode_streaming<double>(const EncoderModelT<double>&, const PointCloud&);
extern template Mat<float> plan_step<float>(const PlannerModelT<float>&, const std::vector<float>&,
                                            const Mat<float>&, const Mat<float>&, WordSource&);
extern template Mat<double> plan_step<double>(const PlannerModelT<double>&, const std::vector<double>&,
                                              const Mat<double>&, const Mat<double>&, WordSource&);

}  // namespace p3net
