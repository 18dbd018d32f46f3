#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "p3net/datagen.hpp"
#include "p3net/models.hpp"

namespace p3net {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double bn_momentum = 0.1;
  std::uint64_t seed = 0;
};

/// Gradient buffers parallel to the joint model's learnable tensors.
template <typename T>
struct JointGrads {
  struct EncG {
    Mat<T> w;
    std::vector<T> b, gamma, beta;
  };
  struct PnetG {
    Mat<T> w;
    std::vector<T> b;
  };
  std::vector<EncG> enc;
  std::vector<PnetG> pnet;

  void zero() {
    for (auto& g : enc) {
      g.w.zero();
      std::fill(g.b.begin(), g.b.end(), T(0));
      std::fill(g.gamma.begin(), g.gamma.end(), T(0));
      std::fill(g.beta.begin(), g.beta.end(), T(0));
    }
    for (auto& g : pnet) {
      g.w.zero();
      std::fill(g.b.begin(), g.b.end(), T(0));
    }
  }
};

template <typename T>
JointGrads<T> make_grads(const EncoderModelT<T>& enc, const PlannerModelT<T>& pnet) {
  JointGrads<T> g;
  for (const auto& blk : enc.blocks) {
    typename JointGrads<T>::EncG eg;
    eg.w = Mat<T>(blk.fc.w.rows, blk.fc.w.cols);
    eg.b.assign(blk.fc.b.size(), T(0));
    eg.gamma.assign(blk.bn.gamma.size(), T(0));
    eg.beta.assign(blk.bn.beta.size(), T(0));
    g.enc.push_back(std::move(eg));
  }
  for (const auto& blk : pnet.blocks) {
    typename JointGrads<T>::PnetG pg;
    pg.w = Mat<T>(blk.fc.w.rows, blk.fc.w.cols);
    pg.b.assign(blk.fc.b.size(), T(0));
    g.pnet.push_back(std::move(pg));
  }
  return g;
}

/// Visits (value, grad) pairs of every learnable tensor in a fixed order:
/// encoder blocks (W, b, gamma, beta) then planner blocks (W, b).
template <typename T, typename F>
void for_each_param(EncoderModelT<T>& enc, PlannerModelT<T>& pnet, JointGrads<T>& g, F&& f) {
  for (std::size_t i = 0; i < enc.blocks.size(); ++i) {
    f(enc.blocks[i].fc.w.d, g.enc[i].w.d);
    f(enc.blocks[i].fc.b, g.enc[i].b);
    f(enc.blocks[i].bn.gamma, g.enc[i].gamma);
    f(enc.blocks[i].bn.beta, g.enc[i].beta);
  }
  for (std::size_t j = 0; j < pnet.blocks.size(); ++j) {
    f(pnet.blocks[j].fc.w.d, g.pnet[j].w.d);
    f(pnet.blocks[j].fc.b, g.pnet[j].b);
  }
}

/// BN training-mode forward fused with ReLU: normalizes with the biased
/// batch statistics (returned through mean/var), optionally folding them
/// into the running estimates, then applies the affine and ReLU.
template <typename T>
void bn_relu_train_forward(BatchNorm<T>& bn, const Mat<T>& u, Mat<T>& y, std::vector<T>& mean,
                           std::vector<T>& var, bool update_running, double momentum);

extern template void bn_relu_train_forward<float>(BatchNorm<float>&, const Mat<float>&, Mat<float>&,
                                                  std::vector<float>&, std::vector<float>&, bool, double);
extern template void bn_relu_train_forward<double>(BatchNorm<double>&, const Mat<double>&, Mat<double>&,
                                                   std::vector<double>&, std::vector<double>&, bool, double);

/// One joint forward/backward pass over a tuple batch: encodes each
/// distinct cloud once with batch-statistics BN (running stats updated when
/// `update_running`), runs the planner with live dropout, computes the mean
/// squared-distance loss, and accumulates exact analytic gradients for
/// every FC/BN parameter (max-pool routes to the first argmax, dropout and
/// ReLU through their masks). Returns the batch loss.
template <typename T>
T joint_forward_backward(EncoderModelT<T>& enc, PlannerModelT<T>& pnet, const TrainingData& data,
                         const std::vector<std::size_t>& batch, WordSource& rng,
                         bool update_running, double bn_momentum, JointGrads<T>& grads,
                         Mat<T>* predictions = nullptr);

/// Standard Adam with bias correction on one tensor. `t` is the global step
/// (1-based at the first update).
template <typename T>
void adam_update(std::vector<T>& param, const std::vector<T>& grad, std::vector<T>& m,
                 std::vector<T>& v, std::int64_t t, const TrainConfig& cfg) {
  if (param.size() != grad.size() || m.size() != param.size() || v.size() != param.size())
    throw ShapeMismatch("adam_update: state shape mismatch");
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T corr1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const T corr2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (T(1) - b2) * grad[i] * grad[i];
    const T mhat = m[i] / corr1;
    const T vhat = v[i] / corr2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

/// Optimizer state for the whole joint model, in for_each_param order.
struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::int64_t t = 0;
  int next_epoch = 0;
};

AdamState make_adam_state(EncoderModel& enc, PlannerModel& pnet);

/// One optimizer step over all parameters (t advances by one).
void adam_step(EncoderModel& enc, PlannerModel& pnet, JointGrads<float>& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainResult {
  std::vector<double> loss_curve;  // mean training loss per epoch
};

/// Deterministic evaluation loss: fused running-statistics BN in the
/// encoder and plain ReLU (dropout off) in the planner — the expectation
/// path of the stochastic training forward. Requires valid encoder caches.
double eval_loss(const EncoderModel& enc, const PlannerModel& pnet, const TrainingData& data);

/// End-to-end supervised training: shuffled minibatches per epoch (the
/// shuffle and dropout share one MT19937 stream re-derived from (seed,
/// epoch), so a resumed run replays the identical schedule). Refreshes the
/// encoder's fused inference caches on exit.
TrainResult train(EncoderModel& enc, PlannerModel& pnet, const TrainingData& data,
                  const TrainConfig& cfg, AdamState* state = nullptr);

/// Optimizer-state sidecar ("P3TS") so cmd_train --resume reproduces the
/// exact continuation of an interrupted run.
void train_state_write(const AdamState& s, const std::string& path);
AdamState train_state_read(const std::string& path);

extern template float joint_forward_backward<float>(EncoderModelT<float>&, PlannerModelT<float>&,
                                                    const TrainingData&, const std::vector<std::size_t>&,
                                                    WordSource&, bool, double, JointGrads<float>&,
                                                    Mat<float>*);
extern template double joint_forward_backward<double>(EncoderModelT<double>&, PlannerModelT<double>&,
                                                      const TrainingData&, const std::vector<std::size_t>&,
                                                      WordSource&, bool, double, JointGrads<double>&,
                                                      Mat<double>*);

}  // namespace p3net
