#include "p3net/train.hpp"

#include <map>

#include "p3net/io_binary.hpp"
#include "p3net/mt19937.hpp"

namespace p3net {

// BN training forward: normalize with biased batch statistics, then affine
// and ReLU. Optionally folds the batch stats into the running estimates
// (unbiased variance, like the usual framework convention).
template <typename T>
void bn_relu_train_forward(BatchNorm<T>& bn, const Mat<T>& u, Mat<T>& y, std::vector<T>& mean,
                           std::vector<T>& var, bool update_running, double momentum) {
  const std::size_t n = u.rows, c = u.cols;
  mean.assign(c, T(0));
  var.assign(c, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    const T* ur = u.row(i);
    for (std::size_t j = 0; j < c; ++j) mean[j] += ur[j];
  }
  for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ur = u.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      const T d = ur[j] - mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < c; ++j) var[j] /= static_cast<T>(n);

  if (update_running) {
    const T mom = static_cast<T>(momentum);
    const T unbias = n > 1 ? static_cast<T>(n) / static_cast<T>(n - 1) : T(1);
    for (std::size_t j = 0; j < c; ++j) {
      bn.running_mean[j] = (T(1) - mom) * bn.running_mean[j] + mom * mean[j];
      bn.running_var[j] = (T(1) - mom) * bn.running_var[j] + mom * var[j] * unbias;
    }
    bn.invalidate();
  }

  y.rows = n;
  y.cols = c;
  y.d.resize(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ur = u.row(i);
    T* yr = y.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      const T inv = T(1) / std::sqrt(var[j] + bn.eps);
      const T v = bn.gamma[j] * (ur[j] - mean[j]) * inv + bn.beta[j];
      yr[j] = v > T(0) ? v : T(0);
    }
  }
}

template void bn_relu_train_forward<float>(BatchNorm<float>&, const Mat<float>&, Mat<float>&,
                                           std::vector<float>&, std::vector<float>&, bool, double);
template void bn_relu_train_forward<double>(BatchNorm<double>&, const Mat<double>&, Mat<double>&,
                                            std::vector<double>&, std::vector<double>&, bool, double);

namespace {

// Per-block encoder forward cache: pre-BN activations, post-ReLU outputs,
// and the batch statistics used for normalization.
template <typename T>
struct EncBlockCache {
  Mat<T> u;
  Mat<T> y;
  std::vector<T> mean;
  std::vector<T> var;  // biased
};

template <typename T>
struct EncCache {
  Mat<T> x0;
  std::vector<EncBlockCache<T>> blocks;
  std::vector<T> phi;
  std::vector<std::size_t> argmax;
};

template <typename T>
EncCache<T> encoder_train_forward(EncoderModelT<T>& enc, const PointCloud& pc, bool update_running,
                                  double momentum) {
  EncCache<T> cache;
  const std::size_t n = pc.n();
  cache.x0 = Mat<T>(n, static_cast<std::size_t>(pc.dim));
  for (std::size_t i = 0; i < pc.data.size(); ++i) cache.x0.d[i] = static_cast<T>(pc.data[i]);

  const Mat<T>* x = &cache.x0;
  cache.blocks.resize(enc.blocks.size());
  for (std::size_t bi = 0; bi < enc.blocks.size(); ++bi) {
    auto& bc = cache.blocks[bi];
    enc.blocks[bi].fc.forward(*x, bc.u);
    bn_relu_train_forward(enc.blocks[bi].bn, bc.u, bc.y, bc.mean, bc.var, update_running, momentum);
    x = &bc.y;
  }

  const Mat<T>& psi = cache.blocks.back().y;
  cache.phi.assign(psi.cols, -std::numeric_limits<T>::infinity());
  cache.argmax.assign(psi.cols, 0);
  for (std::size_t i = 0; i < psi.rows; ++i) {
    const T* pr = psi.row(i);
    for (std::size_t c = 0; c < psi.cols; ++c) {
      if (pr[c] > cache.phi[c]) {
        cache.phi[c] = pr[c];
        cache.argmax[c] = i;
      }
    }
  }
  return cache;
}

// Backward through one BN(+ReLU fused upstream) given dV = dL/d(bn output).
template <typename T>
void bn_train_backward(const BatchNorm<T>& bn, const Mat<T>& u, const std::vector<T>& mean,
                       const std::vector<T>& var, const Mat<T>& dv, Mat<T>& du,
                       std::vector<T>& dgamma, std::vector<T>& dbeta) {
  const std::size_t n = u.rows, c = u.cols;
  std::vector<T> inv(c), sum_dv(c, T(0)), sum_dvx(c, T(0));
  for (std::size_t j = 0; j < c; ++j) inv[j] = T(1) / std::sqrt(var[j] + bn.eps);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ur = u.row(i);
    const T* dvr = dv.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      const T xhat = (ur[j] - mean[j]) * inv[j];
      sum_dv[j] += dvr[j];
      sum_dvx[j] += dvr[j] * xhat;
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    dbeta[j] += sum_dv[j];
    dgamma[j] += sum_dvx[j];
  }
  du.rows = n;
  du.cols = c;
  du.d.resize(n * c);
  const T invn = T(1) / static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ur = u.row(i);
    const T* dvr = dv.row(i);
    T* dur = du.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      const T xhat = (ur[j] - mean[j]) * inv[j];
      dur[j] = bn.gamma[j] * inv[j] * (dvr[j] - sum_dv[j] * invn - xhat * sum_dvx[j] * invn);
    }
  }
}

template <typename T>
void encoder_backward(EncoderModelT<T>& enc, const EncCache<T>& cache, const std::vector<T>& dphi,
                      JointGrads<T>& grads) {
  const std::size_t f = dphi.size();
  const Mat<T>& psi = cache.blocks.back().y;
  Mat<T> dy(psi.rows, psi.cols);
  for (std::size_t c = 0; c < f; ++c) dy.at(cache.argmax[c], c) = dphi[c];

  Mat<T> dv, du, dx;
  for (std::size_t bi = enc.blocks.size(); bi-- > 0;) {
    const auto& bc = cache.blocks[bi];
    // ReLU: v > 0 exactly where y > 0.
    dv.rows = dy.rows;
    dv.cols = dy.cols;
    dv.d.resize(dy.d.size());
    for (std::size_t i = 0; i < dy.d.size(); ++i) dv.d[i] = bc.y.d[i] > T(0) ? dy.d[i] : T(0);

    bn_train_backward(enc.blocks[bi].bn, bc.u, bc.mean, bc.var, dv, du, grads.enc[bi].gamma,
                      grads.enc[bi].beta);

    const Mat<T>& x_in = bi == 0 ? cache.x0 : cache.blocks[bi - 1].y;
    gemm_at_accum(x_in, du, grads.enc[bi].w, grads.enc[bi].b);
    if (bi > 0) {
      gemm_bt(du, enc.blocks[bi].fc.w, dx);
      dy = std::move(dx);
      dx = Mat<T>();
    }
  }
}

}  // namespace

template <typename T>
T joint_forward_backward(EncoderModelT<T>& enc, PlannerModelT<T>& pnet, const TrainingData& data,
                         const std::vector<std::size_t>& batch, WordSource& rng,
                         bool update_running, double bn_momentum, JointGrads<T>& grads,
                         Mat<T>* predictions) {
  if (batch.empty()) throw EmptyDataset("joint_forward_backward: empty batch");
  const auto d = static_cast<std::size_t>(pnet.dim);
  const std::size_t f = enc.feature_dim();
  const std::size_t n = batch.size();

  // Encode each distinct cloud once; tuples share the feature.
  std::map<int, EncCache<T>> clouds;
  for (std::size_t bi : batch) {
    const int ci = data.tuples[bi].cloud_index;
    if (!clouds.count(ci)) {
      clouds.emplace(ci, encoder_train_forward(enc, data.clouds[static_cast<std::size_t>(ci)],
                                               update_running, bn_momentum));
    }
  }

  Mat<T> x(n, f + 2 * d), target(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const TrainTuple& tup = data.tuples[batch[r]];
    const auto& phi = clouds.at(tup.cloud_index).phi;
    T* xr = x.row(r);
    for (std::size_t j = 0; j < f; ++j) xr[j] = phi[j];
    for (std::size_t k = 0; k < d; ++k) {
      xr[f + k] = static_cast<T>(tup.current[k]);
      xr[f + d + k] = static_cast<T>(tup.goal[k]);
      target.at(r, k) = static_cast<T>(tup.target[k]);
    }
  }

  // Planner forward with recorded dropout masks.
  std::vector<Mat<T>> inputs;  // input of each block
  std::vector<std::vector<std::uint8_t>> masks(pnet.blocks.size());
  inputs.push_back(std::move(x));
  Mat<T> u, out;
  for (std::size_t bi = 0; bi < pnet.blocks.size(); ++bi) {
    pnet.blocks[bi].fc.forward(inputs.back(), u);
    if (pnet.blocks[bi].relu_dropout) {
      Mat<T> y;
      dropout_relu(u, y, rng, &masks[bi]);
      inputs.push_back(std::move(y));
    } else {
      out = std::move(u);
      u = Mat<T>();
    }
  }

  if (predictions) *predictions = out;

  T loss = T(0);
  Mat<T> dout(out.rows, out.cols);
  const T scale = T(2) / static_cast<T>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      const T diff = out.at(r, k) - target.at(r, k);
      loss += diff * diff;
      dout.at(r, k) = scale * diff;
    }
  }
  loss /= static_cast<T>(n);

  // Planner backward.
  Mat<T> dcur = std::move(dout), dprev;
  for (std::size_t bi = pnet.blocks.size(); bi-- > 0;) {
    if (pnet.blocks[bi].relu_dropout) {
      const auto& mask = masks[bi];
      const T scale = dropout_scale<T>(0.5);
      for (std::size_t i = 0; i < dcur.d.size(); ++i) {
        dcur.d[i] = mask[i] ? dcur.d[i] * scale : T(0);
      }
    }
    gemm_at_accum(inputs[bi], dcur, grads.pnet[bi].w, grads.pnet[bi].b);
    gemm_bt(dcur, pnet.blocks[bi].fc.w, dprev);
    dcur = std::move(dprev);
    dprev = Mat<T>();
  }

  // Split the input gradient: feature columns flow into the encoder.
  std::map<int, std::vector<T>> dphi;
  for (std::size_t r = 0; r < n; ++r) {
    const int ci = data.tuples[batch[r]].cloud_index;
    auto it = dphi.find(ci);
    if (it == dphi.end()) it = dphi.emplace(ci, std::vector<T>(f, T(0))).first;
    const T* row = dcur.row(r);
    for (std::size_t j = 0; j < f; ++j) it->second[j] += row[j];
  }
  for (auto& [ci, g] : dphi) {
    encoder_backward(enc, clouds.at(ci), g, grads);
  }
  return loss;
}

template float joint_forward_backward<float>(EncoderModelT<float>&, PlannerModelT<float>&,
                                             const TrainingData&, const std::vector<std::size_t>&,
                                             WordSource&, bool, double, JointGrads<float>&, Mat<float>*);
template double joint_forward_backward<double>(EncoderModelT<double>&, PlannerModelT<double>&,
                                               const TrainingData&, const std::vector<std::size_t>&,
                                               WordSource&, bool, double, JointGrads<double>&, Mat<double>*);

AdamState make_adam_state(EncoderModel& enc, PlannerModel& pnet) {
  AdamState s;
  JointGrads<float> g = make_grads(enc, pnet);
  for_each_param(enc, pnet, g, [&](std::vector<float>& p, std::vector<float>&) {
    s.m.emplace_back(p.size(), 0.0f);
    s.v.emplace_back(p.size(), 0.0f);
  });
  return s;
}

void adam_step(EncoderModel& enc, PlannerModel& pnet, JointGrads<float>& grads, AdamState& state,
               const TrainConfig& cfg) {
  ++state.t;
  std::size_t idx = 0;
  for_each_param(enc, pnet, grads, [&](std::vector<float>& p, std::vector<float>& g) {
    adam_update(p, g, state.m[idx], state.v[idx], state.t, cfg);
    ++idx;
  });
  enc.invalidate_caches();
}

TrainResult train(EncoderModel& enc, PlannerModel& pnet, const TrainingData& data,
                  const TrainConfig& cfg, AdamState* state) {
  if (data.tuples.empty()) throw EmptyDataset("train: no tuples");
  TrainResult res;
  AdamState local;
  AdamState& adam = state ? *state : local;
  if (adam.m.empty()) adam = make_adam_state(enc, pnet);

  JointGrads<float> grads = make_grads(enc, pnet);
  std::vector<std::size_t> order(data.tuples.size());

  for (int epoch = adam.next_epoch; epoch < cfg.epochs; ++epoch) {
    Mt19937 rng(static_cast<std::uint32_t>(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch))));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                     order.size() - pos);
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                           order.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
      grads.zero();
      const float loss =
          joint_forward_backward(enc, pnet, data, batch, rng, true, cfg.bn_momentum, grads);
      adam_step(enc, pnet, grads, adam, cfg);
      epoch_loss += static_cast<double>(loss) * static_cast<double>(take);
    }
    res.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
    adam.next_epoch = epoch + 1;
  }
  enc.refresh_caches();
  return res;
}

double eval_loss(const EncoderModel& enc, const PlannerModel& pnet, const TrainingData& data) {
  if (data.tuples.empty()) throw EmptyDataset("eval_loss: no tuples");
  const auto d = static_cast<std::size_t>(pnet.dim);
  const std::size_t f = enc.feature_dim();

  std::map<int, std::vector<float>> phis;
  for (const auto& t : data.tuples) {
    if (!phis.count(t.cloud_index)) {
      phis.emplace(t.cloud_index, encode(enc, data.clouds[static_cast<std::size_t>(t.cloud_index)]));
    }
  }

  Mat<float> x(data.tuples.size(), f + 2 * d);
  for (std::size_t r = 0; r < data.tuples.size(); ++r) {
    const TrainTuple& tup = data.tuples[r];
    const auto& phi = phis.at(tup.cloud_index);
    float* xr = x.row(r);
    for (std::size_t j = 0; j < f; ++j) xr[j] = phi[j];
    for (std::size_t k = 0; k < d; ++k) {
      xr[f + k] = tup.current[k];
      xr[f + d + k] = tup.goal[k];
    }
  }

  Mat<float> u, y;
  for (const auto& blk : pnet.blocks) {
    blk.fc.forward(x, u);
    if (blk.relu_dropout) {
      relu(u, x);
    } else {
      x = std::move(u);
      u = Mat<float>();
    }
  }

  double loss = 0.0;
  for (std::size_t r = 0; r < data.tuples.size(); ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = static_cast<double>(x.at(r, k)) - data.tuples[r].target[k];
      loss += diff * diff;
    }
  }
  return loss / static_cast<double>(data.tuples.size());
}

namespace {
constexpr char kStateMagic[4] = {'P', '3', 'T', 'S'};
constexpr std::uint32_t kStateVersion = 1;
}  // namespace

void train_state_write(const AdamState& s, const std::string& path) {
  std::string out;
  out.append(kStateMagic, 4);
  io::put_u32(out, kStateVersion);
  io::put_u32(out, static_cast<std::uint32_t>(s.t));
  io::put_u32(out, static_cast<std::uint32_t>(s.next_epoch));
  io::put_u32(out, static_cast<std::uint32_t>(s.m.size()));
  for (std::size_t i = 0; i < s.m.size(); ++i) {
    io::put_u32(out, static_cast<std::uint32_t>(s.m[i].size()));
    for (float v : s.m[i]) io::put_f32(out, v);
    for (float v : s.v[i]) io::put_f32(out, v);
  }
  io::write_file(path, out);
}

AdamState train_state_read(const std::string& path) {
  const auto bytes = io::read_file(path);
  io::Reader r(bytes.data(), bytes.size());
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kStateMagic, 4) != 0) throw FormatError("train state: bad magic");
  if (r.u32() != kStateVersion) throw FormatError("train state: unsupported version");
  AdamState s;
  s.t = r.u32();
  s.next_epoch = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  s.m.resize(count);
  s.v.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t n = r.u32();
    s.m[i].resize(n);
    s.v[i].resize(n);
    for (auto& v : s.m[i]) v = r.f32();
    for (auto& v : s.v[i]) v = r.f32();
  }
  if (r.remaining() != 0) throw FormatError("train state: trailing bytes");
  return s;
}

}  // namespace p3net
