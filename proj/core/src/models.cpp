#include "p3net/models.hpp"

#include <cmath>
#include <limits>

#include "p3net/errors.hpp"

namespace p3net {

std::vector<std::size_t> enet_lite_plan(int dim) {
  if (dim == 2) return {2, 64, 64, 64, 128, 252};
  if (dim == 3) return {3, 64, 64, 64, 128, 250};
  throw DimMismatch("enet_lite_plan: dim must be 2 or 3");
}

std::vector<std::size_t> pnet_lite_plan(int dim) {
  if (dim == 2) return {256, 256, 128, 64, 64, 64, 2};
  if (dim == 3) return {256, 1024, 768, 512, 384, 256, 128, 64, 3};
  throw DimMismatch("pnet_lite_plan: dim must be 2 or 3");
}

template <typename T>
EncoderModelT<T> make_encoder(int dim, const std::vector<std::size_t>& plan) {
  EncoderModelT<T> m;
  m.dim = dim;
  for (std::size_t i = 0; i + 1 < plan.size(); ++i) {
    EncoderBlock<T> blk;
    blk.fc.w = Mat<T>(plan[i], plan[i + 1]);
    blk.fc.b.assign(plan[i + 1], T(0));
    blk.bn = BatchNorm<T>(plan[i + 1]);
    m.blocks.push_back(std::move(blk));
  }
  return m;
}

template <typename T>
PlannerModelT<T> make_planner(int dim, const std::vector<std::size_t>& plan) {
  PlannerModelT<T> m;
  m.dim = dim;
  for (std::size_t i = 0; i + 1 < plan.size(); ++i) {
    PlannerBlock<T> blk;
    blk.fc.w = Mat<T>(plan[i], plan[i + 1]);
    blk.fc.b.assign(plan[i + 1], T(0));
    blk.relu_dropout = (i + 2 < plan.size());
    m.blocks.push_back(std::move(blk));
  }
  return m;
}

namespace {

template <typename T>
void init_linear(Linear<T>& fc, Mt19937& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fc.in_dim()));
  for (auto& v : fc.w.d) v = static_cast<T>(rng.uniform(-bound, bound));
  for (auto& v : fc.b) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

template <typename T>
void init_params(EncoderModelT<T>& enc, PlannerModelT<T>& pnet, std::uint64_t seed) {
  Mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  for (auto& blk : enc.blocks) init_linear(blk.fc, rng);
  for (auto& blk : pnet.blocks) init_linear(blk.fc, rng);
  enc.invalidate_caches();
}

template <typename T>
std::size_t param_count(const EncoderModelT<T>& m) {
  std::size_t n = 0;
  for (const auto& blk : m.blocks) {
    n += blk.fc.w.d.size() + blk.fc.b.size();
    n += blk.bn.gamma.size() + blk.bn.beta.size();
  }
  return n;
}

template <typename T>
std::size_t param_count(const PlannerModelT<T>& m) {
  std::size_t n = 0;
  for (const auto& blk : m.blocks) n += blk.fc.w.d.size() + blk.fc.b.size();
  return n;
}

namespace {

template <typename T>
Mat<T> cloud_matrix(const PointCloud& pc) {
  Mat<T> x(pc.n(), static_cast<std::size_t>(pc.dim));
  for (std::size_t i = 0; i < pc.data.size(); ++i) x.d[i] = static_cast<T>(pc.data[i]);
  return x;
}

template <typename T>
void encoder_infer_blocks(const EncoderModelT<T>& m, Mat<T>& x) {
  Mat<T> u;
  for (const auto& blk : m.blocks) {
    blk.fc.forward(x, u);
    bn_relu_infer(blk.bn, u, x);
  }
}

}  // namespace

template <typename T>
std::vector<T> encode(const EncoderModelT<T>& m, const PointCloud& pc) {
  if (pc.dim != m.dim) throw DimMismatch("encode: cloud dim does not match the model");
  Mat<T> x = cloud_matrix<T>(pc);
  encoder_infer_blocks(m, x);
  std::vector<T> phi(m.feature_dim(), -std::numeric_limits<T>::infinity());
  for (std::size_t i = 0; i < x.rows; ++i) {
    const T* xr = x.row(i);
    for (std::size_t c = 0; c < x.cols; ++c) {
      if (xr[c] > phi[c]) phi[c] = xr[c];
    }
  }
  return phi;
}

template <typename T>
std::vector<T> encode_streaming(const EncoderModelT<T>& m, const PointCloud& pc) {
  if (pc.dim != m.dim) throw DimMismatch("encode_streaming: cloud dim does not match the model");
  std::vector<T> phi(m.feature_dim(), -std::numeric_limits<T>::infinity());
  Mat<T> x(1, static_cast<std::size_t>(pc.dim));
  for (std::size_t i = 0; i < pc.n(); ++i) {
    for (int k = 0; k < pc.dim; ++k) x.d[static_cast<std::size_t>(k)] = static_cast<T>(pc.point(i)[k]);
    Mat<T> cur = x;
    encoder_infer_blocks(m, cur);
    const T* psi = cur.row(0);
    for (std::size_t c = 0; c < phi.size(); ++c) {
      if (psi[c] > phi[c]) phi[c] = psi[c];
    }
  }
  return phi;
}

template <typename T>
Mat<T> plan_step(const PlannerModelT<T>& m, const std::vector<T>& phi, const Mat<T>& c,
                 const Mat<T>& c_goal, WordSource& rng) {
  const auto d = static_cast<std::size_t>(m.dim);
  if (c.rows != c_goal.rows || c.cols != d || c_goal.cols != d)
    throw DimMismatch("plan_step: endpoint batch shapes disagree");
  if (phi.size() + 2 * d != m.in_dim())
    throw DimMismatch("plan_step: feature+endpoint width does not match the model");

  Mat<T> x(c.rows, m.in_dim());
  for (std::size_t i = 0; i < c.rows; ++i) {
    T* xr = x.row(i);
    for (std::size_t j = 0; j < phi.size(); ++j) xr[j] = phi[j];
    for (std::size_t k = 0; k < d; ++k) xr[phi.size() + k] = c.at(i, k);
    for (std::size_t k = 0; k < d; ++k) xr[phi.size() + d + k] = c_goal.at(i, k);
  }

  Mat<T> u;
  for (const auto& blk : m.blocks) {
    blk.fc.forward(x, u);
    if (blk.relu_dropout) {
      dropout_relu(u, x, rng, nullptr);
    } else {
      x = std::move(u);
      u = Mat<T>();
    }
  }
  return x;
}

template EncoderModelT<float> make_encoder<float>(int, const std::vector<std::size_t>&);
template EncoderModelT<double> make_encoder<double>(int, const std::vector<std::size_t>&);
template PlannerModelT<float> make_planner<float>(int, const std::vector<std::size_t>&);
template PlannerModelT<double> make_planner<double>(int, const std::vector<std::size_t>&);
template void init_params<float>(EncoderModelT<float>&, PlannerModelT<float>&, std::uint64_t);
template void init_params<double>(EncoderModelT<double>&, PlannerModelT<double>&, std::uint64_t);
template std::size_t param_count<float>(const EncoderModelT<float>&);
template std::size_t param_count<float>(const PlannerModelT<float>&);
template std::size_t param_count<double>(const EncoderModelT<double>&);
template std::size_t param_count<double>(const PlannerModelT<double>&);
template std::vector<float> encode<float>(const EncoderModelT<float>&, const PointCloud&);
template std::vector<double> encode<double>(const EncoderModelT<double>&, const PointCloud&);
template std::vector<float> encode_streaming<float>(const EncoderModelT<float>&, const PointCloud&);
template std::vector<double> encode_streaming<double>(const EncoderModelT<double>&, const PointCloud&);
template Mat<float> plan_step<float>(const PlannerModelT<float>&, const std::vector<float>&,
                                     const Mat<float>&, const Mat<float>&, WordSource&);
template Mat<double> plan_step<double>(const PlannerModelT<double>&, const std::vector<double>&,
                                       const Mat<double>&, const Mat<double>&, WordSource&);

}  // namespace p3net
