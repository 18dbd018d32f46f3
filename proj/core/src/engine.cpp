#include "p3net/engine.hpp"

namespace p3net {

std::vector<double> FloatEngine::encode(const PointCloud& pc) const {
  const std::vector<float> phi = p3net::encode(*enc_, pc);
  return std::vector<double>(phi.begin(), phi.end());
}

void FloatEngine::plan_step(const std::vector<double>& phi, const std::vector<double>& c,
                            const std::vector<double>& c_goal, std::size_t rows, WordSource& rng,
                            std::vector<double>& out) const {
  const auto d = static_cast<std::size_t>(pnet_->dim);
  std::vector<float> phif(phi.begin(), phi.end());
  Mat<float> cm(rows, d), gm(rows, d);
  for (std::size_t i = 0; i < rows * d; ++i) {
    cm.d[i] = static_cast<float>(c[i]);
    gm.d[i] = static_cast<float>(c_goal[i]);
  }
  const Mat<float> next = p3net::plan_step(*pnet_, phif, cm, gm, rng);
  out.assign(next.d.begin(), next.d.end());
}

std::vector<double> FixedEngine::encode(const PointCloud& pc) const {
  const std::vector<std::int32_t> raw = encode_fixed(enc_, pc);
  std::vector<double> phi(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) phi[i] = fx::from_q16(raw[i]);
  return phi;
}

void FixedEngine::plan_step(const std::vector<double>& phi, const std::vector<double>& c,
                            const std::vector<double>& c_goal, std::size_t rows, WordSource& rng,
                            std::vector<double>& out) const {
  std::vector<std::int32_t> phiq(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phiq[i] = fx::to_q16(phi[i]);
  std::vector<std::int32_t> cq(c.size()), gq(c_goal.size()), raw;
  for (std::size_t i = 0; i < c.size(); ++i) cq[i] = fx::to_q16(c[i]);
  for (std::size_t i = 0; i < c_goal.size(); ++i) gq[i] = fx::to_q16(c_goal[i]);
  plan_step_fixed(pnet_, phiq, cq, gq, rows, rng, raw);
  out.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = fx::from_q16(raw[i]);
}

}  // namespace p3net
