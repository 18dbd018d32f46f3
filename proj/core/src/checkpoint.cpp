#include "p3net/checkpoint.hpp"

#include "p3net/errors.hpp"
#include "p3net/io_binary.hpp"

namespace p3net {

namespace {

constexpr char kMagic[4] = {'P', '3', 'N', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kKindEncoder = 0;
constexpr std::uint8_t kKindPlanner = 1;
constexpr std::uint8_t kLayerLinear = 0;
constexpr std::uint8_t kLayerLinearBn = 1;
constexpr std::uint8_t kLayerLinearReluDropout = 2;

void put_header(std::string& out, std::uint8_t model_kind, std::uint8_t dim, std::uint16_t layers) {
  out.append(kMagic, 4);
  io::put_u32(out, kVersion);
  io::put_u8(out, model_kind);
  io::put_u8(out, dim);
  io::put_u16(out, layers);
}

void put_floats(std::string& out, const float* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) io::put_f32(out, v[i]);
}

void read_floats(io::Reader& r, float* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = r.f32();
}

io::Reader open_checkpoint(const std::vector<std::uint8_t>& bytes, std::uint8_t expect_kind,
                           std::uint8_t& dim, std::uint16_t& layers) {
  io::Reader r(bytes.data(), bytes.size());
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  if (r.u32() != kVersion) throw FormatError("checkpoint: unsupported version");
  const std::uint8_t kind = r.u8();
  if (kind != expect_kind) throw FormatError("checkpoint: wrong model kind");
  dim = r.u8();
  if (dim != 2 && dim != 3) throw FormatError("checkpoint: dim must be 2 or 3");
  layers = r.u16();
  if (layers == 0) throw FormatError("checkpoint: no layers");
  return r;
}

}  // namespace

std::string checkpoint_serialize(const EncoderModel& m) {
  std::string out;
  put_header(out, kKindEncoder, static_cast<std::uint8_t>(m.dim),
             static_cast<std::uint16_t>(m.blocks.size()));
  for (const auto& blk : m.blocks) {
    io::put_u8(out, kLayerLinearBn);
    io::put_u32(out, static_cast<std::uint32_t>(blk.fc.in_dim()));
    io::put_u32(out, static_cast<std::uint32_t>(blk.fc.out_dim()));
    put_floats(out, blk.fc.w.d.data(), blk.fc.w.d.size());
    put_floats(out, blk.fc.b.data(), blk.fc.b.size());
    put_floats(out, blk.bn.gamma.data(), blk.bn.gamma.size());
    put_floats(out, blk.bn.beta.data(), blk.bn.beta.size());
    put_floats(out, blk.bn.running_mean.data(), blk.bn.running_mean.size());
    put_floats(out, blk.bn.running_var.data(), blk.bn.running_var.size());
  }
  return out;
}

std::string checkpoint_serialize(const PlannerModel& m) {
  std::string out;
  put_header(out, kKindPlanner, static_cast<std::uint8_t>(m.dim),
             static_cast<std::uint16_t>(m.blocks.size()));
  for (const auto& blk : m.blocks) {
    io::put_u8(out, blk.relu_dropout ? kLayerLinearReluDropout : kLayerLinear);
    io::put_u32(out, static_cast<std::uint32_t>(blk.fc.in_dim()));
    io::put_u32(out, static_cast<std::uint32_t>(blk.fc.out_dim()));
    put_floats(out, blk.fc.w.d.data(), blk.fc.w.d.size());
    put_floats(out, blk.fc.b.data(), blk.fc.b.size());
  }
  return out;
}

void checkpoint_write(const EncoderModel& m, const std::string& path) {
  io::write_file(path, checkpoint_serialize(m));
}

void checkpoint_write(const PlannerModel& m, const std::string& path) {
  io::write_file(path, checkpoint_serialize(m));
}

EncoderModel checkpoint_read_encoder(const std::string& path) {
  const auto bytes = io::read_file(path);
  std::uint8_t dim = 0;
  std::uint16_t layers = 0;
  io::Reader r = open_checkpoint(bytes, kKindEncoder, dim, layers);
  EncoderModel m;
  m.dim = dim;
  std::size_t prev_out = dim;
  for (std::uint16_t li = 0; li < layers; ++li) {
    if (r.u8() != kLayerLinearBn) throw FormatError("encoder checkpoint: unexpected layer kind");
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    if (in != prev_out) throw FormatError("encoder checkpoint: inconsistent layer widths");
    EncoderBlock<float> blk;
    blk.fc.w = Mat<float>(in, out);
    blk.fc.b.resize(out);
    blk.bn = BatchNorm<float>(out);
    read_floats(r, blk.fc.w.d.data(), blk.fc.w.d.size());
    read_floats(r, blk.fc.b.data(), out);
    read_floats(r, blk.bn.gamma.data(), out);
    read_floats(r, blk.bn.beta.data(), out);
    read_floats(r, blk.bn.running_mean.data(), out);
    read_floats(r, blk.bn.running_var.data(), out);
    m.blocks.push_back(std::move(blk));
    prev_out = out;
  }
  if (r.remaining() != 0) throw FormatError("encoder checkpoint: trailing bytes");
  m.refresh_caches();
  return m;
}

PlannerModel checkpoint_read_planner(const std::string& path) {
  const auto bytes = io::read_file(path);
  std::uint8_t dim = 0;
  std::uint16_t layers = 0;
  io::Reader r = open_checkpoint(bytes, kKindPlanner, dim, layers);
  PlannerModel m;
  m.dim = dim;
  std::size_t prev_out = 0;
  for (std::uint16_t li = 0; li < layers; ++li) {
    const std::uint8_t kind = r.u8();
    if (kind != kLayerLinear && kind != kLayerLinearReluDropout)
      throw FormatError("planner checkpoint: unexpected layer kind");
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    if (li > 0 && in != prev_out) throw FormatError("planner checkpoint: inconsistent layer widths");
    PlannerBlock<float> blk;
    blk.relu_dropout = (kind == kLayerLinearReluDropout);
    blk.fc.w = Mat<float>(in, out);
    blk.fc.b.resize(out);
    read_floats(r, blk.fc.w.d.data(), blk.fc.w.d.size());
    read_floats(r, blk.fc.b.data(), out);
    m.blocks.push_back(std::move(blk));
    prev_out = out;
  }
  if (m.blocks.back().relu_dropout) throw FormatError("planner checkpoint: final layer must be linear");
  if (m.blocks.back().fc.out_dim() != static_cast<std::size_t>(dim))
    throw FormatError("planner checkpoint: output width does not match dim");
  if (r.remaining() != 0) throw FormatError("planner checkpoint: trailing bytes");
  return m;
}

}  // namespace p3net
