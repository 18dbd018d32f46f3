#pragma once

#include <string>

#include "p3net/models.hpp"

namespace p3net {

// Model checkpoint ("P3NM", little-endian):
//   magic "P3NM", version u32 = 1, model-kind u8 (0 encoder / 1 planner),
//   dim u8, layer count u16, then per layer:
//     layer-kind u8 (0 linear, 1 linear+batchnorm, 2 linear+relu+dropout),
//     m u32, n u32, f32 blocks in order: W row-major, b, and for
//     batchnorm layers gamma, beta, running mean, running variance.
// Round-trips bit-exactly.

void checkpoint_write(const EncoderModel& m, const std::string& path);
void checkpoint_write(const PlannerModel& m, const std::string& path);

EncoderModel checkpoint_read_encoder(const std::string& path);
PlannerModel checkpoint_read_planner(const std::string& path);

std::string checkpoint_serialize(const EncoderModel& m);
std::string checkpoint_serialize(const PlannerModel& m);

}  // namespace p3net
