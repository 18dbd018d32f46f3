#pragma once

#include <array>
#include <cstdint>

namespace p3net {

/// Source of 32-bit random words. Dropout and samplers draw through this
/// interface so tests can substitute recorded/replayed word streams.
struct WordSource {
  virtual ~WordSource() = default;
  virtual std::uint32_t next_u32() = 0;
};

/// MT19937 with the reference state transition and 2002 seeding
/// (init_genrand). With seed 5489 the first output is 3499211612.
class Mt19937 final : public WordSource {
 public:
  static constexpr int kStateSize = 624;

  explicit Mt19937(std::uint32_t seed = 5489u) { reseed(seed); }

  void reseed(std::uint32_t seed);
  std::uint32_t next_u32() override;

  /// Uniform double in [0,1) with 53-bit resolution (genrand_res53).
  double real53();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * real53(); }
  /// Uniform integer in [0, n). n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint32_t, kStateSize> state_{};
  int index_ = kStateSize + 1;
};

/// splitmix64: seed-expansion for deriving independent per-unit seeds
/// (per-task, per-workspace, per-epoch) from one master seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Convenience: the n-th splitmix64 output of the stream seeded by `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace p3net
