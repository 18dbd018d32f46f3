#include "p3net/mt19937.hpp"

namespace p3net {

namespace {
constexpr std::uint32_t kMatrixA = 0x9908b0dfu;
constexpr std::uint32_t kUpperMask = 0x80000000u;
constexpr std::uint32_t kLowerMask = 0x7fffffffu;
constexpr int kShift = 397;
}  // namespace

void Mt19937::reseed(std::uint32_t seed) {
  state_[0] = seed;
  for (int i = 1; i < kStateSize; ++i) {
    state_[i] = 1812433253u * (state_[i - 1] ^ (state_[i - 1] >> 30)) +
                static_cast<std::uint32_t>(i);
  }
  index_ = kStateSize;
}

std::uint32_t Mt19937::next_u32() {
  if (index_ >= kStateSize) {
    for (int i = 0; i < kStateSize; ++i) {
      const std::uint32_t y = (state_[i] & kUpperMask) |
                              (state_[(i + 1) % kStateSize] & kLowerMask);
      std::uint32_t next = state_[(i + kShift) % kStateSize] ^ (y >> 1);
      if (y & 1u) next ^= kMatrixA;
      state_[i] = next;
    }
    index_ = 0;
  }
  std::uint32_t y = state_[index_++];
  y ^= y >> 11;
  y ^= (y << 7) & 0x9d2c5680u;
  y ^= (y << 15) & 0xefc60000u;
  y ^= y >> 18;
  return y;
}

double Mt19937::real53() {
  const std::uint32_t a = next_u32() >> 5;  // 27 bits
  const std::uint32_t b = next_u32() >> 6;  // 26 bits
  return (a * 67108864.0 + b) / 9007199254740992.0;
}

std::uint64_t Mt19937::below(std::uint64_t n) {
  // Rejection-free modulo is fine here: n is tiny relative to 2^64 in all
  // call sites (obstacle/task counts), so bias is negligible and the
  // mapping stays platform-stable.
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return ((hi << 32) | lo) % n;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // Counter-based splitmix: jump the stream to `index` in O(1).
  std::uint64_t s = master + index * 0x9e3779b97f4a7c15ull;
  return splitmix64(s);
}

}  // namespace p3net
