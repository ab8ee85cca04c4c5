#include "namo/rng.hpp"

#include <cmath>
#include <numbers>

namespace namo {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed),
      stream_(stream),
      key_(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)) {}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t c = counter_++;
  return splitmix64(key_ + c * 0xD1B54A32D192ED03ULL);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) noexcept {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = n * (~std::uint64_t{0} / n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

Rng Rng::split(std::uint64_t child) const noexcept {
  return Rng(splitmix64(key_ ^ 0xA0761D6478BD642FULL), child);
}

}  // namespace namo
