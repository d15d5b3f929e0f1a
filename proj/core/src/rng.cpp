#include "floorlab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace floorlab {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kForkSalt = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kIndexSalt = 0x8CB92BA72F3D8DD7ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

RngStream::result_type RngStream::operator()() {
  // Two rounds of the finalizer over (key, counter) keep nearby keys and
  // nearby counters decorrelated.
  const std::uint64_t c = counter_++;
  return mix64(mix64(key_ + c * kGolden) ^ (key_ >> 1));
}

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open_zero() {
  return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("RngStream::below: bound is 0");
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t r = (*this)();
  while (r >= limit) r = (*this)();
  return r % bound;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void RngStream::fill_normal(std::span<double> out, double sigma) {
  for (double& v : out) v = sigma * normal();
}

RngStream RngStream::fork(std::uint64_t index) const {
  return RngStream(mix64(key_ ^ kForkSalt) + mix64(index + kIndexSalt));
}

RngStream derive_stream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index) {
  const std::uint64_t base = mix64(master_seed ^ hash_label(purpose));
  return RngStream(base + mix64(index + kIndexSalt));
}

}  // namespace floorlab
