#pragma once

// Little-endian binary64/u64 packing shared by the checkpoint and
// soft-label formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "floorlab/errors.hpp"

namespace floorlab::detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint64_t u64(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }

  double f64(const char* field) { return std::bit_cast<double>(u64(field)); }

  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t count, const char* field) const {
    if (remaining() < count) {
      throw FormatError(what_ + "." + field, "truncated: need " + std::to_string(count) +
                                                 " bytes, have " + std::to_string(remaining()));
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace floorlab::detail
