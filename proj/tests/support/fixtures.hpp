#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "floorlab/mnist.hpp"

namespace floorlab::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Synthetic digit-like images: class c lights a 4x4 block at a
/// class-dependent position plus low-amplitude seeded noise, so tiny
/// networks can separate the classes.
IdxTensor synthetic_images(std::size_t count, std::uint64_t seed);
IdxTensor synthetic_labels(std::size_t count);

/// Writes the four standard MNIST file names under `dir`; gzip-compressed
/// when `gzip` is set.
void write_synthetic_mnist(const std::filesystem::path& dir, std::size_t train_count,
                           std::size_t test_count, bool gzip);

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_gzip(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::string read_text(const std::filesystem::path& path);

}  // namespace floorlab::testing
