#include "fixtures.hpp"

#include <unistd.h>
#include <zlib.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "floorlab/rng.hpp"

namespace floorlab::testing {

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  path_ = std::filesystem::temp_directory_path() /
          ("floorlab-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

IdxTensor synthetic_images(std::size_t count, std::uint64_t seed) {
  IdxTensor t;
  t.magic = kIdxImageMagic;
  t.dims = {static_cast<std::uint32_t>(count), 28, 28};
  t.payload.assign(count * kMnistPixels, 0);
  RngStream noise = derive_stream(seed, "fixture-noise", 0);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t c = s % kMnistClasses;
    const std::size_t row0 = 2 + (c / 5) * 12;
    const std::size_t col0 = 2 + (c % 5) * 5;
    std::uint8_t* img = t.payload.data() + s * kMnistPixels;
    for (std::size_t p = 0; p < kMnistPixels; ++p) {
      img[p] = static_cast<std::uint8_t>(noise.below(40));
    }
    for (std::size_t r = row0; r < row0 + 4; ++r) {
      for (std::size_t q = col0; q < col0 + 4; ++q) img[r * 28 + q] = 255;
    }
  }
  return t;
}

IdxTensor synthetic_labels(std::size_t count) {
  IdxTensor t;
  t.magic = kIdxLabelMagic;
  t.dims = {static_cast<std::uint32_t>(count)};
  for (std::size_t s = 0; s < count; ++s) {
    t.payload.push_back(static_cast<std::uint8_t>(s % kMnistClasses));
  }
  return t;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_gzip(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  gzFile f = gzopen(path.c_str(), "wb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path.string());
  const int written = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
  if (written != static_cast<int>(bytes.size())) {
    throw std::runtime_error("short gzip write " + path.string());
  }
}

void write_synthetic_mnist(const std::filesystem::path& dir, std::size_t train_count,
                           std::size_t test_count, bool gzip) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const IdxTensor& t) {
    const auto bytes = encode_idx(t);
    if (gzip) {
      write_gzip(dir / (name + ".gz"), bytes);
    } else {
      write_bytes(dir / name, bytes);
    }
  };
  put("train-images-idx3-ubyte", synthetic_images(train_count, 11));
  put("train-labels-idx1-ubyte", synthetic_labels(train_count));
  put("t10k-images-idx3-ubyte", synthetic_images(test_count, 12));
  put("t10k-labels-idx1-ubyte", synthetic_labels(test_count));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace floorlab::testing
