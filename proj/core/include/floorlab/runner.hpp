#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "floorlab/config.hpp"

namespace floorlab {

/// Process exit status for a finished or failed run.
enum class ExitCode : int { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

/// Maps an exception escaping an experiment to its exit status.
ExitCode classify_failure(const std::exception& e);

/// A stream family used by the run: `count` indices starting at 0; `first_key`
/// is the key of index 0.
struct DerivedSeed {
  std::string purpose;
  std::uint64_t base_seed = 0;
  std::uint64_t count = 0;
  std::uint64_t first_key = 0;
};

struct OutputFile {
  std::string name;
  std::uint64_t bytes = 0;
  /// Hex FNV-1a of the file contents.
  std::string checksum;
};

struct RunManifest {
  ExperimentConfig config;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<DerivedSeed> seeds;
  std::vector<OutputFile> outputs;
  ExitCode status = ExitCode::kOk;
  /// Empty on success.
  std::string error;
};

/// Column names of every CSV an experiment writes, keyed by file name.
std::vector<std::pair<std::string, std::string>> csv_schema(const std::string& experiment);

/// Runs the experiment, writes its outputs and manifest.json under
/// config's output_dir, and returns the manifest. Failures are caught: the
/// manifest then carries the error, the exit status and whatever files were
/// written before the failure.
RunManifest run(const ExperimentConfig& config);

std::string manifest_json(const RunManifest& manifest);

/// Hex FNV-1a of a byte string.
std::string fnv_hex(std::string_view bytes);

/// Library version string.
std::string_view version();

}  // namespace floorlab
