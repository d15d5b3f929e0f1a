#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "floorlab/network.hpp"
#include "floorlab/stats.hpp"

namespace floorlab {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kMnistPixels = 784;
inline constexpr std::size_t kMnistClasses = 10;
inline constexpr std::size_t kMnistTrainSize = 60000;
inline constexpr std::size_t kMnistTestSize = 10000;

/// Decoded IDX container: big-endian header, unsigned byte payload.
struct IdxTensor {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

/// Parses an in-memory IDX file. Only unsigned-byte tensors of rank 1
/// (labels, 0x00000801) and rank 3 (images, 0x00000803) are accepted.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes);

/// Reads an IDX file; gzip-compressed files are inflated transparently.
IdxTensor load_idx(const std::filesystem::path& path);

/// Serializes an IDX tensor (uncompressed); used by fixtures.
std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor);

enum class SplitTag { kFullTrain, kTrainFirstHalf, kTrainSecondHalf, kTest };

std::string to_string(SplitTag tag);

struct MnistDataset {
  /// One row per image, pixels scaled to [0, 1].
  Matrix images;
  std::vector<std::uint8_t> labels;
  SplitTag split = SplitTag::kFullTrain;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  /// Inputs paired with one-hot targets.
  [[nodiscard]] LabeledBatch hard_batch() const;
  [[nodiscard]] MnistDataset subset(std::span<const std::size_t> index, SplitTag tag) const;
};

MnistDataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels,
                        SplitTag tag);

struct MnistFiles {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;

  /// Standard file names under `dir`, preferring uncompressed files and
  /// falling back to the ".gz" variants.
  static MnistFiles in_directory(const std::filesystem::path& dir);
};

/// The first `count` samples of a seeded permutation (all samples if the
/// set is smaller).
MnistDataset subsample(const MnistDataset& data, std::size_t count, std::uint64_t seed);

/// Seeded permutation, then halves. Throws std::invalid_argument unless
/// the set has exactly `expected_count` samples and that count is even.
std::pair<MnistDataset, MnistDataset> make_splits(const MnistDataset& train, std::uint64_t seed,
                                                  std::size_t expected_count = kMnistTrainSize);

/// Training settings shared by teacher, students and the GD/SGD study.
struct TrainSettings {
  DescentConfig descent;
  std::size_t batch_size = 64;
};

/// Defaults: SGD at 0.1 with batch 64, full-batch GD at 0.5.
TrainSettings default_sgd_settings();
DescentConfig default_gd_config();

struct TeacherResult {
  NetworkParams params;
  TrainReport report;
};

/// SGD on hard labels of the first half; the report carries test metrics.
TeacherResult train_teacher(const MnistDataset& first_half, const MnistDataset& test,
                            const NetworkArchitecture& arch, const TrainSettings& settings,
                            std::uint64_t seed);

/// Images paired with teacher probabilities. The hard labels ride along for
/// analysis only; training reads `training_batch()`, which never sees them.
class SoftLabelDataset {
 public:
  SoftLabelDataset(Matrix images, Matrix soft_targets, std::string teacher_checkpoint_id,
                   std::vector<std::uint8_t> analysis_labels = {});

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(images_.rows()); }
  [[nodiscard]] const Matrix& images() const { return images_; }
  [[nodiscard]] const Matrix& soft_targets() const { return soft_targets_; }
  [[nodiscard]] const std::string& teacher_checkpoint_id() const { return teacher_id_; }
  [[nodiscard]] std::span<const std::uint8_t> analysis_labels() const { return analysis_labels_; }
  [[nodiscard]] LabeledBatch training_batch() const { return {images_, soft_targets_}; }

 private:
  Matrix images_;
  Matrix soft_targets_;
  std::string teacher_id_;
  std::vector<std::uint8_t> analysis_labels_;
};

/// Hex FNV-1a digest of the checkpoint bytes.
std::string checkpoint_id(const NetworkParams& params);

SoftLabelDataset generate_soft_labels(const NetworkParams& teacher,
                                      const MnistDataset& second_half);

/// u64 record count, then per record the input values followed by the
/// target probabilities, all binary64 little-endian. Input and target
/// widths are fixed at 784 and 10.
void save_soft_labels(const SoftLabelDataset& data, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_soft_labels(const SoftLabelDataset& data);
SoftLabelDataset decode_soft_labels(std::span<const std::uint8_t> bytes,
                                    std::string teacher_checkpoint_id = {});
SoftLabelDataset load_soft_labels(const std::filesystem::path& path);

struct StudentCell {
  std::size_t arch_index = 0;
  std::uint64_t seed = 0;
  TrainReport report;
  NetworkParams params;
};

struct StudentRow {
  NetworkArchitecture arch;
  double training_cost = 0.0;
  double test_cost = 0.0;
  double mean_test_error = 0.0;
  double std_test_error = 0.0;
};

struct StudentStudyReport {
  /// Ordered by total width, narrowest first.
  std::vector<StudentRow> rows;
  /// Ordered by (architecture, seed).
  std::vector<StudentCell> cells;
};

/// Trains every (architecture, seed) student with SGD on the soft targets
/// and scores it against hard test labels.
StudentStudyReport run_student_study(const SoftLabelDataset& soft_data, const MnistDataset& test,
                                     std::vector<NetworkArchitecture> architectures,
                                     std::span<const std::uint64_t> seeds,
                                     const TrainSettings& settings, std::size_t workers = 0);

enum class AgreementCategory { kBothRight, kBothWrong, kTeacherOnlyRight, kStudentOnlyRight };

std::string to_string(AgreementCategory category);

struct PredictionPair {
  std::size_t index = 0;
  std::uint8_t label = 0;
  Vector teacher_probs;
  Vector student_probs;
};

struct DisagreementTable {
  std::vector<PredictionPair> both_right;
  std::vector<PredictionPair> both_wrong;
  std::vector<PredictionPair> teacher_only_right;
  std::vector<PredictionPair> student_only_right;

  [[nodiscard]] std::size_t total() const {
    return both_right.size() + both_wrong.size() + teacher_only_right.size() +
           student_only_right.size();
  }
};

DisagreementTable compare_teacher_student_predictions(const NetworkParams& teacher,
                                                      const NetworkParams& student,
                                                      const Matrix& images,
                                                      std::span<const std::uint8_t> labels);

struct ArmSummary {
  std::string arm;
  Summary training_cost;
  Summary test_cost;
  Summary test_error;
};

/// Mean and spread of the training cost across seeds at one budget value.
struct TraceBand {
  double budget = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct GdSgdComparison {
  NetworkArchitecture arch;
  std::vector<std::uint64_t> seeds;
  std::vector<TrainReport> gd;
  std::vector<TrainReport> sgd;
  ArmSummary gd_summary;
  ArmSummary sgd_summary;
  std::vector<TraceBand> gd_band;
  std::vector<TraceBand> sgd_band;
};

/// Paired GD / SGD runs per seed from a shared initialization. The arms
/// must have equal step_size * max_steps budgets.
GdSgdComparison run_gd_vs_sgd_mnist(const NetworkArchitecture& arch, const LabeledBatch& train,
                                    const MnistDataset& test, const DescentConfig& cfg_gd,
                                    const TrainSettings& cfg_sgd,
                                    std::span<const std::uint64_t> seeds, std::size_t workers = 0);

}  // namespace floorlab
