#include "floorlab/mnist.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "binary_io.hpp"
#include "floorlab/errors.hpp"
#include "floorlab/parallel.hpp"

namespace floorlab {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("idx.magic", "file shorter than the 4-byte magic");
  IdxTensor t;
  t.magic = read_be32(bytes, 0);
  std::size_t rank = 0;
  if (t.magic == kIdxImageMagic) {
    rank = 3;
  } else if (t.magic == kIdxLabelMagic) {
    rank = 1;
  } else {
    char hex[16];
    std::snprintf(hex, sizeof hex, "0x%08X", t.magic);
    throw FormatError("idx.magic", std::string("unsupported magic ") + hex);
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) {
    throw FormatError("idx.dims",
                      "header truncated: expected " + std::to_string(rank) + " dimension words");
  }
  std::size_t expected = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    t.dims.push_back(read_be32(bytes, 4 + 4 * d));
    expected *= t.dims.back();
  }
  const std::size_t actual = bytes.size() - header;
  if (actual < expected) {
    throw FormatError("idx.payload", "truncated payload: dimensions imply " +
                                         std::to_string(expected) + " bytes, found " +
                                         std::to_string(actual));
  }
  if (actual > expected) {
    throw FormatError("idx.payload", "dimension mismatch: dimensions imply " +
                                         std::to_string(expected) + " bytes, found " +
                                         std::to_string(actual));
  }
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

IdxTensor load_idx(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw FormatError("idx.path", "cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::vector<std::uint8_t> chunk(1 << 16);
  for (;;) {
    const int got = gzread(file, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (got < 0) {
      int err = 0;
      const std::string msg = gzerror(file, &err);
      gzclose(file);
      throw FormatError("idx.gzip", path.string() + ": " + msg);
    }
    if (got == 0) break;
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + got);
  }
  gzclose(file);
  return parse_idx(bytes);
}

std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor) {
  std::vector<std::uint8_t> out;
  put_be32(out, tensor.magic);
  for (auto d : tensor.dims) put_be32(out, d);
  out.insert(out.end(), tensor.payload.begin(), tensor.payload.end());
  return out;
}

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kFullTrain:
      return "full-train";
    case SplitTag::kTrainFirstHalf:
      return "train-first-half";
    case SplitTag::kTrainSecondHalf:
      return "train-second-half";
    case SplitTag::kTest:
      return "test";
  }
  return "unknown";
}

LabeledBatch MnistDataset::hard_batch() const { return {images, one_hot(labels, kMnistClasses)}; }

MnistDataset MnistDataset::subset(std::span<const std::size_t> index, SplitTag tag) const {
  MnistDataset out;
  out.split = tag;
  out.images.resize(static_cast<Eigen::Index>(index.size()), images.cols());
  out.labels.reserve(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    out.images.row(static_cast<Eigen::Index>(r)) = images.row(static_cast<Eigen::Index>(index[r]));
    out.labels.push_back(labels[index[r]]);
  }
  return out;
}

MnistDataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels,
                        SplitTag tag) {
  const IdxTensor img = load_idx(images);
  const IdxTensor lab = load_idx(labels);
  if (img.magic != kIdxImageMagic)
    throw FormatError("idx.magic", images.string() + " is not an image file");
  if (lab.magic != kIdxLabelMagic)
    throw FormatError("idx.magic", labels.string() + " is not a label file");
  if (img.dims[1] * img.dims[2] != kMnistPixels) {
    throw FormatError("idx.dims", "images are " + std::to_string(img.dims[1]) + "x" +
                                      std::to_string(img.dims[2]) + ", expected 28x28");
  }
  if (img.dims[0] != lab.dims[0]) {
    throw FormatError("idx.dims", std::to_string(img.dims[0]) + " images but " +
                                      std::to_string(lab.dims[0]) + " labels");
  }
  MnistDataset out;
  out.split = tag;
  const auto count = static_cast<Eigen::Index>(img.dims[0]);
  out.images.resize(count, static_cast<Eigen::Index>(kMnistPixels));
  for (Eigen::Index r = 0; r < count; ++r) {
    for (std::size_t c = 0; c < kMnistPixels; ++c) {
      out.images(r, static_cast<Eigen::Index>(c)) =
          img.payload[static_cast<std::size_t>(r) * kMnistPixels + c] / 255.0;
    }
  }
  out.labels = lab.payload;
  for (auto l : out.labels) {
    if (l >= kMnistClasses)
      throw FormatError("idx.payload", "label " + std::to_string(l) + " out of range");
  }
  return out;
}

MnistFiles MnistFiles::in_directory(const std::filesystem::path& dir) {
  auto pick = [&](const std::string& name) {
    const auto plain = dir / name;
    if (std::filesystem::exists(plain)) return plain;
    return dir / (name + ".gz");
  };
  return {pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"),
          pick("t10k-images-idx3-ubyte"), pick("t10k-labels-idx1-ubyte")};
}

namespace {

std::vector<std::size_t> seeded_permutation(std::size_t count, std::uint64_t seed,
                                            std::string_view purpose) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream stream = derive_stream(seed, purpose, 0);
  shuffle(std::span<std::size_t>(order), stream);
  return order;
}

}  // namespace

MnistDataset subsample(const MnistDataset& data, std::size_t count, std::uint64_t seed) {
  auto order = seeded_permutation(data.size(), seed, "subsample");
  order.resize(std::min(count, order.size()));
  return data.subset(order, data.split);
}

std::pair<MnistDataset, MnistDataset> make_splits(const MnistDataset& train, std::uint64_t seed,
                                                  std::size_t expected_count) {
  if (train.size() != expected_count || expected_count % 2 != 0 || expected_count == 0) {
    throw std::invalid_argument("make_splits: expected " + std::to_string(expected_count) +
                                " samples (even), got " + std::to_string(train.size()));
  }
  const auto order = seeded_permutation(train.size(), seed, "split");
  const std::size_t half = order.size() / 2;
  const std::span<const std::size_t> all(order);
  return {train.subset(all.first(half), SplitTag::kTrainFirstHalf),
          train.subset(all.subspan(half), SplitTag::kTrainSecondHalf)};
}

TrainSettings default_sgd_settings() {
  TrainSettings s;
  s.descent.step_size = 0.1;
  s.descent.max_steps = 5000;
  s.batch_size = 64;
  return s;
}

DescentConfig default_gd_config() {
  DescentConfig cfg;
  cfg.step_size = 0.5;
  cfg.max_steps = 1000;
  return cfg;
}

TeacherResult train_teacher(const MnistDataset& first_half, const MnistDataset& test,
                            const NetworkArchitecture& arch, const TrainSettings& settings,
                            std::uint64_t seed) {
  if (arch.output_width() != kMnistClasses) {
    throw std::invalid_argument("train_teacher: output width must be 10");
  }
  RngStream init = derive_stream(seed, "teacher-init", 0);
  TeacherResult out{init_params(arch, init), {}};
  out.report = train_sgd(out.params, first_half.hard_batch(), settings.descent, settings.batch_size,
                         derive_stream(seed, "teacher-shuffle", 0));
  const auto eval = evaluate(out.params, test.images, test.labels);
  out.report.test_cost = eval.cost;
  out.report.test_error_count = eval.error_count;
  return out;
}

SoftLabelDataset::SoftLabelDataset(Matrix images, Matrix soft_targets,
                                   std::string teacher_checkpoint_id,
                                   std::vector<std::uint8_t> analysis_labels)
    : images_(std::move(images)),
      soft_targets_(std::move(soft_targets)),
      teacher_id_(std::move(teacher_checkpoint_id)),
      analysis_labels_(std::move(analysis_labels)) {
  if (images_.rows() != soft_targets_.rows()) {
    throw std::invalid_argument("SoftLabelDataset: image and target counts differ");
  }
  if (!analysis_labels_.empty() &&
      analysis_labels_.size() != static_cast<std::size_t>(images_.rows())) {
    throw std::invalid_argument("SoftLabelDataset: analysis label count differs");
  }
  for (Eigen::Index r = 0; r < soft_targets_.rows(); ++r) {
    const double sum = soft_targets_.row(r).sum();
    if (std::abs(sum - 1.0) > 1e-9 || soft_targets_.row(r).minCoeff() < 0.0) {
      throw std::invalid_argument("SoftLabelDataset: target " + std::to_string(r) +
                                  " is not a probability vector");
    }
  }
}

std::string checkpoint_id(const NetworkParams& params) {
  const auto bytes = encode_checkpoint(params);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

SoftLabelDataset generate_soft_labels(const NetworkParams& teacher,
                                      const MnistDataset& second_half) {
  Matrix targets = forward_batch(teacher, second_half.images);
  return SoftLabelDataset(second_half.images, std::move(targets), checkpoint_id(teacher),
                          second_half.labels);
}

std::vector<std::uint8_t> encode_soft_labels(const SoftLabelDataset& data) {
  if (static_cast<std::size_t>(data.images().cols()) != kMnistPixels ||
      static_cast<std::size_t>(data.soft_targets().cols()) != kMnistClasses) {
    throw std::invalid_argument("encode_soft_labels: records must be 784 inputs + 10 targets");
  }
  std::vector<std::uint8_t> out;
  out.reserve(8 + data.size() * (kMnistPixels + kMnistClasses) * 8);
  detail::put_u64(out, data.size());
  for (Eigen::Index r = 0; r < data.images().rows(); ++r) {
    for (Eigen::Index c = 0; c < data.images().cols(); ++c)
      detail::put_f64(out, data.images()(r, c));
    for (Eigen::Index c = 0; c < data.soft_targets().cols(); ++c) {
      detail::put_f64(out, data.soft_targets()(r, c));
    }
  }
  return out;
}

SoftLabelDataset decode_soft_labels(std::span<const std::uint8_t> bytes,
                                    std::string teacher_checkpoint_id) {
  detail::ByteReader in(bytes, "soft_labels");
  const std::uint64_t count = in.u64("count");
  constexpr std::size_t record = (kMnistPixels + kMnistClasses) * 8;
  if (in.remaining() != count * record) {
    throw FormatError("soft_labels.records", "count " + std::to_string(count) + " implies " +
                                                 std::to_string(count * record) + " bytes, found " +
                                                 std::to_string(in.remaining()));
  }
  const auto rows = static_cast<Eigen::Index>(count);
  Matrix images(rows, static_cast<Eigen::Index>(kMnistPixels));
  Matrix targets(rows, static_cast<Eigen::Index>(kMnistClasses));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < images.cols(); ++c) images(r, c) = in.f64("input");
    for (Eigen::Index c = 0; c < targets.cols(); ++c) targets(r, c) = in.f64("target");
  }
  try {
    return SoftLabelDataset(std::move(images), std::move(targets),
                            std::move(teacher_checkpoint_id));
  } catch (const std::invalid_argument& e) {
    throw FormatError("soft_labels.target", e.what());
  }
}

void save_soft_labels(const SoftLabelDataset& data, const std::filesystem::path& path) {
  const auto bytes = encode_soft_labels(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

SoftLabelDataset load_soft_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_soft_labels(bytes);
}

StudentStudyReport run_student_study(const SoftLabelDataset& soft_data, const MnistDataset& test,
                                     std::vector<NetworkArchitecture> architectures,
                                     std::span<const std::uint64_t> seeds,
                                     const TrainSettings& settings, std::size_t workers) {
  if (architectures.size() < 2)
    throw std::invalid_argument("run_student_study: need >= 2 architectures");
  if (seeds.size() < 2) throw std::invalid_argument("run_student_study: need >= 2 seeds");
  for (const auto& a : architectures) {
    a.validate();
    if (a.input_width() != static_cast<std::size_t>(soft_data.images().cols()) ||
        a.output_width() != kMnistClasses) {
      throw std::invalid_argument("run_student_study: architecture " + a.to_string() +
                                  " does not fit 784 inputs / 10 classes");
    }
  }
  auto width = [](const NetworkArchitecture& a) {
    return std::accumulate(a.layer_sizes.begin() + 1, a.layer_sizes.end() - 1, std::size_t{0});
  };
  std::stable_sort(architectures.begin(), architectures.end(),
                   [&](const auto& a, const auto& b) { return width(a) < width(b); });

  const LabeledBatch train = soft_data.training_batch();
  StudentStudyReport report;
  report.cells.resize(architectures.size() * seeds.size());
  parallel_for(report.cells.size(), workers == 0 ? default_worker_count() : workers,
               [&](std::size_t cell) {
                 const std::size_t a = cell / seeds.size();
                 const std::uint64_t seed = seeds[cell % seeds.size()];
                 RngStream init = derive_stream(seed, "student-init", a);
                 auto params = init_params(architectures[a], init);
                 auto rep = train_sgd(params, train, settings.descent, settings.batch_size,
                                      derive_stream(seed, "student-shuffle", a));
                 const auto eval = evaluate(params, test.images, test.labels);
                 rep.test_cost = eval.cost;
                 rep.test_error_count = eval.error_count;
                 report.cells[cell] = {a, seed, std::move(rep), std::move(params)};
               });

  for (std::size_t a = 0; a < architectures.size(); ++a) {
    std::vector<double> train_cost, test_cost, errors;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& rep = report.cells[a * seeds.size() + s].report;
      train_cost.push_back(rep.final_training_cost);
      test_cost.push_back(rep.test_cost);
      errors.push_back(static_cast<double>(rep.test_error_count));
    }
    const auto err = summarize(errors);
    report.rows.push_back({architectures[a], summarize(train_cost).mean, summarize(test_cost).mean,
                           err.mean, err.std});
  }
  return report;
}

std::string to_string(AgreementCategory category) {
  switch (category) {
    case AgreementCategory::kBothRight:
      return "both-right";
    case AgreementCategory::kBothWrong:
      return "both-wrong";
    case AgreementCategory::kTeacherOnlyRight:
      return "teacher-only-right";
    case AgreementCategory::kStudentOnlyRight:
      return "student-only-right";
  }
  return "unknown";
}

DisagreementTable compare_teacher_student_predictions(const NetworkParams& teacher,
                                                      const NetworkParams& student,
                                                      const Matrix& images,
                                                      std::span<const std::uint8_t> labels) {
  if (static_cast<std::size_t>(images.rows()) != labels.size()) {
    throw std::invalid_argument("compare_teacher_student_predictions: count mismatch");
  }
  const Matrix tp = forward_batch(teacher, images);
  const Matrix sp = forward_batch(student, images);
  DisagreementTable table;
  for (Eigen::Index r = 0; r < images.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    PredictionPair pair{i, labels[i], tp.row(r).transpose(), sp.row(r).transpose()};
    const bool t_ok = argmax({tp.row(r).data(), static_cast<std::size_t>(tp.cols())}) == labels[i];
    const bool s_ok = argmax({sp.row(r).data(), static_cast<std::size_t>(sp.cols())}) == labels[i];
    auto& bucket = t_ok ? (s_ok ? table.both_right : table.teacher_only_right)
                        : (s_ok ? table.student_only_right : table.both_wrong);
    bucket.push_back(std::move(pair));
  }
  return table;
}

namespace {

ArmSummary summarize_arm(std::string name, const std::vector<TrainReport>& reports) {
  std::vector<double> train, test, err;
  for (const auto& r : reports) {
    train.push_back(r.final_training_cost);
    test.push_back(r.test_cost);
    err.push_back(static_cast<double>(r.test_error_count));
  }
  return {std::move(name), summarize(train), summarize(test), summarize(err)};
}

std::vector<TraceBand> trace_band(const std::vector<TrainReport>& reports) {
  std::vector<TraceBand> band;
  const std::size_t points = reports.front().training_cost.size();
  for (std::size_t i = 0; i < points; ++i) {
    std::vector<double> values;
    for (const auto& r : reports) {
      if (i < r.training_cost.size()) values.push_back(r.training_cost[i].value);
    }
    const auto s = summarize(values);
    band.push_back({reports.front().training_cost[i].budget, s.mean, s.std});
  }
  return band;
}

}  // namespace

GdSgdComparison run_gd_vs_sgd_mnist(const NetworkArchitecture& arch, const LabeledBatch& train,
                                    const MnistDataset& test, const DescentConfig& cfg_gd,
                                    const TrainSettings& cfg_sgd,
                                    std::span<const std::uint64_t> seeds, std::size_t workers) {
  if (seeds.empty()) throw std::invalid_argument("run_gd_vs_sgd_mnist: no seeds");
  const double gd_budget = cfg_gd.step_size * static_cast<double>(cfg_gd.max_steps);
  const double sgd_budget =
      cfg_sgd.descent.step_size * static_cast<double>(cfg_sgd.descent.max_steps);
  if (std::abs(gd_budget - sgd_budget) > 1e-9 * std::max(gd_budget, sgd_budget)) {
    throw std::invalid_argument(
        "run_gd_vs_sgd_mnist: arms have different step_size*steps budgets (" +
        std::to_string(gd_budget) + " vs " + std::to_string(sgd_budget) + ")");
  }
  GdSgdComparison out;
  out.arch = arch;
  out.seeds.assign(seeds.begin(), seeds.end());
  out.gd.resize(seeds.size());
  out.sgd.resize(seeds.size());
  // Work items: even = GD arm, odd = SGD arm of seed item / 2.
  parallel_for(
      2 * seeds.size(), workers == 0 ? default_worker_count() : workers, [&](std::size_t item) {
        const std::uint64_t seed = seeds[item / 2];
        RngStream init = derive_stream(seed, "init", 0);
        auto params = init_params(arch, init);
        TrainReport rep = item % 2 == 0
                              ? train_gd(params, train, cfg_gd)
                              : train_sgd(params, train, cfg_sgd.descent, cfg_sgd.batch_size,
                                          derive_stream(seed, "shuffle", 0));
        const auto eval = evaluate(params, test.images, test.labels);
        rep.test_cost = eval.cost;
        rep.test_error_count = eval.error_count;
        (item % 2 == 0 ? out.gd : out.sgd)[item / 2] = std::move(rep);
      });
  out.gd_summary = summarize_arm("GD", out.gd);
  out.sgd_summary = summarize_arm("SGD", out.sgd);
  if (!out.gd.front().training_cost.empty()) out.gd_band = trace_band(out.gd);
  if (!out.sgd.front().training_cost.empty()) out.sgd_band = trace_band(out.sgd);
  return out;
}

}  // namespace floorlab
