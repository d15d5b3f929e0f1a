#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "floorlab/descent.hpp"
#include "floorlab/rng.hpp"

namespace floorlab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kProbabilityFloor = 1e-12;

/// Layer widths, input first. Hidden layers use ReLU, the output softmax.
struct NetworkArchitecture {
  std::vector<std::size_t> layer_sizes;

  /// Parses "784-500-300-10".
  static NetworkArchitecture parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;
  /// Throws std::invalid_argument for fewer than two layers or a zero width.
  void validate() const;

  [[nodiscard]] std::size_t input_width() const { return layer_sizes.front(); }
  [[nodiscard]] std::size_t output_width() const { return layer_sizes.back(); }
  [[nodiscard]] std::size_t layer_count() const { return layer_sizes.size() - 1; }

  friend bool operator==(const NetworkArchitecture&, const NetworkArchitecture&) = default;
};

/// Affine map out = weights * in + bias; weights are fan_out x fan_in.
struct DenseLayer {
  Matrix weights;
  Vector bias;
};

struct NetworkParams {
  NetworkArchitecture arch;
  std::vector<DenseLayer> layers;
  std::uint64_t init_seed = 0;

  [[nodiscard]] std::size_t parameter_count() const;
};

/// Same shapes as NetworkParams; used for gradients.
using ParamGradient = std::vector<DenseLayer>;

/// Rows are samples. Targets are probability vectors (one-hot for hard labels).
struct LabeledBatch {
  Matrix inputs;
  Matrix targets;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  /// Throws std::invalid_argument if a target row is not a distribution
  /// (sum 1 within 1e-9, entries >= 0) or the shapes disagree.
  void validate() const;
  /// Subset of rows, in the given order.
  [[nodiscard]] LabeledBatch rows(std::span<const std::size_t> index) const;
};

Matrix one_hot(std::span<const std::uint8_t> labels, std::size_t classes = 10);

/// Glorot-uniform weights in [-a, a], a = sqrt(6 / (fan_in + fan_out));
/// zero biases.
NetworkParams init_params(const NetworkArchitecture& arch, RngStream& stream);

/// Softmax output for one input vector.
Vector forward(const NetworkParams& params, std::span<const double> input);

/// Softmax outputs for every row of `inputs`.
Matrix forward_batch(const NetworkParams& params, const Matrix& inputs);

/// Row-wise log-sum-exp stabilized softmax.
Matrix softmax_rows(const Matrix& logits);

/// -sum_c target_c log(max(predicted_c, 1e-12)).
double cross_entropy(std::span<const double> predicted, std::span<const double> target);

/// Mean cross-entropy of `predicted` rows against `targets` rows.
double mean_cross_entropy(const Matrix& predicted, const Matrix& targets);

struct LossAndGradient {
  double loss = 0.0;
  ParamGradient gradient;
};

/// Mean cross-entropy over the batch and its exact gradient.
LossAndGradient backward(const NetworkParams& params, const LabeledBatch& batch);

/// Mean cross-entropy of the network over a labeled set.
double dataset_cost(const NetworkParams& params, const LabeledBatch& data);

struct EvalResult {
  double cost = 0.0;
  std::size_t error_count = 0;
};

/// Cost against one-hot labels and argmax errors (ties go to the lowest
/// class index).
EvalResult evaluate(const NetworkParams& params, const Matrix& inputs,
                    std::span<const std::uint8_t> labels);

std::size_t argmax(std::span<const double> values);

struct TrainReport {
  /// (step_size * steps, training cost on the full training set).
  std::vector<TracePoint> training_cost;
  double final_training_cost = 0.0;
  double test_cost = 0.0;
  std::size_t test_error_count = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_key = 0;
  std::size_t steps = 0;
  double step_size = 0.0;
  std::size_t batch_size = 0;
  StopReason stop_reason = StopReason::kMaxSteps;
};

/// Full-batch gradient descent for cfg.max_steps updates (stops early on a
/// gradient norm below cfg.grad_tol or a non-finite cost). step_size may be
/// 0 here, which leaves the parameters unchanged.
TrainReport train_gd(NetworkParams& params, const LabeledBatch& data, const DescentConfig& cfg);

/// Minibatch SGD over per-epoch shuffles of the data. A batch size at least
/// the data size uses the unshuffled full batch and reproduces train_gd.
TrainReport train_sgd(NetworkParams& params, const LabeledBatch& data, const DescentConfig& cfg,
                      std::size_t batch_size, RngStream shuffle_stream);

/// Reorders hidden units of hidden layer `layer` (0 = first hidden layer).
void permute_hidden_units(NetworkParams& params, std::size_t layer,
                          std::span<const std::size_t> permutation);

/// Flat little-endian checkpoint: u64 width count, u64 widths, then per
/// layer the row-major fan_out x fan_in weights and the fan_out biases as
/// IEEE-754 binary64.
void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params);
NetworkParams load_checkpoint(const std::filesystem::path& path);
NetworkParams decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace floorlab
