#include "floorlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"
#include "floorlab/errors.hpp"

namespace floorlab {

NetworkArchitecture NetworkArchitecture::parse(const std::string& text) {
  NetworkArchitecture arch;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '-')) {
    std::size_t used = 0;
    unsigned long width = 0;
    try {
      width = std::stoul(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) {
      throw std::invalid_argument("architecture '" + text + "': bad width '" + part + "'");
    }
    arch.layer_sizes.push_back(width);
  }
  arch.validate();
  return arch;
}

std::string NetworkArchitecture::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (i > 0) out += '-';
    out += std::to_string(layer_sizes[i]);
  }
  return out;
}

void NetworkArchitecture::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("architecture needs at least an input and an output layer");
  }
  for (std::size_t w : layer_sizes) {
    if (w == 0) throw std::invalid_argument("architecture has a zero-width layer");
  }
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) count += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return count;
}

void LabeledBatch::validate() const {
  if (inputs.rows() != targets.rows()) {
    throw std::invalid_argument("LabeledBatch: inputs and targets have different row counts");
  }
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    const double sum = targets.row(r).sum();
    if (std::abs(sum - 1.0) > 1e-9 || targets.row(r).minCoeff() < 0.0) {
      throw std::invalid_argument("LabeledBatch: target row " + std::to_string(r) +
                                  " is not a probability vector");
    }
  }
}

LabeledBatch LabeledBatch::rows(std::span<const std::size_t> index) const {
  LabeledBatch out;
  out.inputs.resize(static_cast<Eigen::Index>(index.size()), inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(index.size()), targets.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(index[r]);
    out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(src);
    out.targets.row(static_cast<Eigen::Index>(r)) = targets.row(src);
  }
  return out;
}

Matrix one_hot(std::span<const std::uint8_t> labels, std::size_t classes) {
  Matrix out =
      Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= classes) throw std::invalid_argument("one_hot: label out of range");
    out(static_cast<Eigen::Index>(r), labels[r]) = 1.0;
  }
  return out;
}

NetworkParams init_params(const NetworkArchitecture& arch, RngStream& stream) {
  arch.validate();
  NetworkParams params;
  params.arch = arch;
  params.init_seed = stream.key();
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(arch.layer_sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(arch.layer_sizes[l + 1]);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c)
        layer.weights(r, c) = a * (2.0 * stream.uniform() - 1.0);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    double total = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double e = std::exp(logits(r, c) - top);
      out(r, c) = e;
      total += e;
    }
    out.row(r) /= total;
  }
  return out;
}

namespace {

Matrix affine(const DenseLayer& layer, const Matrix& in) {
  Matrix z = in * layer.weights.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

void check_input_width(const NetworkParams& params, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != params.arch.input_width()) {
    throw std::invalid_argument("input width " + std::to_string(cols) +
                                " does not match network input " +
                                std::to_string(params.arch.input_width()));
  }
}

}  // namespace

Matrix forward_batch(const NetworkParams& params, const Matrix& inputs) {
  check_input_width(params, inputs.cols());
  Matrix act = inputs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix z = affine(params.layers[l], act);
    if (l + 1 < params.layers.size()) {
      act = z.cwiseMax(0.0);
    } else {
      return softmax_rows(z);
    }
  }
  return act;
}

Vector forward(const NetworkParams& params, std::span<const double> input) {
  for (double v : input) {
    if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input");
  }
  Matrix row(1, static_cast<Eigen::Index>(input.size()));
  std::copy(input.begin(), input.end(), row.data());
  return forward_batch(params, row).row(0).transpose();
}

double cross_entropy(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.size() != target.size()) {
    throw std::invalid_argument("cross_entropy: size mismatch");
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < target.size(); ++c) {
    if (target[c] != 0.0) loss -= target[c] * std::log(std::max(predicted[c], kProbabilityFloor));
  }
  return loss;
}

double mean_cross_entropy(const Matrix& predicted, const Matrix& targets) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < predicted.rows(); ++r) {
    double row_loss = 0.0;
    for (Eigen::Index c = 0; c < predicted.cols(); ++c) {
      const double t = targets(r, c);
      if (t != 0.0) row_loss -= t * std::log(std::max(predicted(r, c), kProbabilityFloor));
    }
    total += row_loss;
  }
  return total / static_cast<double>(predicted.rows());
}

LossAndGradient backward(const NetworkParams& params, const LabeledBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("backward: empty batch");
  check_input_width(params, batch.inputs.cols());
  const std::size_t depth = params.layers.size();

  // activations[l] feeds layer l; pre[l] is that layer's pre-activation.
  std::vector<Matrix> activations{batch.inputs};
  std::vector<Matrix> pre;
  for (std::size_t l = 0; l < depth; ++l) {
    pre.push_back(affine(params.layers[l], activations.back()));
    if (l + 1 < depth) activations.push_back(pre.back().cwiseMax(0.0));
  }
  const Matrix probs = softmax_rows(pre.back());

  LossAndGradient out;
  out.loss = mean_cross_entropy(probs, batch.targets);
  out.gradient.resize(depth);

  Matrix delta = (probs - batch.targets) / static_cast<double>(batch.size());
  for (std::size_t l = depth; l-- > 0;) {
    out.gradient[l].weights = delta.transpose() * activations[l];
    out.gradient[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix upstream = delta * params.layers[l].weights;
      delta = upstream.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

double dataset_cost(const NetworkParams& params, const LabeledBatch& data) {
  return mean_cross_entropy(forward_batch(params, data.inputs), data.targets);
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

EvalResult evaluate(const NetworkParams& params, const Matrix& inputs,
                    std::span<const std::uint8_t> labels) {
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
    throw std::invalid_argument("evaluate: input and label counts differ");
  }
  const Matrix probs = forward_batch(params, inputs);
  EvalResult out;
  double total = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const std::size_t label = labels[static_cast<std::size_t>(r)];
    total -= std::log(std::max(probs(r, static_cast<Eigen::Index>(label)), kProbabilityFloor));
    const std::span<const double> row(probs.row(r).data(), static_cast<std::size_t>(probs.cols()));
    if (argmax(row) != label) ++out.error_count;
  }
  out.cost = labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
  return out;
}

namespace {

void validate_train_config(const DescentConfig& cfg) {
  if (!(cfg.step_size >= 0.0)) throw std::invalid_argument("training: step_size must be >= 0");
  if (!(cfg.grad_tol > 0.0)) throw std::invalid_argument("training: grad_tol must be > 0");
}

double gradient_norm(const ParamGradient& g) {
  double ss = 0.0;
  for (const auto& l : g) ss += l.weights.squaredNorm() + l.bias.squaredNorm();
  return std::sqrt(ss);
}

void apply_update(NetworkParams& params, const ParamGradient& g, double step) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].weights -= step * g[l].weights;
    params.layers[l].bias -= step * g[l].bias;
  }
}

}  // namespace

TrainReport train_gd(NetworkParams& params, const LabeledBatch& data, const DescentConfig& cfg) {
  validate_train_config(cfg);
  if (data.size() == 0) throw std::invalid_argument("train_gd: empty data");
  TrainReport report;
  report.init_seed = params.init_seed;
  report.step_size = cfg.step_size;
  report.batch_size = data.size();

  for (std::size_t step = 0;; ++step) {
    auto lg = backward(params, data);
    if (cfg.record_every > 0 && step % cfg.record_every == 0) {
      report.training_cost.push_back({cfg.step_size * static_cast<double>(step), lg.loss});
    }
    report.final_training_cost = lg.loss;
    report.steps = step;
    if (!std::isfinite(lg.loss)) {
      report.stop_reason = StopReason::kDivergence;
      return report;
    }
    if (gradient_norm(lg.gradient) < cfg.grad_tol) {
      report.stop_reason = StopReason::kGradientBelowTol;
      return report;
    }
    if (step >= cfg.max_steps) {
      report.stop_reason = StopReason::kMaxSteps;
      return report;
    }
    apply_update(params, lg.gradient, cfg.step_size);
  }
}

TrainReport train_sgd(NetworkParams& params, const LabeledBatch& data, const DescentConfig& cfg,
                      std::size_t batch_size, RngStream shuffle_stream) {
  validate_train_config(cfg);
  if (batch_size < 1) throw std::invalid_argument("train_sgd: batch_size must be >= 1");
  if (data.size() == 0) throw std::invalid_argument("train_sgd: empty data");
  if (batch_size >= data.size()) {
    auto report = train_gd(params, data, cfg);
    report.shuffle_key = shuffle_stream.key();
    return report;
  }

  TrainReport report;
  report.init_seed = params.init_seed;
  report.shuffle_key = shuffle_stream.key();
  report.step_size = cfg.step_size;
  report.batch_size = batch_size;

  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();  // forces a shuffle before the first batch
  std::vector<std::size_t> picked;
  for (std::size_t step = 0;; ++step) {
    if (cfg.record_every > 0 && step % cfg.record_every == 0) {
      report.training_cost.push_back(
          {cfg.step_size * static_cast<double>(step), dataset_cost(params, data)});
    }
    report.steps = step;
    if (step >= cfg.max_steps) {
      report.stop_reason = StopReason::kMaxSteps;
      break;
    }
    if (cursor >= order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(std::span<std::size_t>(order), shuffle_stream);
      cursor = 0;
    }
    const std::size_t take = std::min(batch_size, order.size() - cursor);
    picked.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                  order.begin() + static_cast<std::ptrdiff_t>(cursor + take));
    cursor += take;
    auto lg = backward(params, data.rows(picked));
    if (!std::isfinite(lg.loss)) {
      report.stop_reason = StopReason::kDivergence;
      break;
    }
    apply_update(params, lg.gradient, cfg.step_size);
  }
  report.final_training_cost = dataset_cost(params, data);
  return report;
}

void permute_hidden_units(NetworkParams& params, std::size_t layer,
                          std::span<const std::size_t> permutation) {
  if (layer + 1 >= params.layers.size()) {
    throw std::invalid_argument("permute_hidden_units: not a hidden layer");
  }
  auto& in = params.layers[layer];
  auto& out = params.layers[layer + 1];
  const auto width = in.weights.rows();
  if (static_cast<Eigen::Index>(permutation.size()) != width) {
    throw std::invalid_argument("permute_hidden_units: permutation size mismatch");
  }
  std::vector<bool> seen(permutation.size(), false);
  for (std::size_t src : permutation) {
    if (src >= seen.size() || seen[src]) {
      throw std::invalid_argument("permute_hidden_units: not a permutation");
    }
    seen[src] = true;
  }
  Matrix w_in(in.weights.rows(), in.weights.cols());
  Vector b_in(in.bias.size());
  Matrix w_out(out.weights.rows(), out.weights.cols());
  for (Eigen::Index u = 0; u < width; ++u) {
    const auto src = static_cast<Eigen::Index>(permutation[static_cast<std::size_t>(u)]);
    w_in.row(u) = in.weights.row(src);
    b_in(u) = in.bias(src);
    w_out.col(u) = out.weights.col(src);
  }
  in.weights = std::move(w_in);
  in.bias = std::move(b_in);
  out.weights = std::move(w_out);
}

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params) {
  std::vector<std::uint8_t> out;
  const auto& sizes = params.arch.layer_sizes;
  detail::put_u64(out, sizes.size());
  for (std::size_t s : sizes) detail::put_u64(out, s);
  for (const auto& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        detail::put_f64(out, layer.weights(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) detail::put_f64(out, layer.bias(r));
  }
  return out;
}

NetworkParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "checkpoint");
  const std::uint64_t count = in.u64("layer_count");
  if (count < 2 || count > 64) {
    throw FormatError("checkpoint.layer_count", "implausible value " + std::to_string(count));
  }
  NetworkParams params;
  for (std::uint64_t i = 0; i < count; ++i) {
    params.arch.layer_sizes.push_back(static_cast<std::size_t>(in.u64("layer_sizes")));
  }
  try {
    params.arch.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError("checkpoint.layer_sizes", e.what());
  }
  for (std::size_t l = 0; l < params.arch.layer_count(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(params.arch.layer_sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(params.arch.layer_sizes[l + 1]);
    in.need(static_cast<std::size_t>(fan_out * (fan_in + 1)) * 8, "weights");
    DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = in.f64("weights");
    }
    for (Eigen::Index r = 0; r < fan_out; ++r) layer.bias(r) = in.f64("bias");
    params.layers.push_back(std::move(layer));
  }
  if (in.remaining() != 0) {
    throw FormatError("checkpoint.payload", std::to_string(in.remaining()) + " trailing bytes");
  }
  return params;
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace floorlab
