#include <benchmark/benchmark.h>

#include "floorlab/landscape.hpp"
#include "floorlab/network.hpp"
#include "floorlab/rng.hpp"

namespace fl = floorlab;

namespace {

// One full contraction over the n^3 tensor.
void BM_EvaluateField(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto s = fl::derive_stream(1, "bench", n);
  const auto x = fl::sample_couplings(n, 1.0, s);
  std::vector<double> w(n);
  s.fill_normal(w, 1.0);
  for (auto _ : state) {
    auto eval = fl::evaluate_field(x, w);
    benchmark::DoNotOptimize(eval.energy);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_EvaluateField)->Arg(50)->Arg(100)->Arg(200);

void BM_TripartiteGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto s = fl::derive_stream(1, "bench-tri", n);
  const auto x = fl::sample_couplings(n, 1.0, s);
  std::vector<double> w1(n), w2(n), w3(n);
  s.fill_normal(w1, 1.0);
  s.fill_normal(w2, 1.0);
  s.fill_normal(w3, 1.0);
  for (auto _ : state) {
    auto eval = fl::tripartite_gradient(x, w1, w2, w3);
    benchmark::DoNotOptimize(eval.energy);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_TripartiteGradient)->Arg(50)->Arg(100);

// Forward and backward pass over one minibatch.
void BM_Backward(benchmark::State& state) {
  const auto batch_size = static_cast<Eigen::Index>(state.range(0));
  auto s = fl::derive_stream(1, "bench-net", 0);
  const auto params = fl::init_params(fl::NetworkArchitecture::parse("784-500-300-10"), s);
  fl::LabeledBatch batch;
  batch.inputs = fl::Matrix(batch_size, 784);
  for (Eigen::Index i = 0; i < batch.inputs.size(); ++i) batch.inputs.data()[i] = s.uniform();
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(batch_size));
  for (auto& l : labels) l = static_cast<std::uint8_t>(s.below(10));
  batch.targets = fl::one_hot(labels);
  for (auto _ : state) {
    auto lg = fl::backward(params, batch);
    benchmark::DoNotOptimize(lg.loss);
  }
  state.SetItemsProcessed(state.iterations() * batch_size);
}
BENCHMARK(BM_Backward)->Arg(64)->Arg(256);

}  // namespace
BENCHMARK_MAIN();
