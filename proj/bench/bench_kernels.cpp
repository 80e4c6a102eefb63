#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "bsann/kernels.hpp"

using namespace bsann::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

// Head layer of the default network: 256 hidden units onto 8 x 4 x 257 complex filters.
DenseDims dims(const benchmark::State& state) {
  return {static_cast<std::size_t>(state.range(0)), 256, static_cast<std::size_t>(state.range(1))};
}

template <bool Parallel>
void BM_DenseForward(benchmark::State& state) {
  const DenseDims d = dims(state);
  const auto W = random_vector(d.rows * d.cols, 1), b = random_vector(d.rows, 2), X = random_vector(d.batch * d.cols, 3);
  std::vector<double> Y(d.batch * d.rows);
  for (auto _ : state) {
    if constexpr (Parallel)
      dense_forward(W, b, X, Y, d);
    else
      dense_forward_serial(W, b, X, Y, d);
    benchmark::DoNotOptimize(Y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.rows * d.cols * d.batch));
}

template <bool Parallel>
void BM_DenseBackwardInput(benchmark::State& state) {
  const DenseDims d = dims(state);
  const auto W = random_vector(d.rows * d.cols, 1), dY = random_vector(d.batch * d.rows, 2);
  std::vector<double> dX(d.batch * d.cols);
  for (auto _ : state) {
    if constexpr (Parallel)
      dense_backward_input(W, dY, dX, d);
    else
      dense_backward_input_serial(W, dY, dX, d);
    benchmark::DoNotOptimize(dX.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.rows * d.cols * d.batch));
}

template <bool Parallel>
void BM_DenseBackwardWeights(benchmark::State& state) {
  const DenseDims d = dims(state);
  const auto dY = random_vector(d.batch * d.rows, 1), X = random_vector(d.batch * d.cols, 2);
  std::vector<double> dW(d.rows * d.cols), db(d.rows);
  for (auto _ : state) {
    if constexpr (Parallel)
      dense_backward_weights(dY, X, dW, db, d);
    else
      dense_backward_weights_serial(dY, X, dW, db, d);
    benchmark::DoNotOptimize(dW.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.rows * d.cols * d.batch));
}

template <bool Parallel>
void BM_Adam(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  auto theta = random_vector(n, 1);
  const auto grad = random_vector(n, 2);
  std::vector<double> m(n), v(n);
  const AdamHyper h;
  long t = 0;
  for (auto _ : state) {
    ++t;
    if constexpr (Parallel)
      adam_update(theta, grad, m, v, t, h);
    else
      adam_update_serial(theta, grad, m, v, t, h);
    benchmark::DoNotOptimize(theta.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void dense_args(benchmark::internal::Benchmark* b) {
  for (long rows : {256L, 16448L})
    for (long batch : {1L, 8L}) b->Args({rows, batch});
}

}  // namespace

BENCHMARK(BM_DenseForward<false>)->Name("dense_forward/serial")->Apply(dense_args);
BENCHMARK(BM_DenseForward<true>)->Name("dense_forward/openmp")->Apply(dense_args)->UseRealTime();
BENCHMARK(BM_DenseBackwardInput<false>)->Name("dense_backward_input/serial")->Apply(dense_args);
BENCHMARK(BM_DenseBackwardInput<true>)->Name("dense_backward_input/openmp")->Apply(dense_args)->UseRealTime();
BENCHMARK(BM_DenseBackwardWeights<false>)->Name("dense_backward_weights/serial")->Apply(dense_args);
BENCHMARK(BM_DenseBackwardWeights<true>)->Name("dense_backward_weights/openmp")->Apply(dense_args)->UseRealTime();
BENCHMARK(BM_Adam<false>)->Name("adam/serial")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(BM_Adam<true>)->Name("adam/openmp")->Arg(1 << 16)->Arg(1 << 22)->UseRealTime();

BENCHMARK_MAIN();
