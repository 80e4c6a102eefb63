#pragma once

#include <cstddef>
#include <span>

// Dense batched kernels behind the network. Matrices are row-major with
// W[rows][cols]; batches are row-major [batch][features]. Every OpenMP kernel
// has a serial twin with the same per-element summation order, so both paths
// produce identical bits for any thread count.
namespace bsann::kernels {

struct DenseDims {
  std::size_t rows;   // output features
  std::size_t cols;   // input features
  std::size_t batch;
};

// Y[b][i] = bias[i] + sum_j W[i][j] X[b][j]
void dense_forward(std::span<const double> W, std::span<const double> bias,
                   std::span<const double> X, std::span<double> Y, DenseDims d);
void dense_forward_serial(std::span<const double> W, std::span<const double> bias,
                          std::span<const double> X, std::span<double> Y, DenseDims d);

// dX[b][j] = sum_i W[i][j] dY[b][i]
void dense_backward_input(std::span<const double> W, std::span<const double> dY,
                          std::span<double> dX, DenseDims d);
void dense_backward_input_serial(std::span<const double> W, std::span<const double> dY,
                                 std::span<double> dX, DenseDims d);

// dW[i][j] = sum_b dY[b][i] X[b][j], dbias[i] = sum_b dY[b][i] (overwrites)
void dense_backward_weights(std::span<const double> dY, std::span<const double> X,
                            std::span<double> dW, std::span<double> dbias, DenseDims d);
void dense_backward_weights_serial(std::span<const double> dY, std::span<const double> X,
                                   std::span<double> dW, std::span<double> dbias, DenseDims d);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update at step t (1-based) over flat arrays.
void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, long t, const AdamHyper& h);
void adam_update_serial(std::span<double> theta, std::span<const double> grad,
                        std::span<double> m, std::span<double> v, long t, const AdamHyper& h);

// Worker count used by the OpenMP kernels; 0 leaves the runtime default.
void set_num_threads(int n);
int num_threads();

}  // namespace bsann::kernels
