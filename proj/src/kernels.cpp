#include "bsann/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace bsann::kernels {
namespace {

constexpr std::size_t kColBlock = 256;

inline void forward_row(const double* w, double bias, const double* X, double* Y, std::size_t i,
                        const DenseDims& d) {
  for (std::size_t b = 0; b < d.batch; ++b) {
    const double* x = X + b * d.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < d.cols; ++j) acc += w[j] * x[j];
    Y[b * d.rows + i] = bias + acc;
  }
}

inline void backward_input_block(const double* W, const double* dY, double* dX, std::size_t j0,
                                 std::size_t j1, const DenseDims& d) {
  for (std::size_t b = 0; b < d.batch; ++b) std::fill(dX + b * d.cols + j0, dX + b * d.cols + j1, 0.0);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const double* w = W + i * d.cols;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const double g = dY[b * d.rows + i];
      double* out = dX + b * d.cols;
      for (std::size_t j = j0; j < j1; ++j) out[j] += w[j] * g;
    }
  }
}

inline void weights_row(const double* dY, const double* X, double* dW, double* db, std::size_t i,
                        const DenseDims& d) {
  double* w = dW + i * d.cols;
  std::fill(w, w + d.cols, 0.0);
  double acc = 0.0;
  for (std::size_t b = 0; b < d.batch; ++b) {
    const double g = dY[b * d.rows + i];
    acc += g;
    const double* x = X + b * d.cols;
    for (std::size_t j = 0; j < d.cols; ++j) w[j] += g * x[j];
  }
  db[i] = acc;
}

inline void adam_one(double& theta, double g, double& m, double& v, double c1, double c2,
                     const AdamHyper& h) {
  m = h.beta1 * m + (1.0 - h.beta1) * g;
  v = h.beta2 * v + (1.0 - h.beta2) * g * g;
  theta -= h.lr * (m / c1) / (std::sqrt(v / c2) + h.eps);
}

}  // namespace

void dense_forward(std::span<const double> W, std::span<const double> bias,
                   std::span<const double> X, std::span<double> Y, DenseDims d) {
  const long rows = static_cast<long>(d.rows);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i)
    forward_row(W.data() + i * d.cols, bias[i], X.data(), Y.data(), static_cast<std::size_t>(i), d);
}

void dense_forward_serial(std::span<const double> W, std::span<const double> bias,
                          std::span<const double> X, std::span<double> Y, DenseDims d) {
  for (std::size_t i = 0; i < d.rows; ++i)
    forward_row(W.data() + i * d.cols, bias[i], X.data(), Y.data(), i, d);
}

void dense_backward_input(std::span<const double> W, std::span<const double> dY,
                          std::span<double> dX, DenseDims d) {
  const long blocks = static_cast<long>((d.cols + kColBlock - 1) / kColBlock);
#pragma omp parallel for schedule(static)
  for (long blk = 0; blk < blocks; ++blk) {
    const std::size_t j0 = static_cast<std::size_t>(blk) * kColBlock;
    backward_input_block(W.data(), dY.data(), dX.data(), j0, std::min(d.cols, j0 + kColBlock), d);
  }
}

void dense_backward_input_serial(std::span<const double> W, std::span<const double> dY,
                                 std::span<double> dX, DenseDims d) {
  backward_input_block(W.data(), dY.data(), dX.data(), 0, d.cols, d);
}

void dense_backward_weights(std::span<const double> dY, std::span<const double> X,
                            std::span<double> dW, std::span<double> dbias, DenseDims d) {
  const long rows = static_cast<long>(d.rows);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i)
    weights_row(dY.data(), X.data(), dW.data(), dbias.data(), static_cast<std::size_t>(i), d);
}

void dense_backward_weights_serial(std::span<const double> dY, std::span<const double> X,
                                   std::span<double> dW, std::span<double> dbias, DenseDims d) {
  for (std::size_t i = 0; i < d.rows; ++i) weights_row(dY.data(), X.data(), dW.data(), dbias.data(), i, d);
}

void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, long t, const AdamHyper& h) {
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  const long n = static_cast<long>(theta.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) adam_one(theta[i], grad[i], m[i], v[i], c1, c2, h);
}

void adam_update_serial(std::span<double> theta, std::span<const double> grad,
                        std::span<double> m, std::span<double> v, long t, const AdamHyper& h) {
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) adam_one(theta[i], grad[i], m[i], v[i], c1, c2, h);
}

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

}  // namespace bsann::kernels
