#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "bsann/kernels.hpp"

using namespace bsann::kernels;

namespace {

std::vector<double> randn(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

}  // namespace

TEST_CASE("parallel kernels match their serial twins bit for bit", "[kernels]") {
  const DenseDims d{37, 300, 5};
  const auto W = randn(d.rows * d.cols, 1);
  const auto bias = randn(d.rows, 2);
  const auto X = randn(d.batch * d.cols, 3);
  const auto dY = randn(d.batch * d.rows, 4);
  const int saved = num_threads();
  for (int threads : {1, 2, 3}) {
    set_num_threads(threads);
    SECTION("forward, " + std::to_string(threads) + " threads") {
      std::vector<double> a(d.batch * d.rows), b(d.batch * d.rows);
      dense_forward(W, bias, X, a, d);
      dense_forward_serial(W, bias, X, b, d);
      REQUIRE(a == b);
    }
    SECTION("backward input, " + std::to_string(threads) + " threads") {
      std::vector<double> a(d.batch * d.cols), b(d.batch * d.cols);
      dense_backward_input(W, dY, a, d);
      dense_backward_input_serial(W, dY, b, d);
      REQUIRE(a == b);
    }
    SECTION("backward weights, " + std::to_string(threads) + " threads") {
      std::vector<double> a(d.rows * d.cols, 9.0), b(d.rows * d.cols), da(d.rows, 9.0), db(d.rows);
      dense_backward_weights(dY, X, a, da, d);
      dense_backward_weights_serial(dY, X, b, db, d);
      REQUIRE(a == b);
      REQUIRE(da == db);
    }
    SECTION("adam, " + std::to_string(threads) + " threads") {
      auto ta = randn(1000, 5), tb = ta;
      const auto g = randn(1000, 6);
      std::vector<double> ma(1000), va(1000), mb(1000), vb(1000);
      for (long t = 1; t <= 3; ++t) {
        adam_update(ta, g, ma, va, t, {});
        adam_update_serial(tb, g, mb, vb, t, {});
      }
      REQUIRE(ta == tb);
    }
  }
  set_num_threads(saved);
}

TEST_CASE("dense kernels agree with naive loops", "[kernels]") {
  const DenseDims d{3, 4, 2};
  const auto W = randn(12, 7), bias = randn(3, 8), X = randn(8, 9), dY = randn(6, 10);
  std::vector<double> Y(6), dX(8), dW(12), db(3);
  dense_forward_serial(W, bias, X, Y, d);
  dense_backward_input_serial(W, dY, dX, d);
  dense_backward_weights_serial(dY, X, dW, db, d);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 3; ++i) {
      double y = bias[i];
      for (std::size_t j = 0; j < 4; ++j) y += W[i * 4 + j] * X[b * 4 + j];
      REQUIRE(Y[b * 3 + i] == Catch::Approx(y).epsilon(1e-14));
    }
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t j = 0; j < 4; ++j) {
      double x = 0.0;
      for (std::size_t i = 0; i < 3; ++i) x += W[i * 4 + j] * dY[b * 3 + i];
      REQUIRE(dX[b * 4 + j] == Catch::Approx(x).epsilon(1e-14));
    }
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(db[i] == Catch::Approx(dY[i] + dY[3 + i]).epsilon(1e-14));
    for (std::size_t j = 0; j < 4; ++j)
      REQUIRE(dW[i * 4 + j] == Catch::Approx(dY[i] * X[j] + dY[3 + i] * X[4 + j]).epsilon(1e-14));
  }
}
