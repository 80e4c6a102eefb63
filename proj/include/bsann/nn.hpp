#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bsann/core.hpp"
#include "bsann/kernels.hpp"

namespace bsann::nn {

inline constexpr int kPrograms = 4;  // 1L, 1R, 2L, 2R
inline constexpr int kPoseDim = 4;

// Head positions (x, y) of both listeners in the array frame.
struct PoseInput {
  std::array<double, 2> listener1_xy_m{};
  std::array<double, 2> listener2_xy_m{};

  std::array<double, kPoseDim> as_vector() const {
    return {listener1_xy_m[0], listener1_xy_m[1], listener2_xy_m[0], listener2_xy_m[1]};
  }
  static PoseInput from_vector(const std::array<double, kPoseDim>& v) {
    return {{v[0], v[1]}, {v[2], v[3]}};
  }
  bool operator==(const PoseInput&) const = default;
};

// Axis-aligned box of admissible poses; maps it onto [-1, 1]^4.
struct PoseRegion {
  std::array<double, kPoseDim> center{-0.5, 1.0, 0.5, 1.0};
  std::array<double, kPoseDim> half_range{0.25, 0.25, 0.25, 0.25};

  std::array<double, kPoseDim> normalize(const PoseInput& p) const;
  bool contains(const PoseInput& p) const;
};

// Complex filters g[loudspeaker][program][bin].
class FilterBank {
 public:
  FilterBank() = default;
  FilterBank(int speakers, FrequencyGrid grid);

  int speakers() const { return speakers_; }
  int bins() const { return static_cast<int>(grid_.num_bins()); }
  const FrequencyGrid& grid() const { return grid_; }

  std::size_t index(int l, int p, int n) const {
    return (static_cast<std::size_t>(l) * kPrograms + p) * bins() + n;
  }
  cplx& at(int l, int p, int n) { return values_[index(l, p, n)]; }
  const cplx& at(int l, int p, int n) const { return values_[index(l, p, n)]; }
  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

  void fill(cplx v);
  FilterBank& operator*=(cplx s);
  bool all_finite() const;

 private:
  int speakers_ = 0;
  FrequencyGrid grid_;
  std::vector<cplx> values_;
};

struct NetworkShape {
  int num_bands = 64;
  double sigma = 3.0;
  int hidden = 256;
  int layers = 3;
  int speakers = 8;

  bool operator==(const NetworkShape&) const = default;
};

struct DenseLayer {
  std::size_t w_offset;
  std::size_t b_offset;
  int rows;
  int cols;
};

// Frozen Fourier matrix plus every trainable weight in one flat vector
// (layer 0 .. layers-1, then the head).
struct NetworkParams {
  NetworkShape shape;
  PoseRegion region;
  FrequencyGrid grid;
  std::uint64_t seed = 0;
  std::vector<double> fourier;  // [num_bands][kPoseDim]
  std::vector<double> theta;

  int output_dim() const { return 2 * shape.speakers * kPrograms * static_cast<int>(grid.num_bins()); }
  std::vector<DenseLayer> layout() const;
  void validate() const;
};

std::size_t parameter_count(const NetworkShape& shape, const FrequencyGrid& grid);

// Glorot-uniform weights, zero biases, Gaussian Fourier matrix with std sigma.
NetworkParams init_network(const NetworkShape& shape, const PoseRegion& region,
                           const FrequencyGrid& grid, std::uint64_t seed);

// [sin(2 pi B s), cos(2 pi B s)] for a normalized pose s.
std::vector<double> fourier_encode(std::span<const double> s, std::span<const double> fourier,
                                   int num_bands);
std::vector<double> fourier_encode(const NetworkParams& params, const PoseInput& pose);

// Activations kept for the backward pass.
struct ForwardCache {
  std::size_t batch = 0;
  std::vector<std::vector<double>> activations;  // [0] = encoding, then each hidden layer
};

// Head output reshaped into complex filters. Imaginary parts at DC and
// Nyquist are forced to zero so every bank is a real-signal spectrum.
std::vector<FilterBank> forward_batch(const NetworkParams& params, std::span<const PoseInput> poses,
                                      ForwardCache* cache = nullptr);
FilterBank forward(const NetworkParams& params, const PoseInput& pose);

// Gradient of the summed per-pose losses given dL/dRe + i dL/dIm per filter
// entry. Returns a vector shaped like params.theta.
std::vector<double> backward_batch(const NetworkParams& params, const ForwardCache& cache,
                                   std::span<const FilterBank> filter_grads);

// Loss callback: returns the loss and accumulates its filter gradient.
using FilterLoss = std::function<double(const FilterBank& g, FilterBank& grad)>;

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};
LossAndGrad backward(const NetworkParams& params, const PoseInput& pose, const FilterLoss& loss);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n), std::vector<double>(n), 0}; }
};

void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const kernels::AdamHyper& hyper);

// "BSNN" magic, u64 header length, JSON header, float32 little-endian blob
// (Fourier matrix then theta). `extra_json` is stored verbatim under "extra".
void save_checkpoint(const std::string& path, const NetworkParams& params,
                     const std::string& extra_json = "{}");
NetworkParams load_checkpoint(const std::string& path, std::string* extra_json = nullptr);

// Parameters rounded through float32, as a checkpoint stores them.
NetworkParams round_to_float(const NetworkParams& params);

}  // namespace bsann::nn
