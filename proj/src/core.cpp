#include "bsann/core.hpp"

#include <algorithm>
#include <numeric>

namespace bsann {

FrequencyGrid::FrequencyGrid(double sample_rate_hz, int fft_size, double band_lo_hz,
                             double band_hi_hz)
    : sample_rate_hz_(sample_rate_hz),
      fft_size_(fft_size),
      band_lo_hz_(band_lo_hz),
      band_hi_hz_(band_hi_hz) {
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
  if (fft_size <= 0 || fft_size % 2 != 0)
    throw ConfigError("fft_size must be a positive even integer, got " +
                      std::to_string(fft_size));
  if (!(band_lo_hz < band_hi_hz) || band_hi_hz > sample_rate_hz / 2.0 || band_lo_hz < 0.0)
    throw ConfigError("band must satisfy 0 <= lo < hi <= fs/2");
  const int bins = fft_size / 2 + 1;
  bin_freqs_hz_.resize(bins);
  for (int n = 0; n < bins; ++n)
    bin_freqs_hz_[n] = static_cast<double>(n) * sample_rate_hz / fft_size;
}

std::size_t FrequencyGrid::nearest_bin(double f_hz) const {
  const double idx = std::round(f_hz * fft_size_ / sample_rate_hz_);
  return static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(num_bins() - 1)));
}

std::vector<int> FrequencyGrid::band_bins() const {
  std::vector<int> out;
  for (std::size_t n = 0; n < num_bins(); ++n)
    if (bin_freqs_hz_[n] >= band_lo_hz_ && bin_freqs_hz_[n] <= band_hi_hz_) out.push_back(static_cast<int>(n));
  if (out.empty()) throw EmptyBandError("frequency band contains no bins");
  return out;
}

std::vector<double> log_frequency_weights(std::span<const double> freqs_hz,
                                          double band_lo_hz, double band_hi_hz) {
  if (!(band_lo_hz > 0.0) || !(band_lo_hz < band_hi_hz))
    throw ConfigError("log weights need 0 < band_lo < band_hi");
  std::vector<std::size_t> in_band;
  for (std::size_t i = 0; i < freqs_hz.size(); ++i)
    if (freqs_hz[i] >= band_lo_hz && freqs_hz[i] <= band_hi_hz) in_band.push_back(i);
  if (in_band.empty()) throw EmptyBandError("frequency band contains no bins");

  std::vector<double> w(freqs_hz.size(), 0.0);
  const double total = std::log(band_hi_hz / band_lo_hz);
  if (in_band.size() == 1) {
    w[in_band.front()] = 1.0;
    return w;
  }
  for (std::size_t j = 0; j < in_band.size(); ++j) {
    const double lf = std::log(freqs_hz[in_band[j]]);
    double span = 0.0;
    if (j == 0)
      span += lf - std::log(band_lo_hz);
    else
      span += 0.5 * (lf - std::log(freqs_hz[in_band[j - 1]]));
    if (j + 1 == in_band.size())
      span += std::log(band_hi_hz) - lf;
    else
      span += 0.5 * (std::log(freqs_hz[in_band[j + 1]]) - lf);
    w[in_band[j]] = span / total;
  }
  return w;
}

std::vector<double> log_frequency_weights(const FrequencyGrid& grid) {
  return log_frequency_weights(grid.bin_freqs_hz(), grid.band_lo_hz(), grid.band_hi_hz());
}

double log_weighted_mean(std::span<const double> curve, std::span<const double> weights) {
  if (curve.size() != weights.size()) throw ConfigError("curve/weight length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (weights[i] != 0.0) acc += weights[i] * curve[i];
  return acc;
}

}  // namespace bsann
