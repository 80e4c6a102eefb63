#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsann {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultSpeedOfSound = 343.0;

// Error taxonomy. Every module throws one of these; the CLI maps them to
// exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class GeometryError : public Error {
 public:
  using Error::Error;
};
class InvalidSpectrumError : public Error {
 public:
  using Error::Error;
};
class EmptyBandError : public Error {
 public:
  using Error::Error;
};
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double tail)
      : Error(what), tail_estimate(tail) {}
  double tail_estimate;
};
class NonFiniteError : public Error {
 public:
  using Error::Error;
};
class DegeneratePlantError : public Error {
 public:
  using Error::Error;
};
class FormatError : public Error {
 public:
  using Error::Error;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3&) const = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n};
  }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Discrete one-sided frequency grid: bins n = 0..fft_size/2 at n*fs/fft_size.
class FrequencyGrid {
 public:
  FrequencyGrid() : FrequencyGrid(48000.0, 512) {}
  FrequencyGrid(double sample_rate_hz, int fft_size, double band_lo_hz = 100.0,
                double band_hi_hz = 20000.0);

  double sample_rate_hz() const { return sample_rate_hz_; }
  int fft_size() const { return fft_size_; }
  std::size_t num_bins() const { return bin_freqs_hz_.size(); }
  double band_lo_hz() const { return band_lo_hz_; }
  double band_hi_hz() const { return band_hi_hz_; }
  const std::vector<double>& bin_freqs_hz() const { return bin_freqs_hz_; }
  double freq(std::size_t n) const { return bin_freqs_hz_[n]; }
  double wavenumber(std::size_t n, double c = kDefaultSpeedOfSound) const {
    return 2.0 * kPi * bin_freqs_hz_[n] / c;
  }
  // Index of the bin closest to f_hz.
  std::size_t nearest_bin(double f_hz) const;
  // Bins with band_lo <= f <= band_hi; throws EmptyBandError when none.
  std::vector<int> band_bins() const;

  bool operator==(const FrequencyGrid& o) const {
    return sample_rate_hz_ == o.sample_rate_hz_ && fft_size_ == o.fft_size_ &&
           band_lo_hz_ == o.band_lo_hz_ && band_hi_hz_ == o.band_hi_hz_;
  }

 private:
  double sample_rate_hz_;
  int fft_size_;
  double band_lo_hz_;
  double band_hi_hz_;
  std::vector<double> bin_freqs_hz_;
};

// One-sided spectrum of a real signal (fft_size/2 + 1 bins).
using ComplexSpectrum = std::vector<cplx>;

ComplexSpectrum forward_real_fft(std::span<const double> signal, int fft_size);

// Throws InvalidSpectrumError if the DC or Nyquist bin carries an imaginary
// part larger than the tolerance (relative to the spectrum's peak).
std::vector<double> inverse_real_fft(std::span<const cplx> spectrum, int fft_size,
                                     double imag_tolerance = 1e-9);

// Same transform, but silently drops the imaginary parts at DC and Nyquist
// (projection onto realizable spectra). Used inside losses and rendering.
std::vector<double> inverse_real_fft_projected(std::span<const cplx> spectrum,
                                               int fft_size);

// Trapezoidal weights in ln f over [band_lo, band_hi]; the segments between
// the band edges and the outermost in-band bins are held constant. Weights
// sum to 1 and vanish outside the band.
std::vector<double> log_frequency_weights(std::span<const double> freqs_hz,
                                          double band_lo_hz, double band_hi_hz);
std::vector<double> log_frequency_weights(const FrequencyGrid& grid);

double log_weighted_mean(std::span<const double> curve, std::span<const double> weights);

}  // namespace bsann
