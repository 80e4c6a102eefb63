#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

#include "bsann/core.hpp"

namespace bsann {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are created once per size under a lock and never destroyed.
struct PlanPair {
  fftw_plan r2c;
  fftw_plan c2r;
};

const PlanPair& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> re(n);
  std::vector<cplx> sp(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.r2c = fftw_plan_dft_r2c_1d(n, re.data(), reinterpret_cast<fftw_complex*>(sp.data()), flags);
  p.c2r = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(sp.data()), re.data(), flags);
  return cache.emplace(n, p).first->second;
}

void check_size(int fft_size) {
  if (fft_size <= 0 || fft_size % 2 != 0)
    throw ConfigError("fft_size must be a positive even integer, got " +
                      std::to_string(fft_size));
}

}  // namespace

ComplexSpectrum forward_real_fft(std::span<const double> signal, int fft_size) {
  check_size(fft_size);
  if (signal.size() > static_cast<std::size_t>(fft_size))
    throw ConfigError("signal longer than fft_size");
  std::vector<double> buf(fft_size, 0.0);
  std::copy(signal.begin(), signal.end(), buf.begin());
  ComplexSpectrum out(fft_size / 2 + 1);
  fftw_execute_dft_r2c(plans_for(fft_size).r2c, buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> inverse_real_fft_projected(std::span<const cplx> spectrum, int fft_size) {
  check_size(fft_size);
  if (spectrum.size() != static_cast<std::size_t>(fft_size / 2 + 1))
    throw ConfigError("spectrum length must be fft_size/2+1");
  std::vector<cplx> buf(spectrum.begin(), spectrum.end());
  buf.front() = buf.front().real();
  buf.back() = buf.back().real();
  std::vector<double> out(fft_size);
  fftw_execute_dft_c2r(plans_for(fft_size).c2r, reinterpret_cast<fftw_complex*>(buf.data()),
                       out.data());
  const double scale = 1.0 / fft_size;
  for (double& v : out) v *= scale;
  return out;
}

std::vector<double> inverse_real_fft(std::span<const cplx> spectrum, int fft_size,
                                     double imag_tolerance) {
  check_size(fft_size);
  if (spectrum.size() != static_cast<std::size_t>(fft_size / 2 + 1))
    throw ConfigError("spectrum length must be fft_size/2+1");
  double peak = 0.0;
  for (const cplx& v : spectrum) peak = std::max(peak, std::abs(v));
  const double tol = imag_tolerance * std::max(1.0, peak);
  if (std::abs(spectrum.front().imag()) > tol || std::abs(spectrum.back().imag()) > tol)
    throw InvalidSpectrumError("DC/Nyquist bins of a real signal must be real");
  return inverse_real_fft_projected(spectrum, fft_size);
}

}  // namespace bsann
