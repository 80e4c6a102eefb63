#include "bsann/targets.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bsann::targets {

std::vector<double> third_octave_smooth(std::span<const double> mag, const FrequencyGrid& grid) {
  if (mag.size() != grid.num_bins()) throw ConfigError("curve length does not match the grid");
  const double edge = std::pow(2.0, 1.0 / 6.0);
  const double df = grid.sample_rate_hz() / grid.fft_size();
  std::vector<double> prefix(mag.size() + 1, 0.0);
  for (std::size_t i = 0; i < mag.size(); ++i) prefix[i + 1] = prefix[i] + mag[i];
  std::vector<double> out(mag.size());
  out[0] = mag[0];
  const long last = static_cast<long>(mag.size()) - 1;
  for (std::size_t n = 1; n < mag.size(); ++n) {
    const double f = grid.freq(n);
    const long lo = std::max(1L, static_cast<long>(std::ceil(f / edge / df - 1e-9)));
    const long hi = std::min(last, static_cast<long>(std::floor(f * edge / df + 1e-9)));
    out[n] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::array<std::vector<int>, acoustic::kNumEars> nearest_band_drivers(
    const std::vector<acoustic::DriverSpec>& drivers,
    const std::array<acoustic::ListenerGeometry, 2>& listeners) {
  std::array<std::vector<int>, acoustic::kNumEars> out;
  for (int e = 0; e < acoustic::kNumEars; ++e) {
    const Vec3 ear = listeners[e / 2].ear_reference(e % 2 == 0 ? acoustic::Side::left : acoustic::Side::right);
    for (auto band : {acoustic::DriverBand::woofer, acoustic::DriverBand::tweeter}) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < drivers.size(); ++l) {
        if (drivers[l].band != band) continue;
        const double d = distance(drivers[l].position_m, ear);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(l);
        }
      }
      if (best >= 0) out[e].push_back(best);
    }
    if (out[e].empty()) throw ConfigError("scene has no drivers");
  }
  return out;
}

losses::TargetSpec build_bright_targets(
    const acoustic::AtfTensor& direct,
    const std::array<std::vector<int>, acoustic::kNumEars>& drivers_per_ear) {
  const FrequencyGrid& grid = direct.grid();
  losses::TargetSpec t(direct.points(), direct.bins());
  const std::size_t ref = grid.nearest_bin(1000.0);
  std::vector<double> curve(grid.num_bins());
  for (int e = 0; e < acoustic::kNumEars; ++e)
    for (int m = 0; m < direct.points(); ++m) {
      std::fill(curve.begin(), curve.end(), 0.0);
      for (int l : drivers_per_ear[e])
        for (int n = 0; n < direct.bins(); ++n) curve[n] += std::abs(direct.at(e, m, l, n));
      const std::vector<double> smooth = third_octave_smooth(curve, grid);
      if (!(smooth[ref] > 0.0)) {
        std::ostringstream msg;
        msg << "target reference level is zero at ear " << e << ", point " << m;
        throw DegeneratePlantError(msg.str());
      }
      for (int n = 0; n < direct.bins(); ++n) t.at(e, m, n) = smooth[n] / smooth[ref];
    }
  return t;
}

losses::XtcTargets capture_xtc_targets(const acoustic::AtfTensor& atf, const nn::FilterBank& teacher,
                                       double epsilon) {
  losses::XtcTargets t(atf.points(), atf.bins());
  for (int k = 0; k < 2; ++k) {
    const losses::EarMatrix T = losses::effective_ear_matrix(atf, teacher, k);
    for (int d = 0; d < 2; ++d)
      for (int m = 0; m < atf.points(); ++m)
        for (int n = 0; n < atf.bins(); ++n) t.at(k, d, m, n) = std::max(std::abs(T.at(m, n, d, d)), epsilon);
  }
  return t;
}

}  // namespace bsann::targets
