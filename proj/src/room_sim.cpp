#include "bsann/room_sim.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <limits>

namespace bsann::room {

void RoomSpec::validate() const {
  if (!(dims_m.x > 0.0 && dims_m.y > 0.0 && dims_m.z > 0.0))
    throw GeometryError("room dimensions must be positive");
  if (rt60_s < 0.0) throw ConfigError("rt60 must be nonnegative");
  if (max_image_order < 0) throw ConfigError("max_image_order must be nonnegative");
  if (!(speed_of_sound_mps > 0.0)) throw ConfigError("speed of sound must be positive");
}

bool RoomSpec::contains(const Vec3& p) const {
  return p.x > 0.0 && p.x < dims_m.x && p.y > 0.0 && p.y < dims_m.y && p.z > 0.0 &&
         p.z < dims_m.z;
}

double RoomSpec::reflection_coefficient() const {
  if (rt60_s <= 0.0) return 0.0;
  const double volume = dims_m.x * dims_m.y * dims_m.z;
  const double surface =
      2.0 * (dims_m.x * dims_m.y + dims_m.x * dims_m.z + dims_m.y * dims_m.z);
  const double absorption = 0.161 * volume / (surface * rt60_s);
  if (absorption >= 1.0) return 0.0;
  return std::sqrt(1.0 - absorption);
}

void add_fractional_delay(std::vector<double>& out, double delay_samples, double amp) {
  constexpr int half = kFracDelayTaps / 2;
  const long base = static_cast<long>(std::floor(delay_samples));
  std::array<double, kFracDelayTaps> taps{};
  double sum = 0.0;
  for (int i = 0; i < kFracDelayTaps; ++i) {
    const double x = static_cast<double>(base - half + 1 + i) - delay_samples;
    const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
    const double win = std::abs(x) < half ? 0.5 * (1.0 + std::cos(kPi * x / half)) : 0.0;
    taps[i] = sinc * win;
    sum += taps[i];
  }
  for (int i = 0; i < kFracDelayTaps; ++i) {
    const long n = base - half + 1 + i;
    if (n >= 0 && n < static_cast<long>(out.size())) out[n] += amp * taps[i] / sum;
  }
}

std::vector<ImageArrival> enumerate_images(const RoomSpec& room, const Vec3& src, const Vec3& mic) {
  room.validate();
  std::vector<ImageArrival> images;
  const double beta = room.reflection_coefficient();
  const int order_cap = room.rt60_s > 0.0 ? room.max_image_order : 0;
  const int K = order_cap / 2 + 1;
  const std::array<double, 3> L{room.dims_m.x, room.dims_m.y, room.dims_m.z};
  const std::array<double, 3> s{src.x, src.y, src.z};
  const std::array<double, 3> r{mic.x, mic.y, mic.z};

  for (int nx = -K; nx <= K; ++nx)
    for (int qx = 0; qx <= 1; ++qx)
      for (int ny = -K; ny <= K; ++ny)
        for (int qy = 0; qy <= 1; ++qy)
          for (int nz = -K; nz <= K; ++nz)
            for (int qz = 0; qz <= 1; ++qz) {
              const std::array<int, 3> n{nx, ny, nz};
              const std::array<int, 3> q{qx, qy, qz};
              int order = 0;
              double d2 = 0.0;
              for (int a = 0; a < 3; ++a) {
                order += std::abs(n[a] - q[a]) + std::abs(n[a]);
                const double img = (1 - 2 * q[a]) * s[a] + 2.0 * n[a] * L[a];
                d2 += (img - r[a]) * (img - r[a]);
              }
              if (order > order_cap) continue;
              const double d = std::sqrt(d2);
              images.push_back({d / room.speed_of_sound_mps,
                                std::pow(beta, order) / (4.0 * kPi * d), order});
            }
  std::sort(images.begin(), images.end(), [](const ImageArrival& a, const ImageArrival& b) {
    return a.delay_s < b.delay_s;
  });
  return images;
}

Rir simulate_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic, const FrequencyGrid& grid) {
  room.validate();
  if (!room.contains(src) || !room.contains(mic))
    throw GeometryError("source and microphone must lie strictly inside the room");
  if (distance(src, mic) <= 0.0) throw GeometryError("source and microphone coincide");

  Rir out;
  out.samples.assign(grid.fft_size(), 0.0);
  const double fs = grid.sample_rate_hz();
  for (const ImageArrival& img : enumerate_images(room, src, mic)) {
    if (img.amplitude == 0.0) continue;
    const double t = img.delay_s * fs;
    if (t + kFracDelayTaps / 2 >= grid.fft_size()) out.truncated = true;
    if (t - kFracDelayTaps / 2 >= grid.fft_size()) continue;
    add_fractional_delay(out.samples, t, img.amplitude);
  }
  if (room.rt60_s * fs > grid.fft_size() && room.reflection_coefficient() > 0.0)
    out.truncated = true;
  return out;
}

RirPair split_direct_reflected(const std::vector<double>& rir, const Vec3& src, const Vec3& mic,
                               const RoomSpec& room, const FrequencyGrid& grid, double guard_ms) {
  if (rir.size() != static_cast<std::size_t>(grid.fft_size()))
    throw ConfigError("rir length must equal fft_size");
  const double fs = grid.sample_rate_hz();
  const double t_los = distance(src, mic) / room.speed_of_sound_mps * fs;
  const double guard = guard_ms * 1e-3 * fs;

  RirPair pair;
  pair.h_dir.assign(rir.size(), 0.0);
  pair.h_refl.assign(rir.size(), 0.0);
  for (std::size_t n = 0; n < rir.size(); ++n) {
    if (std::abs(static_cast<double>(n) - t_los) <= guard)
      pair.h_dir[n] = rir[n];
    else
      pair.h_refl[n] = rir[n];
  }

  if (room.rt60_s > 0.0 && room.reflection_coefficient() > 0.0) {
    double first_refl = std::numeric_limits<double>::infinity();
    for (const ImageArrival& img : enumerate_images(room, src, mic))
      if (img.order > 0) first_refl = std::min(first_refl, img.delay_s * fs);
    if (first_refl - kFracDelayTaps / 2 <= t_los + guard) pair.overlap_warning = true;
  }
  return pair;
}

}  // namespace bsann::room
