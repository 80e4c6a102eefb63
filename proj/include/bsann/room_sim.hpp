#pragma once

#include <array>
#include <vector>

#include "bsann/core.hpp"

namespace bsann::room {

struct RoomSpec {
  Vec3 dims_m{5.0, 4.0, 3.0};
  double rt60_s = 0.0;  // 0 = anechoic, reflections omitted
  int max_image_order = 2;
  double speed_of_sound_mps = kDefaultSpeedOfSound;

  void validate() const;
  bool contains(const Vec3& p) const;
  // Pressure reflection coefficient shared by all six walls (Sabine).
  double reflection_coefficient() const;
};

struct Rir {
  std::vector<double> samples;  // length fft_size
  bool truncated = false;       // some image arrivals fell past the buffer
};

struct RirPair {
  std::vector<double> h_dir;
  std::vector<double> h_refl;
  bool overlap_warning = false;  // a reflection arrives inside the gate
};

// One mirror image: its arrival delay (s) and amplitude.
struct ImageArrival {
  double delay_s;
  double amplitude;
  int order;
};

inline constexpr int kFracDelayTaps = 16;
inline constexpr double kDefaultGuardMs = 0.5;

std::vector<ImageArrival> enumerate_images(const RoomSpec& room, const Vec3& src, const Vec3& mic);

Rir simulate_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic, const FrequencyGrid& grid);

RirPair split_direct_reflected(const std::vector<double>& rir, const Vec3& src, const Vec3& mic,
                               const RoomSpec& room, const FrequencyGrid& grid,
                               double guard_ms = kDefaultGuardMs);

// Adds amp * delta(t - delay_samples) rendered with a 16-tap Hann-windowed
// sinc normalized to unit DC gain. Taps outside [0, out.size()) are dropped.
void add_fractional_delay(std::vector<double>& out, double delay_samples, double amp);

}  // namespace bsann::room
