#pragma once

#include <array>
#include <string>
#include <vector>

#include "bsann/core.hpp"
#include "bsann/room_sim.hpp"

namespace bsann::acoustic {

enum class DriverBand { woofer, tweeter };

std::string to_string(DriverBand b);
DriverBand driver_band_from_string(const std::string& s);

struct DriverSpec {
  Vec3 position_m;
  Vec3 facing_unit{0.0, 1.0, 0.0};
  double piston_radius_m = 0.04;
  DriverBand band = DriverBand::woofer;
  ComplexSpectrum anechoic_response;  // A_l on the grid; empty means flat

  void validate() const;
};

enum class Side { left = 0, right = 1 };

// One listener's head. Ears sit on the lateral axis (up x facing); the
// control points of each ear surround its reference point.
struct ListenerGeometry {
  Vec3 head_center_m;
  double head_radius_m = 0.0875;
  double ear_offset_m = 0.0;
  Vec3 facing_unit{0.0, -1.0, 0.0};
  std::array<std::vector<Vec3>, 2> control_points;  // [left, right]

  // Unit vector pointing out of the left ear.
  Vec3 left_unit() const;
  Vec3 ear_reference(Side side) const;
  void validate() const;
};

inline constexpr int kNumEars = 4;      // L1, R1, L2, R2
inline constexpr int kNumPrograms = 4;  // 1L, 1R, 2L, 2R

// H[ear][point][loudspeaker][bin], contiguous in that order.
class AtfTensor {
 public:
  AtfTensor() = default;
  AtfTensor(int points, int speakers, FrequencyGrid grid);

  int ears() const { return kNumEars; }
  int points() const { return points_; }
  int speakers() const { return speakers_; }
  int bins() const { return static_cast<int>(grid_.num_bins()); }
  const FrequencyGrid& grid() const { return grid_; }

  std::size_t index(int e, int m, int l, int n) const {
    return ((static_cast<std::size_t>(e) * points_ + m) * speakers_ + l) * bins() + n;
  }
  cplx& at(int e, int m, int l, int n) { return values_[index(e, m, l, n)]; }
  const cplx& at(int e, int m, int l, int n) const { return values_[index(e, m, l, n)]; }
  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

  bool all_finite() const;

 private:
  int points_ = 0;
  int speakers_ = 0;
  FrequencyGrid grid_;
  std::vector<cplx> values_;
};

struct HrtfConfig {
  int series_order = 100;
  double convergence_tol = 1e-8;
  double speed_of_sound_mps = kDefaultSpeedOfSound;
};

enum class AtfMode { point_source, physically_informed };

std::string to_string(AtfMode m);
AtfMode atf_mode_from_string(const std::string& s);

// Normalized rigid-sphere HRTF: total field of a point source at src_pos
// scattered by a rigid sphere, divided by the free-field Green's function.
// Returned in the e^{+j w t} convention used by forward_real_fft.
cplx rigid_sphere_hrtf(const Vec3& src_pos, const Vec3& ctrl_pos, const Vec3& head_center,
                       double head_radius, double k, const HrtfConfig& cfg);

// Angle between the driver axis and the driver -> point direction.
double off_axis_angle(const DriverSpec& driver, const Vec3& point);

ComplexSpectrum synth_driver_response(DriverBand band, const FrequencyGrid& grid);

// Loads a 32-bit float mono WAV impulse response and transforms it.
ComplexSpectrum load_driver_response_wav(const std::string& path, const FrequencyGrid& grid);

// Collects control points of both listeners in ear order L1, R1, L2, R2.
std::array<std::vector<Vec3>, kNumEars> ear_points(
    const std::array<ListenerGeometry, 2>& listeners);

// Same layout with the ear reference point as the single control point.
std::array<std::vector<Vec3>, kNumEars> ear_reference_points(
    const std::array<ListenerGeometry, 2>& listeners);

// RIR pairs indexed [(e * M + m) * L + l].
std::vector<room::RirPair> simulate_rir_pairs(const room::RoomSpec& room,
                                              const std::vector<DriverSpec>& drivers,
                                              const std::array<std::vector<Vec3>, kNumEars>& points,
                                              const FrequencyGrid& grid);

struct AssemblyInputs {
  const std::vector<room::RirPair>* rirs = nullptr;
  const std::vector<DriverSpec>* drivers = nullptr;
  const std::array<ListenerGeometry, 2>* listeners = nullptr;
  // Evaluation points per ear; defaults to the listeners' control points.
  const std::array<std::vector<Vec3>, kNumEars>* points = nullptr;
};

// H = FFT(h_dir) A D H_hrtf + FFT(h_refl) A per bin (physically informed),
// or FFT(h_dir) + FFT(h_refl) (point source). Parallel over (ear, point).
// `direct_only`, when given, receives the direct-path term alone.
AtfTensor assemble_atf(const AssemblyInputs& in, const FrequencyGrid& grid,
                       const HrtfConfig& cfg, AtfMode mode = AtfMode::physically_informed,
                       AtfTensor* direct_only = nullptr);

// Reference path: evaluates every factor independently per (e, m, l, n) with
// the scalar rigid_sphere_hrtf. Serial; used by tests and the benchmark.
AtfTensor assemble_atf_reference(const AssemblyInputs& in, const FrequencyGrid& grid,
                                 const HrtfConfig& cfg,
                                 AtfMode mode = AtfMode::physically_informed);

}  // namespace bsann::acoustic
