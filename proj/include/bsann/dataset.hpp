#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bsann/acoustic_model.hpp"
#include "bsann/losses.hpp"
#include "bsann/nn.hpp"
#include "bsann/room_sim.hpp"

namespace bsann::dataset {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

// Driver arc in the array frame: x lateral, y toward the listeners, z up.
// Columns sit on an arc centred on the nominal zone centre (0, zone_distance)
// and face it; each column holds a woofer below and its tweeters above,
// stacked tweeter_pitch_m apart. Drivers are ordered column by column,
// woofer first.
struct ArrayLayout {
  int columns = 4;
  int tweeters_per_column = 1;
  double arc_radius_m = 1.0;
  double span_deg = 60.0;
  double woofer_dz_m = -0.06;
  double tweeter_dz_m = 0.06;
  double tweeter_pitch_m = 0.04;
  double woofer_radius_m = 0.04;
  double tweeter_radius_m = 0.0125;

  bool operator==(const ArrayLayout&) const = default;
};

// Uniform sampling ranges. Listener positions are the nominal ones
// (+-listener_half_separation, zone_distance) plus jitter. With pose_grid > 1
// each jitter axis is cut into pose_grid cells and a scene's stratum picks
// one cell per axis, so consecutive strata tile the pose box.
struct SceneRanges {
  Range room_x{5.0, 5.0};
  Range room_y{4.0, 4.0};
  Range room_z{3.0, 3.0};
  Range rt60{0.0, 0.0};
  Range array_dx{0.0, 0.0};   // array centre x offset from the room's centre line
  Range array_y{1.0, 1.0};    // array centre distance from the y = 0 wall
  Range array_z{1.2, 1.2};
  Range jitter_x{0.0, 0.0};
  Range jitter_y{0.0, 0.0};
  Range head_radius{0.085, 0.085};
  Range ear_offset{0.005, 0.005};
  int pose_grid = 1;
  double listener_half_separation_m = 0.5;
  double zone_distance_m = 1.0;
  int points_per_ear = 8;
  double disc_radius_m = 0.05;
  int max_image_order = 2;
  ArrayLayout array;

  // Every range collapsed onto the default desk scene.
  static SceneRanges fixed();
  // Randomized training ranges.
  static SceneRanges training();
  void validate() const;
  bool operator==(const SceneRanges&) const = default;
};

struct SceneConfig {
  room::RoomSpec room;
  std::vector<acoustic::DriverSpec> drivers;
  std::array<acoustic::ListenerGeometry, 2> listeners;
  nn::PoseInput pose;
  Vec3 array_center_m;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr std::uint64_t kDefaultSceneSeed = 20240611;

SceneConfig sample_scene(std::uint64_t seed, const SceneRanges& ranges, std::uint64_t stratum = 0);
SceneConfig default_scene();

// Mixes a base seed and an index into an independent per-scene seed.
std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index);

// Nominal pose box for the network's input normalization.
nn::PoseRegion pose_region(const SceneRanges& ranges);

struct SceneSample {
  SceneConfig config;
  acoustic::AtfTensor atf;       // at the training control points
  losses::TargetSpec targets;    // bright-zone |p_T|
  nn::PoseInput pose;
};

struct BuildOptions {
  acoustic::HrtfConfig hrtf;
  acoustic::AtfMode mode = acoustic::AtfMode::physically_informed;
  bool synthetic_responses = true;  // fill empty driver responses with synth models
};

SceneSample build_sample(const SceneConfig& config, const FrequencyGrid& grid, const BuildOptions& opt);

// ATF at the two ear reference points of each listener (one point per ear).
acoustic::AtfTensor build_eval_plant(const SceneConfig& config, const FrequencyGrid& grid,
                                     const BuildOptions& opt);

struct Dataset {
  FrequencyGrid grid;
  BuildOptions build;
  SceneRanges ranges;
  std::uint64_t seed = 0;
  std::vector<SceneSample> samples;
};

// Scene i is sample_scene(scene_seed(seed, i), ranges, i).
using Progress = std::function<void(std::size_t done, std::size_t total)>;
Dataset generate_dataset(const FrequencyGrid& grid, const BuildOptions& build, const SceneRanges& ranges,
                         std::uint64_t seed, std::size_t count, const Progress& progress = {});

// "BSZ1", u64 header length, JSON header, float32 LE blob: ATF (re, im) in
// [sample][ear][point][loudspeaker][bin] order, then target magnitudes in
// [sample][ear][point][bin] order.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

// Rounds every stored quantity through float32 as the file format does.
void round_to_float(SceneSample& s);

std::string scene_to_json(const SceneConfig& s);
SceneConfig scene_from_json(const std::string& text);
std::string ranges_to_json(const SceneRanges& r);
SceneRanges ranges_from_json(const std::string& text);

}  // namespace bsann::dataset
