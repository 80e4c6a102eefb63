#include "bsann/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsann/io.hpp"
#include "bsann/rng.hpp"
#include "bsann/targets.hpp"
#include "json_helpers.hpp"

namespace bsann::dataset {

using acoustic::AtfTensor;
using acoustic::DriverBand;
using acoustic::DriverSpec;
using acoustic::ListenerGeometry;
using acoustic::Side;
using detail::json;

namespace {

constexpr char kMagic[4] = {'B', 'S', 'Z', '1'};
constexpr int kFormatVersion = 1;
constexpr int kMaxRejections = 1000;

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

// Uniform draw inside cell `cell` of `cells` equal slices of r.
double draw_cell(Rng& rng, const Range& r, int cell, int cells) {
  const double w = (r.hi - r.lo) / cells;
  return draw(rng, {r.lo + w * cell, r.lo + w * (cell + 1)});
}

void check_range(const Range& r, const char* name) {
  if (!(std::isfinite(r.lo) && std::isfinite(r.hi)) || r.lo > r.hi) {
    std::ostringstream msg;
    msg << "range " << name << " must satisfy lo <= hi";
    throw ConfigError(msg.str());
  }
}

std::vector<DriverSpec> place_array(const ArrayLayout& a, const Vec3& center, double zone_distance) {
  std::vector<DriverSpec> out;
  const double span = a.span_deg * kPi / 180.0;
  for (int c = 0; c < a.columns; ++c) {
    const double phi = a.columns == 1 ? 0.0 : -0.5 * span + span * c / (a.columns - 1);
    const double x = a.arc_radius_m * std::sin(phi);
    const double y = zone_distance - a.arc_radius_m * std::cos(phi);
    const Vec3 facing{-std::sin(phi), std::cos(phi), 0.0};
    for (int t = -1; t < a.tweeters_per_column; ++t) {
      DriverSpec d;
      d.band = t < 0 ? DriverBand::woofer : DriverBand::tweeter;
      d.facing_unit = facing;
      d.piston_radius_m = t < 0 ? a.woofer_radius_m : a.tweeter_radius_m;
      const double dz = t < 0 ? a.woofer_dz_m : a.tweeter_dz_m + t * a.tweeter_pitch_m;
      d.position_m = center + Vec3{x, y, dz};
      out.push_back(d);
    }
  }
  return out;
}

// Uniform points on a disc normal to the lateral axis around the ear
// reference, kept strictly outside the sphere.
std::vector<Vec3> sample_disc(Rng& rng, const ListenerGeometry& head, Side side, int count,
                              double radius, const room::RoomSpec& room) {
  const Vec3 ref = head.ear_reference(side);
  const Vec3 u = head.facing_unit;
  const Vec3 v{0.0, 0.0, 1.0};
  std::vector<Vec3> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int t = 0; t < kMaxRejections && !placed; ++t) {
      const double rho = radius * std::sqrt(rng.uniform());
      const double ang = 2.0 * kPi * rng.uniform();
      const Vec3 p = ref + u * (rho * std::cos(ang)) + v * (rho * std::sin(ang));
      if (distance(p, head.head_center_m) > head.head_radius_m && room.contains(p)) {
        pts.push_back(p);
        placed = true;
      }
    }
    if (!placed) throw GeometryError("could not place a control point outside the head");
  }
  return pts;
}

std::vector<DriverSpec> with_responses(const std::vector<DriverSpec>& drivers, const FrequencyGrid& grid,
                                       const BuildOptions& opt) {
  std::vector<DriverSpec> out = drivers;
  if (opt.synthetic_responses)
    for (auto& d : out)
      if (d.anechoic_response.empty()) d.anechoic_response = acoustic::synth_driver_response(d.band, grid);
  return out;
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("expected a [lo, hi] range");
  return {j[0].get<double>(), j[1].get<double>()};
}

json points_json(const std::vector<Vec3>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(detail::vec3_to_json(p));
  return a;
}

std::vector<Vec3> points_from(const json& j) {
  std::vector<Vec3> out;
  for (const auto& p : j) out.push_back(detail::vec3_from_json(p));
  return out;
}

json scene_json(const SceneConfig& s) {
  json drivers = json::array();
  for (const auto& d : s.drivers)
    drivers.push_back({{"position_m", detail::vec3_to_json(d.position_m)},
                       {"facing_unit", detail::vec3_to_json(d.facing_unit)},
                       {"piston_radius_m", d.piston_radius_m},
                       {"band", acoustic::to_string(d.band)}});
  json listeners = json::array();
  for (const auto& l : s.listeners)
    listeners.push_back({{"head_center_m", detail::vec3_to_json(l.head_center_m)},
                         {"head_radius_m", l.head_radius_m},
                         {"ear_offset_m", l.ear_offset_m},
                         {"facing_unit", detail::vec3_to_json(l.facing_unit)},
                         {"left_points", points_json(l.control_points[0])},
                         {"right_points", points_json(l.control_points[1])}});
  return {{"room",
           {{"dims_m", detail::vec3_to_json(s.room.dims_m)},
            {"rt60_s", s.room.rt60_s},
            {"max_image_order", s.room.max_image_order},
            {"speed_of_sound_mps", s.room.speed_of_sound_mps}}},
          {"drivers", drivers},
          {"listeners", listeners},
          {"pose", json::array({s.pose.listener1_xy_m[0], s.pose.listener1_xy_m[1], s.pose.listener2_xy_m[0],
                                s.pose.listener2_xy_m[1]})},
          {"array_center_m", detail::vec3_to_json(s.array_center_m)},
          {"seed", s.seed}};
}

SceneConfig scene_from(const json& j) {
  SceneConfig s;
  const json& r = j.at("room");
  s.room.dims_m = detail::vec3_from_json(r.at("dims_m"));
  s.room.rt60_s = r.at("rt60_s").get<double>();
  s.room.max_image_order = r.at("max_image_order").get<int>();
  s.room.speed_of_sound_mps = r.at("speed_of_sound_mps").get<double>();
  for (const auto& d : j.at("drivers")) {
    DriverSpec spec;
    spec.position_m = detail::vec3_from_json(d.at("position_m"));
    spec.facing_unit = detail::vec3_from_json(d.at("facing_unit"));
    spec.piston_radius_m = d.at("piston_radius_m").get<double>();
    spec.band = acoustic::driver_band_from_string(d.at("band").get<std::string>());
    s.drivers.push_back(spec);
  }
  const json& ls = j.at("listeners");
  if (!ls.is_array() || ls.size() != 2) throw FormatError("scene needs exactly two listeners");
  for (int k = 0; k < 2; ++k) {
    ListenerGeometry& l = s.listeners[k];
    l.head_center_m = detail::vec3_from_json(ls[k].at("head_center_m"));
    l.head_radius_m = ls[k].at("head_radius_m").get<double>();
    l.ear_offset_m = ls[k].at("ear_offset_m").get<double>();
    l.facing_unit = detail::vec3_from_json(ls[k].at("facing_unit"));
    l.control_points[0] = points_from(ls[k].at("left_points"));
    l.control_points[1] = points_from(ls[k].at("right_points"));
  }
  const json& p = j.at("pose");
  if (!p.is_array() || p.size() != 4) throw FormatError("pose needs four values");
  s.pose = nn::PoseInput::from_vector({p[0].get<double>(), p[1].get<double>(), p[2].get<double>(), p[3].get<double>()});
  s.array_center_m = detail::vec3_from_json(j.at("array_center_m"));
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

json ranges_json(const SceneRanges& r) {
  return {{"room_x", range_json(r.room_x)},
          {"room_y", range_json(r.room_y)},
          {"room_z", range_json(r.room_z)},
          {"rt60", range_json(r.rt60)},
          {"array_dx", range_json(r.array_dx)},
          {"array_y", range_json(r.array_y)},
          {"array_z", range_json(r.array_z)},
          {"jitter_x", range_json(r.jitter_x)},
          {"jitter_y", range_json(r.jitter_y)},
          {"head_radius", range_json(r.head_radius)},
          {"ear_offset", range_json(r.ear_offset)},
          {"pose_grid", r.pose_grid},
          {"listener_half_separation_m", r.listener_half_separation_m},
          {"zone_distance_m", r.zone_distance_m},
          {"points_per_ear", r.points_per_ear},
          {"disc_radius_m", r.disc_radius_m},
          {"max_image_order", r.max_image_order},
          {"array",
           {{"columns", r.array.columns},
            {"tweeters_per_column", r.array.tweeters_per_column},
            {"tweeter_pitch_m", r.array.tweeter_pitch_m},
            {"arc_radius_m", r.array.arc_radius_m},
            {"span_deg", r.array.span_deg},
            {"woofer_dz_m", r.array.woofer_dz_m},
            {"tweeter_dz_m", r.array.tweeter_dz_m},
            {"woofer_radius_m", r.array.woofer_radius_m},
            {"tweeter_radius_m", r.array.tweeter_radius_m}}}};
}

// Missing keys keep their defaults; unknown keys are rejected.
SceneRanges ranges_from(const json& j) {
  if (!j.is_object()) throw ConfigError("scene ranges must be an object");
  SceneRanges r;
  for (const auto& [key, v] : j.items()) {
    if (key == "room_x") r.room_x = range_from(v);
    else if (key == "room_y") r.room_y = range_from(v);
    else if (key == "room_z") r.room_z = range_from(v);
    else if (key == "rt60") r.rt60 = range_from(v);
    else if (key == "array_dx") r.array_dx = range_from(v);
    else if (key == "array_y") r.array_y = range_from(v);
    else if (key == "array_z") r.array_z = range_from(v);
    else if (key == "jitter_x") r.jitter_x = range_from(v);
    else if (key == "jitter_y") r.jitter_y = range_from(v);
    else if (key == "head_radius") r.head_radius = range_from(v);
    else if (key == "ear_offset") r.ear_offset = range_from(v);
    else if (key == "pose_grid") r.pose_grid = v.get<int>();
    else if (key == "listener_half_separation_m") r.listener_half_separation_m = v.get<double>();
    else if (key == "zone_distance_m") r.zone_distance_m = v.get<double>();
    else if (key == "points_per_ear") r.points_per_ear = v.get<int>();
    else if (key == "disc_radius_m") r.disc_radius_m = v.get<double>();
    else if (key == "max_image_order") r.max_image_order = v.get<int>();
    else if (key == "array") {
      for (const auto& [ak, av] : v.items()) {
        if (ak == "columns") r.array.columns = av.get<int>();
        else if (ak == "tweeters_per_column") r.array.tweeters_per_column = av.get<int>();
        else if (ak == "tweeter_pitch_m") r.array.tweeter_pitch_m = av.get<double>();
        else if (ak == "arc_radius_m") r.array.arc_radius_m = av.get<double>();
        else if (ak == "span_deg") r.array.span_deg = av.get<double>();
        else if (ak == "woofer_dz_m") r.array.woofer_dz_m = av.get<double>();
        else if (ak == "tweeter_dz_m") r.array.tweeter_dz_m = av.get<double>();
        else if (ak == "woofer_radius_m") r.array.woofer_radius_m = av.get<double>();
        else if (ak == "tweeter_radius_m") r.array.tweeter_radius_m = av.get<double>();
        else throw ConfigError("unknown array key: " + ak);
      }
    } else {
      throw ConfigError("unknown scene key: " + key);
    }
  }
  return r;
}

template <class F>
auto as_format_error(F&& f, const char* what) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

SceneRanges SceneRanges::fixed() { return {}; }

SceneRanges SceneRanges::training() {
  SceneRanges r;
  r.room_x = {4.0, 6.0};
  r.room_y = {4.0, 5.5};
  r.room_z = {2.5, 3.2};
  r.rt60 = {0.1, 0.4};
  r.array_dx = {-0.3, 0.3};
  r.array_y = {0.6, 1.2};
  r.array_z = {1.1, 1.3};
  r.jitter_x = {-0.25, 0.25};
  r.jitter_y = {-0.25, 0.25};
  r.head_radius = {0.075, 0.095};
  r.ear_offset = {0.0, 0.01};
  r.pose_grid = 3;
  return r;
}

void SceneRanges::validate() const {
  check_range(room_x, "room_x");
  check_range(room_y, "room_y");
  check_range(room_z, "room_z");
  check_range(rt60, "rt60");
  check_range(array_dx, "array_dx");
  check_range(array_y, "array_y");
  check_range(array_z, "array_z");
  check_range(jitter_x, "jitter_x");
  check_range(jitter_y, "jitter_y");
  check_range(head_radius, "head_radius");
  check_range(ear_offset, "ear_offset");
  if (!(room_x.lo > 0.0 && room_y.lo > 0.0 && room_z.lo > 0.0)) throw ConfigError("room dimensions must be positive");
  if (rt60.lo < 0.0) throw ConfigError("rt60 must be nonnegative");
  if (!(head_radius.lo > 0.0)) throw ConfigError("head radius must be positive");
  if (ear_offset.lo < 0.0) throw ConfigError("ear offset must be nonnegative");
  if (points_per_ear < 1) throw ConfigError("points_per_ear must be at least 1");
  if (!(disc_radius_m >= 0.0)) throw ConfigError("disc radius must be nonnegative");
  if (max_image_order < 0) throw ConfigError("max_image_order must be nonnegative");
  if (array.columns < 1) throw ConfigError("the array needs at least one column");
  if (array.tweeters_per_column < 0) throw ConfigError("tweeters_per_column must be nonnegative");
  if (pose_grid < 1) throw ConfigError("pose_grid must be at least 1");
  if (!(array.arc_radius_m > 0.0)) throw ConfigError("arc radius must be positive");
  if (!(array.span_deg >= 0.0 && array.span_deg < 180.0)) throw ConfigError("arc span must lie in [0, 180) degrees");
  if (!(listener_half_separation_m > 0.0)) throw ConfigError("listener separation must be positive");
  if (!(zone_distance_m > 0.0)) throw ConfigError("zone distance must be positive");
}

void SceneConfig::validate() const {
  room.validate();
  if (drivers.empty()) throw ConfigError("scene has no drivers");
  for (const auto& d : drivers) {
    d.validate();
    if (!room.contains(d.position_m)) throw GeometryError("driver lies outside the room");
  }
  for (const auto& l : listeners) {
    l.validate();
    if (!room.contains(l.head_center_m)) throw GeometryError("listener lies outside the room");
    for (const auto& d : drivers)
      if (distance(d.position_m, l.head_center_m) <= l.head_radius_m)
        throw GeometryError("driver lies inside a listener's head");
    for (const auto& ear : l.control_points) {
      if (ear.size() != listeners[0].control_points[0].size())
        throw ConfigError("every ear needs the same number of control points");
      for (const auto& p : ear)
        if (!room.contains(p)) throw GeometryError("control point lies outside the room");
    }
  }
  if (distance(listeners[0].head_center_m, listeners[1].head_center_m) <=
      listeners[0].head_radius_m + listeners[1].head_radius_m)
    throw GeometryError("listener heads overlap");
  for (int k = 0; k < 2; ++k)
    for (const auto& ear : listeners[k].control_points)
      for (const auto& p : ear)
        if (distance(p, listeners[1 - k].head_center_m) <= listeners[1 - k].head_radius_m)
          throw GeometryError("control point lies inside the other listener's head");
}

std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SceneConfig sample_scene(std::uint64_t seed, const SceneRanges& ranges, std::uint64_t stratum) {
  ranges.validate();
  Rng rng(seed);
  SceneConfig s;
  s.seed = seed;
  s.room.dims_m = {draw(rng, ranges.room_x), draw(rng, ranges.room_y), draw(rng, ranges.room_z)};
  s.room.rt60_s = draw(rng, ranges.rt60);
  s.room.max_image_order = ranges.max_image_order;
  s.array_center_m = {0.5 * s.room.dims_m.x + draw(rng, ranges.array_dx), draw(rng, ranges.array_y),
                      draw(rng, ranges.array_z)};
  s.drivers = place_array(ranges.array, s.array_center_m, ranges.zone_distance_m);
  std::array<std::array<double, 2>, 2> xy{};
  const int g = ranges.pose_grid;
  std::array<int, 4> cell{};
  for (int a = 0; a < 4; ++a) {
    cell[a] = static_cast<int>(stratum % static_cast<std::uint64_t>(g));
    stratum /= static_cast<std::uint64_t>(g);
  }
  for (int k = 0; k < 2; ++k) {
    const double side = k == 0 ? -1.0 : 1.0;
    xy[k] = {side * ranges.listener_half_separation_m + draw_cell(rng, ranges.jitter_x, cell[2 * k], g),
             ranges.zone_distance_m + draw_cell(rng, ranges.jitter_y, cell[2 * k + 1], g)};
    ListenerGeometry& l = s.listeners[k];
    l.head_center_m = s.array_center_m + Vec3{xy[k][0], xy[k][1], 0.0};
    l.head_radius_m = draw(rng, ranges.head_radius);
    l.ear_offset_m = draw(rng, ranges.ear_offset);
    l.facing_unit = {0.0, -1.0, 0.0};
  }
  for (int k = 0; k < 2; ++k)
    for (auto side : {Side::left, Side::right})
      s.listeners[k].control_points[static_cast<int>(side)] =
          sample_disc(rng, s.listeners[k], side, ranges.points_per_ear, ranges.disc_radius_m, s.room);
  s.pose = {xy[0], xy[1]};
  s.validate();
  return s;
}

SceneConfig default_scene() { return sample_scene(kDefaultSceneSeed, SceneRanges::fixed()); }

nn::PoseRegion pose_region(const SceneRanges& ranges) {
  nn::PoseRegion r;
  const double hx = std::max({std::abs(ranges.jitter_x.lo), std::abs(ranges.jitter_x.hi), 0.25});
  const double hy = std::max({std::abs(ranges.jitter_y.lo), std::abs(ranges.jitter_y.hi), 0.25});
  r.center = {-ranges.listener_half_separation_m, ranges.zone_distance_m, ranges.listener_half_separation_m,
              ranges.zone_distance_m};
  r.half_range = {hx, hy, hx, hy};
  return r;
}

SceneSample build_sample(const SceneConfig& config, const FrequencyGrid& grid, const BuildOptions& opt) {
  config.validate();
  const std::vector<DriverSpec> drivers = with_responses(config.drivers, grid, opt);
  const auto points = acoustic::ear_points(config.listeners);
  const auto rirs = acoustic::simulate_rir_pairs(config.room, drivers, points, grid);
  acoustic::AssemblyInputs in;
  in.rirs = &rirs;
  in.drivers = &drivers;
  in.listeners = &config.listeners;
  AtfTensor direct;
  SceneSample s;
  s.config = config;
  s.pose = config.pose;
  s.atf = acoustic::assemble_atf(in, grid, opt.hrtf, opt.mode, &direct);
  if (!s.atf.all_finite()) throw NonFiniteError("assembled ATF has non-finite entries");
  s.targets = targets::build_bright_targets(direct, targets::nearest_band_drivers(drivers, config.listeners));
  return s;
}

AtfTensor build_eval_plant(const SceneConfig& config, const FrequencyGrid& grid, const BuildOptions& opt) {
  config.validate();
  const std::vector<DriverSpec> drivers = with_responses(config.drivers, grid, opt);
  const auto points = acoustic::ear_reference_points(config.listeners);
  const auto rirs = acoustic::simulate_rir_pairs(config.room, drivers, points, grid);
  acoustic::AssemblyInputs in;
  in.rirs = &rirs;
  in.drivers = &drivers;
  in.listeners = &config.listeners;
  in.points = &points;
  AtfTensor atf = acoustic::assemble_atf(in, grid, opt.hrtf, opt.mode);
  if (!atf.all_finite()) throw NonFiniteError("assembled ATF has non-finite entries");
  return atf;
}

Dataset generate_dataset(const FrequencyGrid& grid, const BuildOptions& build, const SceneRanges& ranges,
                         std::uint64_t seed, std::size_t count, const Progress& progress) {
  ranges.validate();
  Dataset ds;
  ds.grid = grid;
  ds.build = build;
  ds.ranges = ranges;
  ds.seed = seed;
  ds.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.samples.push_back(build_sample(sample_scene(scene_seed(seed, i), ranges, i), grid, build));
    round_to_float(ds.samples.back());
    if (progress) progress(i + 1, count);
  }
  return ds;
}

void round_to_float(SceneSample& s) {
  for (auto& v : s.atf.values())
    v = {static_cast<double>(static_cast<float>(v.real())), static_cast<double>(static_cast<float>(v.imag()))};
  for (auto& v : s.targets.mag) v = static_cast<double>(static_cast<float>(v));
}

void write_dataset(const std::string& path, const Dataset& ds) {
  const int M = ds.samples.empty() ? 0 : ds.samples[0].atf.points();
  const int L = ds.samples.empty() ? 0 : ds.samples[0].atf.speakers();
  const int N = static_cast<int>(ds.grid.num_bins());
  std::vector<std::uint8_t> blob;
  blob.reserve(ds.samples.size() * acoustic::kNumEars * M * (2 * L + 1) * N * 4);
  json scenes = json::array();
  for (const auto& s : ds.samples) {
    if (s.atf.points() != M || s.atf.speakers() != L || !(s.atf.grid() == ds.grid))
      throw ConfigError("dataset samples must share the grid, point count and loudspeaker count");
    if (s.targets.points != M || s.targets.bins != N) throw ConfigError("target shape does not match the ATF");
    for (const auto& v : s.atf.values()) {
      io::append_f32_le(blob, static_cast<float>(v.real()));
      io::append_f32_le(blob, static_cast<float>(v.imag()));
    }
    scenes.push_back(scene_json(s.config));
  }
  for (const auto& s : ds.samples)
    for (double v : s.targets.mag) io::append_f32_le(blob, static_cast<float>(v));
  const json header = {
      {"format", "bsann-dataset"},
      {"version", kFormatVersion},
      {"grid", detail::grid_to_json(ds.grid)},
      {"mode", acoustic::to_string(ds.build.mode)},
      {"hrtf",
       {{"series_order", ds.build.hrtf.series_order},
        {"convergence_tol", ds.build.hrtf.convergence_tol},
        {"speed_of_sound_mps", ds.build.hrtf.speed_of_sound_mps}}},
      {"synthetic_responses", ds.build.synthetic_responses},
      {"ranges", ranges_json(ds.ranges)},
      {"seed", ds.seed},
      {"count", ds.samples.size()},
      {"points_per_ear", M},
      {"speakers", L},
      {"sections",
       json::array({{{"name", "atf"}, {"dtype", "float32"}, {"layout", "sample,ear,point,loudspeaker,bin,reim"}},
                    {{"name", "targets"}, {"dtype", "float32"}, {"layout", "sample,ear,point,bin"}}})},
      {"scenes", scenes},
      {"blob_sha256", io::sha256_hex(blob)}};
  io::write_container(path, kMagic, header.dump(), blob);
}

Dataset read_dataset(const std::string& path) {
  const io::Container c = io::read_container(path, kMagic);
  const json h = detail::parse_json(c.header, "dataset header");
  return as_format_error(
      [&] {
        if (h.at("format").get<std::string>() != "bsann-dataset") throw FormatError("not a dataset file");
        const int version = h.at("version").get<int>();
        if (version != kFormatVersion) {
          std::ostringstream msg;
          msg << "unsupported dataset version " << version << " (expected " << kFormatVersion << ")";
          throw FormatError(msg.str());
        }
        if (io::sha256_hex(c.blob) != h.at("blob_sha256").get<std::string>())
          throw FormatError("dataset checksum mismatch: the payload is corrupted");
        Dataset ds;
        ds.grid = detail::grid_from_json(h.at("grid"));
        ds.build.mode = acoustic::atf_mode_from_string(h.at("mode").get<std::string>());
        ds.build.hrtf.series_order = h.at("hrtf").at("series_order").get<int>();
        ds.build.hrtf.convergence_tol = h.at("hrtf").at("convergence_tol").get<double>();
        ds.build.hrtf.speed_of_sound_mps = h.at("hrtf").at("speed_of_sound_mps").get<double>();
        ds.build.synthetic_responses = h.at("synthetic_responses").get<bool>();
        ds.ranges = ranges_from(h.at("ranges"));
        ds.seed = h.at("seed").get<std::uint64_t>();
        const std::size_t count = h.at("count").get<std::size_t>();
        const int M = h.at("points_per_ear").get<int>();
        const int L = h.at("speakers").get<int>();
        const int N = static_cast<int>(ds.grid.num_bins());
        const json& scenes = h.at("scenes");
        if (scenes.size() != count) throw FormatError("scene count does not match the header");
        const std::size_t atf_vals = static_cast<std::size_t>(acoustic::kNumEars) * M * L * N;
        const std::size_t tgt_vals = static_cast<std::size_t>(acoustic::kNumEars) * M * N;
        if (c.blob.size() != count * (2 * atf_vals + tgt_vals) * 4)
          throw FormatError("dataset payload size does not match the header");
        const std::uint8_t* p = c.blob.data();
        ds.samples.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
          SceneSample& s = ds.samples[i];
          s.config = scene_from(scenes[i]);
          s.pose = s.config.pose;
          s.atf = AtfTensor(M, L, ds.grid);
          for (auto& v : s.atf.values()) {
            v = {io::read_f32_le(p), io::read_f32_le(p + 4)};
            p += 8;
          }
        }
        for (auto& s : ds.samples) {
          s.targets = losses::TargetSpec(M, N);
          for (auto& v : s.targets.mag) {
            v = io::read_f32_le(p);
            p += 4;
          }
        }
        return ds;
      },
      "dataset header");
}

std::string scene_to_json(const SceneConfig& s) { return scene_json(s).dump(2); }

SceneConfig scene_from_json(const std::string& text) {
  const json j = detail::parse_json(text, "scene");
  return as_format_error([&] { return scene_from(j); }, "scene");
}

std::string ranges_to_json(const SceneRanges& r) { return ranges_json(r).dump(2); }

SceneRanges ranges_from_json(const std::string& text) {
  const json j = detail::parse_json(text, "scene ranges");
  return as_format_error([&] { return ranges_from(j); }, "scene ranges");
}

}  // namespace bsann::dataset
