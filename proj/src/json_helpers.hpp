#pragma once

#include <json.hpp>

#include "bsann/core.hpp"

namespace bsann::detail {

using json = nlohmann::json;

inline json grid_to_json(const FrequencyGrid& g) {
  return {{"sample_rate_hz", g.sample_rate_hz()},
          {"fft_size", g.fft_size()},
          {"band_lo_hz", g.band_lo_hz()},
          {"band_hi_hz", g.band_hi_hz()}};
}

inline FrequencyGrid grid_from_json(const json& j) {
  return FrequencyGrid(j.at("sample_rate_hz").get<double>(), j.at("fft_size").get<int>(),
                       j.at("band_lo_hz").get<double>(), j.at("band_hi_hz").get<double>());
}

inline json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Parses JSON text, turning parser failures into FormatError.
inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace bsann::detail
