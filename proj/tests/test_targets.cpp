#include <catch_amalgamated.hpp>

#include "bsann/targets.hpp"

using namespace bsann;
using namespace bsann::acoustic;
using Catch::Approx;

namespace {

std::array<ListenerGeometry, 2> two_listeners() {
  std::array<ListenerGeometry, 2> ls;
  ls[0].head_center_m = {-0.5, 1.0, 1.2};
  ls[1].head_center_m = {0.5, 1.0, 1.2};
  return ls;
}

}  // namespace

TEST_CASE("third-octave smoothing", "[targets]") {
  const FrequencyGrid grid(48000.0, 512);
  SECTION("a flat curve stays flat") {
    const std::vector<double> flat(grid.num_bins(), 3.0);
    for (double v : targets::third_octave_smooth(flat, grid)) REQUIRE(v == Approx(3.0).epsilon(1e-15));
  }
  SECTION("each bin is the mean over its third-octave window") {
    std::vector<double> ramp(grid.num_bins());
    for (std::size_t n = 0; n < ramp.size(); ++n) ramp[n] = static_cast<double>(n * n % 17);
    const auto s = targets::third_octave_smooth(ramp, grid);
    const double edge = std::pow(2.0, 1.0 / 6.0);
    for (std::size_t n : {1u, 10u, 100u, 256u}) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t j = 1; j < ramp.size(); ++j)
        if (grid.freq(j) >= grid.freq(n) / edge - 1e-6 && grid.freq(j) <= grid.freq(n) * edge + 1e-6) {
          sum += ramp[j];
          ++count;
        }
      REQUIRE(s[n] == Approx(sum / count).epsilon(1e-14));
    }
    REQUIRE(s[0] == ramp[0]);
  }
  SECTION("length mismatch") {
    REQUIRE_THROWS_AS(targets::third_octave_smooth(std::vector<double>(3, 1.0), grid), ConfigError);
  }
}

TEST_CASE("nearest driver of each band per ear", "[targets]") {
  std::vector<DriverSpec> drivers(4);
  drivers[0].position_m = {-0.6, 0.0, 1.2};
  drivers[1].position_m = {-0.4, 0.0, 1.2};
  drivers[1].band = DriverBand::tweeter;
  drivers[2].position_m = {0.4, 0.0, 1.2};
  drivers[3].position_m = {0.6, 0.0, 1.2};
  drivers[3].band = DriverBand::tweeter;
  const auto near = targets::nearest_band_drivers(drivers, two_listeners());
  REQUIRE(near[0] == std::vector<int>{0, 1});
  REQUIRE(near[1] == std::vector<int>{0, 1});
  REQUIRE(near[2] == std::vector<int>{2, 3});
  REQUIRE(near[3] == std::vector<int>{2, 3});

  SECTION("woofer-only arrays use one driver per ear") {
    drivers[1].band = drivers[3].band = DriverBand::woofer;
    const auto w = targets::nearest_band_drivers(drivers, two_listeners());
    REQUIRE(w[0].size() == 1);
    REQUIRE(w[3].size() == 1);
  }
  SECTION("an empty array is rejected") {
    REQUIRE_THROWS_AS(targets::nearest_band_drivers({}, two_listeners()), ConfigError);
  }
}

TEST_CASE("bright targets are normalized at 1 kHz", "[targets]") {
  const FrequencyGrid grid(48000.0, 512);
  AtfTensor direct(2, 3, grid);
  for (int e = 0; e < 4; ++e)
    for (int m = 0; m < 2; ++m)
      for (int l = 0; l < 3; ++l)
        for (int n = 0; n < direct.bins(); ++n)
          direct.at(e, m, l, n) = std::polar(0.1 * (1 + l) * (1 + m), 0.3 * n + e);
  const std::array<std::vector<int>, kNumEars> drivers{{{0}, {0, 1}, {2}, {1, 2}}};
  const auto t = targets::build_bright_targets(direct, drivers);
  const std::size_t ref = grid.nearest_bin(1000.0);
  for (int e = 0; e < 4; ++e)
    for (int m = 0; m < 2; ++m) {
      REQUIRE(t.at(e, m, static_cast<int>(ref)) == Approx(1.0).epsilon(1e-14));
      // Flat direct magnitudes give flat targets.
      REQUIRE(t.at(e, m, 40) == Approx(1.0).epsilon(1e-14));
    }

  SECTION("a silent reference is degenerate") {
    for (auto& v : direct.values()) v = 0.0;
    REQUIRE_THROWS_AS(targets::build_bright_targets(direct, drivers), DegeneratePlantError);
  }
}

TEST_CASE("XTC targets capture the teacher's diagonal", "[targets]") {
  const FrequencyGrid grid(16000.0, 8, 100.0, 8000.0);
  AtfTensor H(1, 1, grid);
  nn::FilterBank g(1, grid);
  for (int n = 0; n < H.bins(); ++n) {
    for (int e = 0; e < 4; ++e) H.at(e, 0, 0, n) = cplx(1.0 + e, 0.5 * n);
    for (int q = 0; q < 4; ++q) g.at(0, q, n) = cplx(0.5, -0.25 * q);
  }
  g.at(0, 0, 2) = 0.0;
  const auto t = targets::capture_xtc_targets(H, g, 1e-8);
  for (int k = 0; k < 2; ++k)
    for (int d = 0; d < 2; ++d)
      for (int n = 0; n < H.bins(); ++n) {
        const double expect = std::abs(H.at(2 * k + d, 0, 0, n) * g.at(0, 2 * k + d, n));
        REQUIRE(t.at(k, d, 0, n) == Approx(std::max(expect, 1e-8)).epsilon(1e-14));
      }
  REQUIRE(t.at(0, 0, 0, 2) == 1e-8);
}
