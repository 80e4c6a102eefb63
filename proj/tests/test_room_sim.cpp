#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "bsann/room_sim.hpp"

using namespace bsann;
using namespace bsann::room;
using Catch::Approx;

namespace {

double energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

// Independent image enumeration: repeatedly mirror every image across the six
// walls, tracking how many reflections produced it, and keep the lowest order
// per distinct position.
std::vector<std::pair<Vec3, int>> brute_force_images(const RoomSpec& room, const Vec3& src, int max_order) {
  std::vector<std::pair<Vec3, int>> frontier{{src, 0}};
  std::vector<std::pair<Vec3, int>> all{{src, 0}};
  auto same = [](const Vec3& a, const Vec3& b) { return distance(a, b) < 1e-9; };
  for (int order = 1; order <= max_order; ++order) {
    std::vector<std::pair<Vec3, int>> next;
    for (const auto& [p, o] : frontier) {
      const Vec3 mirrors[6] = {{-p.x, p.y, p.z}, {2 * room.dims_m.x - p.x, p.y, p.z},
                               {p.x, -p.y, p.z}, {p.x, 2 * room.dims_m.y - p.y, p.z},
                               {p.x, p.y, -p.z}, {p.x, p.y, 2 * room.dims_m.z - p.z}};
      for (const Vec3& q : mirrors) {
        const bool seen = std::any_of(all.begin(), all.end(), [&](auto& e) { return same(e.first, q); });
        if (!seen) {
          next.push_back({q, order});
          all.push_back({q, order});
        }
      }
    }
    frontier = std::move(next);
  }
  return all;
}

}  // namespace

TEST_CASE("free-field arrivals", "[room]") {
  const FrequencyGrid grid(48000.0, 512);
  RoomSpec room;
  room.rt60_s = 0.0;
  const Vec3 src{1.0, 1.0, 1.5};

  SECTION("integer-sample delay has exact amplitude 1/(4 pi d)") {
    // 0.343 m at 343 m/s and 48 kHz is exactly 48 samples.
    const Rir rir = simulate_rir(room, src, src + Vec3{0.343, 0.0, 0.0}, grid);
    REQUIRE(rir.samples[48] == Approx(1.0 / (4.0 * kPi * 0.343)).epsilon(1e-12));
    REQUIRE(energy(rir.samples) == Approx(std::pow(1.0 / (4.0 * kPi * 0.343), 2)).epsilon(1e-12));
  }
  SECTION("1 m: arrival at 1/343 s with DC gain 1/(4 pi)") {
    const Rir rir = simulate_rir(room, src, src + Vec3{1.0, 0.0, 0.0}, grid);
    const auto peak = std::max_element(rir.samples.begin(), rir.samples.end()) - rir.samples.begin();
    REQUIRE(peak == static_cast<long>(std::lround(48000.0 / 343.0)));
    double dc = 0.0;
    for (double v : rir.samples) dc += v;
    REQUIRE(dc == Approx(1.0 / (4.0 * kPi)).epsilon(1e-12));
  }
  SECTION("2 m vs 1 m halves the amplitude") {
    const Rir a = simulate_rir(room, src, src + Vec3{0.343, 0.0, 0.0}, grid);
    const Rir b = simulate_rir(room, src, src + Vec3{0.686, 0.0, 0.0}, grid);
    REQUIRE(b.samples[96] / a.samples[48] == Approx(0.5).epsilon(1e-12));
  }
  SECTION("geometry errors") {
    REQUIRE_THROWS_AS(simulate_rir(room, {-0.1, 1.0, 1.0}, src, grid), GeometryError);
    REQUIRE_THROWS_AS(simulate_rir(room, src, src, grid), GeometryError);
    RoomSpec bad = room;
    bad.dims_m.y = 0.0;
    REQUIRE_THROWS_AS(simulate_rir(bad, src, {1.0, 0.5, 1.0}, grid), GeometryError);
  }
}

TEST_CASE("image list matches brute-force mirror enumeration", "[room][oracle]") {
  RoomSpec room;
  room.dims_m = {5.0, 4.0, 3.0};
  room.rt60_s = 0.2;
  room.max_image_order = 2;
  const Vec3 src{1.2, 0.7, 1.1}, mic{3.1, 2.4, 1.6};
  const double beta = room.reflection_coefficient();
  REQUIRE(beta > 0.0);
  REQUIRE(beta < 1.0);

  auto images = enumerate_images(room, src, mic);
  auto oracle = brute_force_images(room, src, 2);
  REQUIRE(images.size() == oracle.size());  // 1 + 6 + 18 for order <= 2
  REQUIRE(images.size() == 25);

  std::vector<std::pair<double, double>> expect;
  for (const auto& [p, order] : oracle) {
    const double d = distance(p, mic);
    expect.push_back({d / room.speed_of_sound_mps, std::pow(beta, order) / (4.0 * kPi * d)});
  }
  std::sort(expect.begin(), expect.end());
  for (std::size_t i = 0; i < images.size(); ++i) {
    REQUIRE(images[i].delay_s == Approx(expect[i].first).epsilon(1e-12));
    REQUIRE(images[i].amplitude == Approx(expect[i].second).epsilon(1e-12));
  }
}

TEST_CASE("direct/reflected split", "[room]") {
  const FrequencyGrid grid(48000.0, 512);
  RoomSpec room;
  room.dims_m = {5.0, 4.0, 3.0};
  room.max_image_order = 3;
  const Vec3 src{2.0, 0.5, 1.2}, mic{2.4, 1.4, 1.25};

  SECTION("anechoic leaves no reflected energy") {
    room.rt60_s = 0.0;
    const Rir rir = simulate_rir(room, src, mic, grid);
    const RirPair p = split_direct_reflected(rir.samples, src, mic, room, grid);
    REQUIRE(energy(p.h_refl) < 1e-12 * energy(rir.samples));
    REQUIRE_FALSE(p.overlap_warning);
  }
  SECTION("partition identity and direct energy vs free field") {
    room.rt60_s = 0.2;
    const Rir rir = simulate_rir(room, src, mic, grid);
    const RirPair p = split_direct_reflected(rir.samples, src, mic, room, grid);
    for (std::size_t n = 0; n < rir.samples.size(); ++n)
      REQUIRE(p.h_dir[n] + p.h_refl[n] == rir.samples[n]);
    REQUIRE(energy(p.h_refl) > 0.0);
    RoomSpec anechoic = room;
    anechoic.rt60_s = 0.0;
    const Rir ff = simulate_rir(anechoic, src, mic, grid);
    REQUIRE(std::abs(energy(p.h_dir) / energy(ff.samples) - 1.0) < 0.01);
    REQUIRE(rir.truncated);  // 0.2 s tail does not fit in 512 samples
  }
  SECTION("oversized guard flags overlap") {
    room.rt60_s = 0.2;
    const Rir rir = simulate_rir(room, src, mic, grid);
    REQUIRE(split_direct_reflected(rir.samples, src, mic, room, grid, 5.0).overlap_warning);
  }
}

TEST_CASE("room scaling and order-0 properties", "[room][property]") {
  const FrequencyGrid grid(48000.0, 1024);
  RoomSpec room;
  room.rt60_s = 0.0;
  room.dims_m = {4.0, 4.0, 3.0};
  const Vec3 src{1.0, 1.0, 1.0}, mic{1.343, 1.0, 1.0};
  RoomSpec big = room;
  big.dims_m = room.dims_m * 2.0;
  const Rir a = simulate_rir(room, src, mic, grid);
  const Rir b = simulate_rir(big, src * 2.0, mic * 2.0, grid);
  REQUIRE(b.samples[96] == Approx(0.5 * a.samples[48]).epsilon(1e-12));

  RoomSpec reverb = room;
  reverb.rt60_s = 0.4;
  reverb.max_image_order = 0;
  const Rir c = simulate_rir(reverb, src, mic, grid);
  REQUIRE(c.samples == a.samples);
}
