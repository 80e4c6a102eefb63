#include <catch_amalgamated.hpp>

#include "bsann/losses.hpp"
#include "loss_oracle.hpp"

using namespace bsann;
using namespace bsann::losses;
using Catch::Approx;

namespace {

FrequencyGrid five_bins() { return FrequencyGrid(16000.0, 8, 100.0, 8000.0); }

// Central differences of the oracle with the L_off weights frozen at g.
FilterBank fd_gradient(const oracle::Instance& in, const oracle::Term& t, const FilterBank& g) {
  const oracle::OffWeights ow = oracle::off_weights(in, g);
  FilterBank out(g.speakers(), g.grid());
  const double h = 1e-6;
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    double parts[2];
    for (int part = 0; part < 2; ++part) {
      FilterBank a = g, b = g;
      const cplx step = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
      a.values()[i] += step;
      b.values()[i] -= step;
      parts[part] = (t.ref(in, a, ow) - t.ref(in, b, ow)) / (2.0 * h);
    }
    out.values()[i] = {parts[0], parts[1]};
  }
  return out;
}

double max_abs(const FilterBank& g) {
  double m = 0.0;
  for (const auto& v : g.values()) m = std::max({m, std::abs(v.real()), std::abs(v.imag())});
  return m;
}

}  // namespace

TEST_CASE("every loss term matches the scalar oracle", "[losses]") {
  const auto terms = oracle::terms();
  for (int L = 1; L <= 3; ++L)
    for (int M = 1; M <= 2; ++M)
      for (unsigned seed : {1u, 2u}) {
        const oracle::Instance in = oracle::make_instance(L, M, five_bins(), seed + 10 * L + 100 * M, 2.5);
        const oracle::OffWeights ow = oracle::off_weights(in, in.g);
        for (const auto& t : terms) {
          INFO(t.name << " L=" << L << " M=" << M << " seed=" << seed);
          const double ref = t.ref(in, in.g, ow);
          REQUIRE(std::isfinite(ref));
          REQUIRE(t.lib(in, in.g, nullptr) == Approx(ref).epsilon(1e-10).margin(1e-300));
        }
      }
}

TEST_CASE("the test instances exercise every branch", "[losses]") {
  const oracle::Instance in = oracle::make_instance(3, 2, five_bins(), 7, 2.5);
  REQUIRE(oracle::gain(in.g, in.w.g_max) > 0.0);
  REQUIRE(oracle::reg(in, in.g, 0) > 0.0);
  REQUIRE(oracle::compact(in.g, in.compact) > 0.0);
}

TEST_CASE("analytic filter gradients match central differences", "[losses]") {
  const auto terms = oracle::terms();
  for (int L = 1; L <= 3; ++L) {
    const oracle::Instance in = oracle::make_instance(L, 2, five_bins(), 40 + L, 2.5);
    for (const auto& t : terms) {
      INFO(t.name << " L=" << L);
      FilterBank grad(L, five_bins());
      t.lib(in, in.g, &grad);
      const FilterBank fd = fd_gradient(in, t, in.g);
      const double tol = 1e-6 * max_abs(fd) + 1e-9;  // rank-one plants leave L_off flat
      for (std::size_t i = 0; i < fd.values().size(); ++i) {
        REQUIRE(std::abs(grad.values()[i].real() - fd.values()[i].real()) <= tol);
        REQUIRE(std::abs(grad.values()[i].imag() - fd.values()[i].imag()) <= tol);
      }
    }
  }
}

TEST_CASE("gradient scale and accumulation", "[losses]") {
  const oracle::Instance in = oracle::make_instance(2, 1, five_bins(), 3, 2.5);
  FilterBank once(2, five_bins()), twice(2, five_bins());
  loss_dark(in.atf, in.g, &once, 2.0);
  loss_dark(in.atf, in.g, &twice);
  loss_dark(in.atf, in.g, &twice);
  for (std::size_t i = 0; i < once.values().size(); ++i)
    REQUIRE(std::abs(once.values()[i] - twice.values()[i]) <= 1e-14 * std::abs(once.values()[i]) + 1e-300);
}

TEST_CASE("loss hand cases", "[losses]") {
  const FrequencyGrid grid = five_bins();
  oracle::Instance in = oracle::make_instance(2, 1, grid, 5);

  SECTION("zero bank has no dark-zone energy, no gain excess and no ringing") {
    const FilterBank zero(2, grid);
    REQUIRE(loss_dark(in.atf, zero) == 0.0);
    REQUIRE(loss_gain(zero, 4.0) == 0.0);
    REQUIRE(loss_compact(zero, in.compact) == 0.0);
  }
  SECTION("identical banks give zero teacher loss") { REQUIRE(loss_teacher(in.g, in.g) == 0.0); }
  SECTION("bright loss is zero when the targets are met") {
    for (int e = 0; e < 4; ++e)
      for (int n = 0; n < in.atf.bins(); ++n) in.targets.at(e, 0, n) = std::abs(oracle::field(in.atf, in.g, e, 0, e, n));
    REQUIRE(loss_bright(in.atf, in.g, in.targets) == Approx(0.0).margin(1e-28));
  }
  SECTION("bright loss of a silent bank sums the mean squared target over pairs") {
    for (auto& v : in.targets.mag) v = 0.5;
    REQUIRE(loss_bright(in.atf, FilterBank(2, grid), in.targets) == Approx(0.5).epsilon(1e-15));
  }
  SECTION("gain excess of 1 everywhere") {
    FilterBank g(2, grid);
    g.fill(cplx(0.0, 5.0));
    REQUIRE(loss_gain(g, 4.0) == Approx(1.0).epsilon(1e-15));
  }
  SECTION("diagonal ear matrices have no leakage") {
    EarMatrix T(1, grid.num_bins());
    for (int n = 0; n < T.bins; ++n) T.at(0, n, 0, 0) = T.at(0, n, 1, 1) = 2.0;
    REQUIRE(xtc_off_loss(T, grid, 1e-8) == 0.0);
  }
  SECTION("diagonal at its targets costs nothing") {
    EarMatrix T(1, grid.num_bins());
    XtcTargets t(1, grid.num_bins());
    for (int n = 0; n < T.bins; ++n)
      for (int d = 0; d < 2; ++d) {
        T.at(0, n, d, d) = cplx(0.0, 0.7);
        t.at(0, d, 0, n) = 0.7;
      }
    REQUIRE(xtc_diag_loss(T, t, 0, grid) == Approx(0.0).margin(1e-30));
  }
  SECTION("no diagonal energy is a degenerate plant") {
    EarMatrix T(1, grid.num_bins());
    T.at(0, 2, 0, 1) = 1.0;
    REQUIRE_THROWS_AS(xtc_off_loss(T, grid, 1e-8), DegeneratePlantError);
  }
  SECTION("well-conditioned two-speaker plant is not regularized") {
    AtfTensor H(1, 2, grid);
    for (int n = 0; n < H.bins(); ++n) {
      H.at(0, 0, 0, n) = 1.0;
      H.at(1, 0, 1, n) = 1.0;
    }
    REQUIRE(conditioning_weight(H, 0, 0, 2, in.w) == 0.0);
  }
  SECTION("rank-deficient two-speaker plant is regularized") {
    AtfTensor H(1, 2, grid);
    for (int n = 0; n < H.bins(); ++n)
      for (int e = 0; e < 2; ++e) H.at(e, 0, 0, n) = H.at(e, 0, 1, n) = 1.0;
    const double b = conditioning_weight(H, 0, 0, 2, in.w);
    // kappa = 4 / 1e-8, trace 4, L = 2.
    REQUIRE(b == Approx(1e-4 * (4.0 / 1e-8 - 1e3) / 1e3 * 4.0 / 2.0).epsilon(1e-12));
  }
  SECTION("weights validation") {
    LossWeights w;
    w.alpha = 1.5;
    REQUIRE_THROWS_AS(w.validate(), ConfigError);
    w = {};
    w.eta = -1.0;
    REQUIRE_THROWS_AS(w.validate(), ConfigError);
  }
}

TEST_CASE("compactness defaults", "[losses]") {
  const FrequencyGrid grid(48000.0, 512);
  const CompactnessConfig c = CompactnessConfig::defaults(grid);
  REQUIRE_NOTHROW(c.validate());
  REQUIRE(c.bandpass_fir.size() == 65);
  REQUIRE(c.window[0] == 0.0);
  REQUIRE(c.window[102] == 0.0);
  REQUIRE(c.window[300] == 1.0);
  SECTION("a causal impulse inside the window-free region is cheap") {
    FilterBank g(1, grid);
    g.fill(1.0);  // unit impulse at t = 0
    FilterBank late(1, grid);
    for (int n = 0; n < late.bins(); ++n) late.at(0, 0, n) = std::polar(1.0, -2.0 * kPi * n * 400.0 / 512.0);
    REQUIRE(loss_compact(g, c) < 1e-3 * loss_compact(late, c));
  }
  SECTION("invalid windows are rejected") {
    CompactnessConfig bad = c;
    bad.window[300] = 0.5;
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.bandpass_fir[0] += 1.0;
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("network-parameter gradients of every loss match finite differences", "[losses]") {
  const FrequencyGrid grid = five_bins();
  nn::NetworkShape shape;
  shape.num_bands = 2;
  shape.sigma = 1.0;
  shape.hidden = 2;
  shape.layers = 1;
  shape.speakers = 3;
  const auto params = nn::init_network(shape, {}, grid, 17);
  const nn::PoseInput pose{{-0.45, 1.1}, {0.4, 0.93}};
  oracle::Instance in = oracle::make_instance(3, 2, grid, 18);
  // Scale the network's output up so every term is active.
  auto p = params;
  for (const auto& layer : std::vector<nn::DenseLayer>{p.layout().back()})
    for (int i = 0; i < layer.rows * layer.cols; ++i) p.theta[layer.w_offset + i] *= 6.0;
  const FilterBank g0 = nn::forward(p, pose);
  const oracle::OffWeights ow = oracle::off_weights(in, g0);
  for (const auto& t : oracle::terms()) {
    INFO(t.name);
    const nn::LossAndGrad lg = nn::backward(p, pose, [&](const FilterBank& g, FilterBank& grad) {
      return t.lib(in, g, &grad);
    });
    const double h = 1e-6;
    double scale = 0.0;
    std::vector<double> fd(p.theta.size());
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
      auto a = p, b = p;
      a.theta[i] += h;
      b.theta[i] -= h;
      fd[i] = (t.ref(in, nn::forward(a, pose), ow) - t.ref(in, nn::forward(b, pose), ow)) / (2.0 * h);
      scale = std::max(scale, std::abs(fd[i]));
    }
    for (std::size_t i = 0; i < p.theta.size(); ++i)
      REQUIRE(std::abs(lg.grad[i] - fd[i]) <= 1e-4 * std::max(std::abs(fd[i]), 1e-3 * scale));
  }
}
