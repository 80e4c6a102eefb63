#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bsann/dataset.hpp"
#include "bsann/eval.hpp"
#include "bsann/io.hpp"
#include "bsann/nn.hpp"
#include "cli.hpp"

using namespace bsann;
namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path dir;
  Workdir() : dir(fs::temp_directory_path() / "bsann_cli_test") {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "small.json") << R"({"version": 1,
      "grid": {"sample_rate_hz": 16000, "fft_size": 64, "band_lo_hz": 100, "band_hi_hz": 8000},
      "scene": {"preset": "fixed", "jitter_x": [-0.1, 0.1], "jitter_y": [-0.1, 0.1], "points_per_ear": 1},
      "network": {"num_bands": 4, "hidden": 8, "layers": 1},
      "train": {"psz": {"epochs": 3, "batch_size": 2, "holdout_fraction": 0},
                "xtc": {"epochs": 2, "batch_size": 2, "holdout_fraction": 0}}})";
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string operator()(const std::string& name) const { return (dir / name).string(); }
};

int run(std::vector<std::string> args) { return cli::run(args); }

std::string text_of(const std::string& path) {
  const auto b = io::read_file(path);
  return {b.begin(), b.end()};
}

}  // namespace

TEST_CASE("usage errors exit with 2", "[cli]") {
  REQUIRE(run({}) == cli::kExitUsage);
  REQUIRE(run({"frobnicate"}) == cli::kExitUsage);
  REQUIRE(run({"--help"}) == cli::kExitOk);
  REQUIRE(run({"gen-dataset", "--out", "x"}) == cli::kExitUsage);
  REQUIRE(run({"train", "--stage", "both", "--dataset", "d", "--out", "o"}) == cli::kExitUsage);
  REQUIRE(run({"gen-dataset", "--out", "x", "--count", "1", "--threads", "0"}) == cli::kExitUsage);
}

TEST_CASE("end-to-end runs are reproducible", "[cli]") {
  Workdir w;
  const std::string cfg = w("small.json");
  const auto gen = [&](const std::string& out, const std::string& mode) {
    return run({"gen-dataset", "--config", cfg, "--out", w(out), "--count", "3", "--seed", "5", "--mode", mode});
  };
  REQUIRE(gen("a.bsz", "physically_informed") == 0);
  REQUIRE(gen("b.bsz", "physically_informed") == 0);
  REQUIRE(io::sha256_file(w("a.bsz")) == io::sha256_file(w("b.bsz")));
  REQUIRE(fs::exists(w("a.bsz.manifest.json")));

  SECTION("mode flag changes the transfer functions") {
    REQUIRE(gen("p.bsz", "point_source") == 0);
    const auto a = dataset::read_dataset(w("a.bsz"));
    const auto p = dataset::read_dataset(w("p.bsz"));
    REQUIRE(a.samples[0].atf.values() != p.samples[0].atf.values());
    REQUIRE(p.build.mode == acoustic::AtfMode::point_source);
  }

  SECTION("train, eval and export") {
    const auto train = [&](const std::string& out) {
      return run({"train", "--stage", "psz", "--dataset", w("a.bsz"), "--out", w(out), "--config", cfg});
    };
    REQUIRE(train("s1.ckpt") == 0);
    REQUIRE(train("s1b.ckpt") == 0);
    REQUIRE(io::sha256_file(w("s1.ckpt")) == io::sha256_file(w("s1b.ckpt")));
    std::ifstream log(w("s1.ckpt.log.jsonl"));
    int lines = 0;
    for (std::string line; std::getline(log, line);) ++lines;
    REQUIRE(lines == 3);

    REQUIRE(run({"train", "--stage", "xtc", "--dataset", w("a.bsz"), "--out", w("s2.ckpt"), "--config", cfg}) ==
            cli::kExitUsage);
    REQUIRE(run({"train", "--stage", "xtc", "--dataset", w("a.bsz"), "--out", w("s2.ckpt"), "--config", cfg,
                 "--teacher", w("s1.ckpt")}) == 0);

    REQUIRE(run({"eval", "--ckpt", w("s2.ckpt"), "--default-scene", "--out", w("ev1")}) == 0);
    REQUIRE(run({"eval", "--ckpt", w("s2.ckpt"), "--default-scene", "--out", w("ev2")}) == 0);
    REQUIRE(text_of(w("ev1/metrics.csv")) == text_of(w("ev2/metrics.csv")));
    REQUIRE(fs::exists(w("ev1/manifest.json")));
    REQUIRE(run({"eval", "--ckpt", w("s2.ckpt"), "--scene", w("ev1/scene.json"), "--out", w("ev3")}) == 0);
    REQUIRE(text_of(w("ev1/metrics.csv")) == text_of(w("ev3/metrics.csv")));
    REQUIRE(run({"eval", "--ckpt", w("missing.ckpt"), "--default-scene", "--out", w("ev4")}) == cli::kExitUsage);
    REQUIRE(run({"eval", "--ckpt", w("s2.ckpt"), "--out", w("ev4")}) == cli::kExitUsage);

    REQUIRE(run({"export-filters", "--ckpt", w("s2.ckpt"), "--pose", "-0.5,1,0.5", "--out", w("f.wav")}) ==
            cli::kExitUsage);
    REQUIRE(run({"export-filters", "--ckpt", w("s2.ckpt"), "--pose", "-0.5,1,0.5,x", "--out", w("f.wav")}) ==
            cli::kExitUsage);
    const nn::PoseInput pose{{-0.45, 1.02}, {0.5, 0.97}};
    REQUIRE(run({"export-filters", "--ckpt", w("s2.ckpt"), "--pose", "-0.45,1.02,0.5,0.97", "--out", w("f.wav")}) == 0);
    const auto params = nn::load_checkpoint(w("s2.ckpt"));
    const auto g = nn::forward(params, pose);
    const auto wav = io::read_wav_float(w("f.wav"));
    REQUIRE(wav.channels == g.speakers() * nn::kPrograms);
    REQUIRE(wav.sample_rate == 16000);
    double peak = 0.0, err = 0.0;
    for (int l = 0; l < g.speakers(); ++l)
      for (int p = 0; p < nn::kPrograms; ++p) {
        const auto ch = wav.channel(l * nn::kPrograms + p);
        const std::vector<double> ir(ch.begin(), ch.end());
        const auto spec = forward_real_fft(ir, params.grid.fft_size());
        for (int n = 0; n < g.bins(); ++n) {
          peak = std::max(peak, std::abs(g.at(l, p, n)));
          err = std::max(err, std::abs(spec[n] - g.at(l, p, n)));
        }
      }
    REQUIRE(err <= 1e-5 * peak);
    REQUIRE(fs::exists(w("f.wav.json")));
  }
}

TEST_CASE("zero-parameter checkpoint exports silence", "[cli]") {
  Workdir w;
  nn::NetworkShape shape;
  shape.num_bands = 2;
  shape.hidden = 4;
  shape.layers = 1;
  shape.speakers = 2;
  auto params = nn::init_network(shape, {}, FrequencyGrid(16000.0, 16, 100.0, 8000.0), 1);
  std::fill(params.theta.begin(), params.theta.end(), 0.0);
  nn::save_checkpoint(w("zero.ckpt"), params);
  REQUIRE(run({"export-filters", "--ckpt", w("zero.ckpt"), "--pose", "-0.5,1,0.5,1", "--out", w("z.wav")}) == 0);
  const auto wav = io::read_wav_float(w("z.wav"));
  REQUIRE(wav.channels == 8);
  REQUIRE(wav.frames() == 16);
  for (float v : wav.interleaved) REQUIRE(v == 0.0f);
}

TEST_CASE("empty datasets and runtime failures", "[cli]") {
  Workdir w;
  REQUIRE(run({"gen-dataset", "--config", w("small.json"), "--out", w("e.bsz"), "--count", "0"}) == 0);
  REQUIRE(dataset::read_dataset(w("e.bsz")).samples.empty());

  std::ofstream(w("bad.bsz")) << "not a dataset";
  REQUIRE(run({"train", "--stage", "psz", "--dataset", w("bad.bsz"), "--out", w("o.ckpt")}) == cli::kExitRuntime);
  REQUIRE(fs::exists(w("o.ckpt.manifest.json")));

  std::ofstream(w("typo.json")) << R"({"version": 1, "loss": {"lamda": 1}})";
  REQUIRE(run({"gen-dataset", "--config", w("typo.json"), "--out", w("t.bsz"), "--count", "1"}) == cli::kExitUsage);
}

TEST_CASE("BSANN_THREADS is validated like --threads", "[cli]") {
  Workdir w;
  ::setenv("BSANN_THREADS", "zero", 1);
  REQUIRE(run({"gen-dataset", "--config", w("small.json"), "--out", w("e.bsz"), "--count", "0"}) == cli::kExitUsage);
  ::setenv("BSANN_THREADS", "1", 1);
  REQUIRE(run({"gen-dataset", "--config", w("small.json"), "--out", w("e.bsz"), "--count", "0"}) == 0);
  ::unsetenv("BSANN_THREADS");
}
