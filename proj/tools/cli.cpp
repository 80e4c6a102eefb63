#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "bsann/config.hpp"
#include "bsann/dataset.hpp"
#include "bsann/eval.hpp"
#include "bsann/io.hpp"
#include "bsann/kernels.hpp"
#include "bsann/training.hpp"
#include "json_helpers.hpp"

namespace bsann::cli {

using detail::json;
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::array<const char*, nn::kPrograms> kProgramNames{"1L", "1R", "2L", "2R"};

struct Common {
  int threads = 0;
  std::string config_path;
};

config::Config load_config_or_defaults(const std::string& path) {
  return path.empty() ? config::defaults() : config::load_config(path);
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string io_text(const std::string& path) {
  const auto bytes = io::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

std::string manifest_path_for(const std::string& out) { return out + ".manifest.json"; }

// Everything needed to replay a run; no timestamps so reruns match byte for byte.
void write_manifest(const std::string& path, const std::string& command, const std::vector<std::string>& args,
                    const config::Config& cfg, const json& seeds, const std::vector<std::string>& inputs,
                    const json& outputs) {
  json in = json::object();
  for (const auto& p : inputs) in[p] = io::sha256_file(p);
  const json m = {{"tool", "bsann"},
                  {"version", kToolVersion},
                  {"command", command},
                  {"args", args},
                  {"config", json::parse(config::to_json(cfg))},
                  {"seeds", seeds},
                  {"inputs", in},
                  {"outputs", outputs}};
  write_text(path, m.dump(2) + "\n");
}

nn::PoseInput parse_pose(const std::string& text) {
  std::array<double, nn::kPoseDim> v{};
  std::stringstream ss(text);
  std::string item;
  int k = 0;
  while (std::getline(ss, item, ',')) {
    if (k == nn::kPoseDim) throw UsageError("pose needs exactly four values: " + text);
    std::size_t used = 0;
    try {
      v[k] = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("malformed pose value '" + item + "'");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size() || !std::isfinite(v[k])) throw UsageError("malformed pose value '" + item + "'");
    ++k;
  }
  if (k != nn::kPoseDim || text.empty() || text.back() == ',')
    throw UsageError("pose needs exactly four values x1,y1,x2,y2: " + text);
  return nn::PoseInput::from_vector(v);
}

int threads_from_env() {
  const char* env = std::getenv("BSANN_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  int n = 0;
  const char* end = env + std::strlen(env);
  const auto [ptr, ec] = std::from_chars(env, end, n);
  if (ec != std::errc() || ptr != end || n < 1) throw UsageError(std::string("BSANN_THREADS must be a positive integer, got '") + env + "'");
  return n;
}

int gen_dataset(const std::vector<std::string>& args, const Common& common, const std::string& out,
                std::size_t count, const std::string& mode, std::uint64_t seed) {
  config::Config cfg = load_config_or_defaults(common.config_path);
  if (!mode.empty()) cfg.build.mode = acoustic::atf_mode_from_string(mode);
  std::vector<std::string> inputs;
  if (!common.config_path.empty()) inputs.push_back(common.config_path);
  write_manifest(manifest_path_for(out), "gen-dataset", args, cfg, {{"dataset", seed}}, inputs, json::array({out}));

  const auto ds = dataset::generate_dataset(cfg.grid, cfg.build, cfg.scene, seed, count,
                                            [](std::size_t done, std::size_t total) {
                                              std::cerr << "scene " << done << "/" << total << "\n";
                                            });
  ensure_parent(out);
  dataset::write_dataset(out, ds);
  std::cout << "wrote " << ds.samples.size() << " scenes to " << out << " (sha256 " << io::sha256_file(out)
            << ")\n";
  return kExitOk;
}

int train(const std::vector<std::string>& args, const Common& common, const std::string& stage_name,
          const std::string& dataset_path, const std::string& out, const std::string& teacher_path,
          std::string log_path) {
  const training::Stage stage = training::stage_from_string(stage_name);
  if (stage == training::Stage::xtc && teacher_path.empty())
    throw UsageError("stage xtc needs --teacher");
  if (stage == training::Stage::psz && !teacher_path.empty())
    throw UsageError("--teacher only applies to stage xtc");
  require_file(dataset_path, "dataset");
  if (!teacher_path.empty()) require_file(teacher_path, "teacher checkpoint");
  const config::Config cfg = load_config_or_defaults(common.config_path);
  training::TrainConfig tc = cfg.train_config(stage);
  if (log_path.empty()) log_path = out + ".log.jsonl";
  tc.log_path = log_path;

  std::vector<std::string> inputs{dataset_path};
  if (!teacher_path.empty()) inputs.push_back(teacher_path);
  if (!common.config_path.empty()) inputs.push_back(common.config_path);
  write_manifest(manifest_path_for(out), "train", args, cfg, {{"train", tc.seed}}, inputs,
                 json::array({out, log_path}));

  const auto ds = dataset::read_dataset(dataset_path);
  if (ds.samples.empty()) throw ConfigError("dataset " + dataset_path + " holds no scenes");
  if (!common.config_path.empty() && !(ds.grid == cfg.grid))
    throw ConfigError("config grid differs from the grid the dataset was generated on");
  ensure_parent(out);
  ensure_parent(log_path);
  if (fs::exists(log_path)) fs::remove(log_path);

  training::TrainResult r;
  if (stage == training::Stage::psz) {
    r = training::train_psz(ds, tc);
  } else {
    r = training::train_xtc(ds, nn::load_checkpoint(teacher_path), tc);
  }
  json extra = {{"stage", training::to_string(stage)},
                {"epochs_run", r.history.size()},
                {"best_epoch", r.best_epoch},
                {"diverged", r.diverged},
                {"dataset_sha256", io::sha256_file(dataset_path)},
                {"config", json::parse(config::to_json(cfg))}};
  if (!teacher_path.empty()) extra["teacher_sha256"] = io::sha256_file(teacher_path);
  nn::save_checkpoint(out, r.params, extra.dump());
  for (const auto& h : r.history)
    std::cerr << "epoch " << h.epoch << " train " << h.train_loss << " holdout " << h.holdout_loss << "\n";
  if (r.diverged) {
    std::cerr << "error: training diverged (" << r.divergence << "); wrote the last finite parameters to " << out
              << "\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << out << " (best epoch " << r.best_epoch << ", sha256 " << io::sha256_file(out) << ")\n";
  return kExitOk;
}

int evaluate(const std::vector<std::string>& args, const Common& common, const std::string& ckpt_path,
             const std::string& scene_path, bool default_scene, const std::string& out_dir,
             const std::string& mode) {
  if (scene_path.empty() == !default_scene) throw UsageError("give exactly one of --scene or --default-scene");
  require_file(ckpt_path, "checkpoint");
  if (!scene_path.empty()) require_file(scene_path, "scene");
  config::Config cfg = load_config_or_defaults(common.config_path);
  if (!mode.empty()) cfg.build.mode = acoustic::atf_mode_from_string(mode);

  const fs::path dir(out_dir);
  const std::string csv = (dir / "metrics.csv").string();
  const std::string scene_copy = (dir / "scene.json").string();
  std::vector<std::string> inputs{ckpt_path};
  if (!scene_path.empty()) inputs.push_back(scene_path);
  if (!common.config_path.empty()) inputs.push_back(common.config_path);
  fs::create_directories(dir);
  write_manifest((dir / "manifest.json").string(), "eval", args, cfg, json::object(), inputs,
                 json::array({csv, eval::sidecar_path(csv), scene_copy}));

  const auto params = nn::load_checkpoint(ckpt_path);
  const dataset::SceneConfig scene =
      default_scene ? dataset::default_scene() : dataset::scene_from_json(io_text(scene_path));
  write_text(scene_copy, dataset::scene_to_json(scene) + "\n");
  if (static_cast<int>(scene.drivers.size()) != params.shape.speakers)
    throw ConfigError("scene has " + std::to_string(scene.drivers.size()) + " drivers but the checkpoint drives " +
                      std::to_string(params.shape.speakers));
  const auto plant = dataset::build_eval_plant(scene, params.grid, cfg.build);
  const auto g = nn::forward(params, scene.pose);
  const auto curves = eval::compute_metrics(plant, g, cfg.eval.cap_db);
  eval::export_curves(curves, csv);
  if (!curves.band_error.empty()) std::cerr << "warning: " << curves.band_error << "\n";
  const auto& m = curves.means;
  std::cout << "IZI " << m.izi[0] << " / " << m.izi[1] << " dB, IPI " << m.ipi[0] << " / " << m.ipi[1]
            << " dB, XTC " << m.xtc[0] << " / " << m.xtc[1] << " dB\n";
  return kExitOk;
}

int export_filters(const std::vector<std::string>& args, const Common& common, const std::string& ckpt_path,
                   const nn::PoseInput& pose, const std::string& out) {
  require_file(ckpt_path, "checkpoint");
  const config::Config cfg = load_config_or_defaults(common.config_path);
  const std::string meta_path = out + ".json";
  std::vector<std::string> inputs{ckpt_path};
  if (!common.config_path.empty()) inputs.push_back(common.config_path);
  write_manifest(manifest_path_for(out), "export-filters", args, cfg, json::object(), inputs,
                 json::array({out, meta_path}));

  const auto params = nn::load_checkpoint(ckpt_path);
  if (!params.region.contains(pose)) std::cerr << "warning: pose lies outside the trained pose region\n";
  const auto g = nn::forward(params, pose);
  const int L = g.speakers();
  const int channels = L * nn::kPrograms;
  const int taps = params.grid.fft_size();
  io::WavData wav;
  wav.channels = channels;
  wav.sample_rate = static_cast<int>(std::lround(params.grid.sample_rate_hz()));
  wav.interleaved.assign(static_cast<std::size_t>(taps) * channels, 0.0f);
  json map = json::array();
  for (int l = 0; l < L; ++l)
    for (int p = 0; p < nn::kPrograms; ++p) {
      const int c = l * nn::kPrograms + p;
      const auto ir = eval::filter_impulse_response(g, l, p);
      for (int t = 0; t < taps; ++t)
        wav.interleaved[static_cast<std::size_t>(t) * channels + c] = static_cast<float>(ir[t]);
      map.push_back({{"channel", c}, {"loudspeaker", l}, {"program", kProgramNames[p]}});
    }
  ensure_parent(out);
  io::write_wav_float(out, wav);
  const auto v = pose.as_vector();
  const json meta = {{"pose", {v[0], v[1], v[2], v[3]}},
                     {"grid", detail::grid_to_json(params.grid)},
                     {"taps", taps},
                     {"channel_order", "loudspeaker-major"},
                     {"channels", map},
                     {"checkpoint_sha256", io::sha256_file(ckpt_path)}};
  write_text(meta_path, meta.dump(2) + "\n");
  std::cout << "wrote " << channels << " impulse responses of " << taps << " taps to " << out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app("Personal sound zone and crosstalk filter design", "bsann");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Common common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--threads", common.threads, "Worker threads for parallel kernels (env BSANN_THREADS)")
        ->check(CLI::PositiveNumber);
  };

  std::function<int()> action;

  auto* gen = app.add_subcommand("gen-dataset", "Simulate scenes and write a dataset file");
  std::string gen_out, gen_mode;
  std::size_t gen_count = 0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--config", common.config_path, "JSON config")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Dataset path")->required();
  gen->add_option("--count", gen_count, "Number of scenes")->required()->check(CLI::NonNegativeNumber);
  gen->add_option("--mode", gen_mode, "ATF model")->check(CLI::IsMember({"point_source", "physically_informed"}));
  gen->add_option("--seed", gen_seed, "Dataset seed");
  add_common(gen);
  gen->callback([&] { action = [&] { return gen_dataset(args, common, gen_out, gen_count, gen_mode, gen_seed); }; });

  auto* tr = app.add_subcommand("train", "Train stage 1 (psz) or stage 2 (xtc)");
  std::string tr_stage, tr_dataset, tr_out, tr_teacher, tr_log;
  tr->add_option("--stage", tr_stage, "psz or xtc")->required()->check(CLI::IsMember({"psz", "xtc"}));
  tr->add_option("--dataset", tr_dataset, "Dataset path")->required();
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--teacher", tr_teacher, "Stage-1 checkpoint (stage xtc)");
  tr->add_option("--config", common.config_path, "JSON config")->check(CLI::ExistingFile);
  tr->add_option("--log", tr_log, "JSON-lines log (default <out>.log.jsonl)");
  add_common(tr);
  tr->callback([&] { action = [&] { return train(args, common, tr_stage, tr_dataset, tr_out, tr_teacher, tr_log); }; });

  auto* ev = app.add_subcommand("eval", "Metric curves of a checkpoint on one scene");
  std::string ev_ckpt, ev_scene, ev_out, ev_mode;
  bool ev_default = false;
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint path")->required();
  auto* scene_opt = ev->add_option("--scene", ev_scene, "Scene JSON");
  auto* default_opt = ev->add_flag("--default-scene", ev_default, "Use the default desk scene");
  scene_opt->excludes(default_opt);
  ev->add_option("--out", ev_out, "Output directory")->required();
  ev->add_option("--config", common.config_path, "JSON config")->check(CLI::ExistingFile);
  ev->add_option("--mode", ev_mode, "ATF model of the plant")
      ->check(CLI::IsMember({"point_source", "physically_informed"}));
  add_common(ev);
  ev->callback([&] { action = [&] { return evaluate(args, common, ev_ckpt, ev_scene, ev_default, ev_out, ev_mode); }; });

  auto* ex = app.add_subcommand("export-filters", "Write the filters for one pose as a float WAV");
  std::string ex_ckpt, ex_pose, ex_out;
  ex->add_option("--ckpt", ex_ckpt, "Checkpoint path")->required();
  ex->add_option("--pose", ex_pose, "x1,y1,x2,y2 in metres")->required();
  ex->add_option("--out", ex_out, "WAV path")->required();
  ex->add_option("--config", common.config_path, "JSON config")->check(CLI::ExistingFile);
  add_common(ex);
  ex->callback([&] { action = [&] { return export_filters(args, common, ex_ckpt, parse_pose(ex_pose), ex_out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (common.threads == 0) common.threads = threads_from_env();
    kernels::set_num_threads(common.threads);
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace bsann::cli
