#include "bsann/config.hpp"

#include <fstream>
#include <sstream>

#include "json_helpers.hpp"

namespace bsann::config {

using detail::json;

namespace {

void reject_unknown(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown key '" + k + "' in config section '" + section + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json schedule_json(const training::TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"seed", t.seed},
          {"holdout_fraction", t.holdout_fraction},
          {"patience", t.patience}};
}

void read_schedule(const json& j, const std::string& name, training::TrainConfig& t) {
  reject_unknown(j, name, {"epochs", "batch_size", "learning_rate", "seed", "holdout_fraction", "patience"});
  read(j, "epochs", t.epochs);
  read(j, "batch_size", t.batch_size);
  read(j, "learning_rate", t.learning_rate);
  read(j, "seed", t.seed);
  read(j, "holdout_fraction", t.holdout_fraction);
  read(j, "patience", t.patience);
}

dataset::SceneRanges preset_ranges(const std::string& name) {
  if (name == "training") return dataset::SceneRanges::training();
  if (name == "fixed") return dataset::SceneRanges::fixed();
  throw ConfigError("unknown scene preset '" + name + "' (expected training or fixed)");
}

Config from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, "top level", {"version", "grid", "scene", "atf", "network", "loss", "train", "eval"});
  if (!j.contains("version")) throw ConfigError("config is missing its version field");
  if (j.at("version").get<int>() != kConfigVersion)
    throw ConfigError("unsupported config version " + j.at("version").dump() + " (expected " +
                      std::to_string(kConfigVersion) + ")");
  Config c = defaults();
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown(g, "grid", {"sample_rate_hz", "fft_size", "band_lo_hz", "band_hi_hz"});
    double fs = c.grid.sample_rate_hz(), lo = c.grid.band_lo_hz(), hi = c.grid.band_hi_hz();
    int nfft = c.grid.fft_size();
    read(g, "sample_rate_hz", fs);
    read(g, "fft_size", nfft);
    read(g, "band_lo_hz", lo);
    read(g, "band_hi_hz", hi);
    c.grid = FrequencyGrid(fs, nfft, lo, hi);
  }
  if (j.contains("scene")) {
    json patch = j.at("scene");
    if (!patch.is_object()) throw ConfigError("config section 'scene' must be an object");
    if (patch.contains("preset")) {
      c.scene_preset = patch.at("preset").get<std::string>();
      patch.erase("preset");
    }
    json merged = json::parse(dataset::ranges_to_json(preset_ranges(c.scene_preset)));
    merged.merge_patch(patch);
    c.scene = dataset::ranges_from_json(merged.dump());
  }
  if (j.contains("atf")) {
    const json& a = j.at("atf");
    reject_unknown(a, "atf", {"mode", "synthetic_responses", "series_order", "convergence_tol", "speed_of_sound_mps"});
    if (a.contains("mode")) c.build.mode = acoustic::atf_mode_from_string(a.at("mode").get<std::string>());
    read(a, "synthetic_responses", c.build.synthetic_responses);
    read(a, "series_order", c.build.hrtf.series_order);
    read(a, "convergence_tol", c.build.hrtf.convergence_tol);
    read(a, "speed_of_sound_mps", c.build.hrtf.speed_of_sound_mps);
  }
  if (j.contains("network")) {
    const json& n = j.at("network");
    reject_unknown(n, "network", {"num_bands", "sigma", "hidden", "layers"});
    read(n, "num_bands", c.network.num_bands);
    read(n, "sigma", c.network.sigma);
    read(n, "hidden", c.network.hidden);
    read(n, "layers", c.network.layers);
  }
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    reject_unknown(l, "loss", {"alpha", "beta", "gamma", "lambda_xtc", "lambda_off", "lambda_diag", "lambda_reg",
                               "beta0", "kappa_min", "epsilon", "w_bz", "w_dz", "eta", "g_max"});
    auto& w = c.loss;
    read(l, "alpha", w.alpha);
    read(l, "beta", w.beta);
    read(l, "gamma", w.gamma);
    read(l, "lambda_xtc", w.lambda_xtc);
    read(l, "lambda_off", w.lambda_off);
    read(l, "lambda_diag", w.lambda_diag);
    read(l, "lambda_reg", w.lambda_reg);
    read(l, "beta0", w.beta0);
    read(l, "kappa_min", w.kappa_min);
    read(l, "epsilon", w.epsilon);
    read(l, "w_bz", w.w_bz);
    read(l, "w_dz", w.w_dz);
    read(l, "eta", w.eta);
    read(l, "g_max", w.g_max);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, "train", {"psz", "xtc"});
    if (t.contains("psz")) read_schedule(t.at("psz"), "train.psz", c.psz);
    if (t.contains("xtc")) read_schedule(t.at("xtc"), "train.xtc", c.xtc);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    reject_unknown(e, "eval", {"cap_db"});
    read(e, "cap_db", c.eval.cap_db);
  }
  c.validate();
  return c;
}

}  // namespace

training::TrainConfig Config::train_config(training::Stage stage) const {
  training::TrainConfig t = stage == training::Stage::psz ? psz : xtc;
  t.stage = stage;
  t.network = network;
  t.weights = loss;
  return t;
}

void Config::validate() const {
  scene.validate();
  loss.validate();
  train_config(training::Stage::psz).validate();
  train_config(training::Stage::xtc).validate();
  if (!(eval.cap_db > 0.0)) throw ConfigError("eval.cap_db must be positive");
  if (build.hrtf.series_order < 1) throw ConfigError("atf.series_order must be positive");
  if (!(build.hrtf.convergence_tol > 0.0)) throw ConfigError("atf.convergence_tol must be positive");
  if (!(build.hrtf.speed_of_sound_mps > 0.0)) throw ConfigError("atf.speed_of_sound_mps must be positive");
  grid.band_bins();
}

Config defaults() {
  Config c;
  c.psz.epochs = 40;
  c.psz.learning_rate = 1e-3;
  c.xtc.epochs = 20;
  c.xtc.learning_rate = 2e-4;
  return c;
}

Config parse_config(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const Config& c) {
  const auto& w = c.loss;
  json scene = json::parse(dataset::ranges_to_json(c.scene));
  scene["preset"] = c.scene_preset;
  const json j = {
      {"version", kConfigVersion},
      {"grid", detail::grid_to_json(c.grid)},
      {"scene", scene},
      {"atf",
       {{"mode", acoustic::to_string(c.build.mode)},
        {"synthetic_responses", c.build.synthetic_responses},
        {"series_order", c.build.hrtf.series_order},
        {"convergence_tol", c.build.hrtf.convergence_tol},
        {"speed_of_sound_mps", c.build.hrtf.speed_of_sound_mps}}},
      {"network",
       {{"num_bands", c.network.num_bands},
        {"sigma", c.network.sigma},
        {"hidden", c.network.hidden},
        {"layers", c.network.layers}}},
      {"loss",
       {{"alpha", w.alpha},
        {"beta", w.beta},
        {"gamma", w.gamma},
        {"lambda_xtc", w.lambda_xtc},
        {"lambda_off", w.lambda_off},
        {"lambda_diag", w.lambda_diag},
        {"lambda_reg", w.lambda_reg},
        {"beta0", w.beta0},
        {"kappa_min", w.kappa_min},
        {"epsilon", w.epsilon},
        {"w_bz", w.w_bz},
        {"w_dz", w.w_dz},
        {"eta", w.eta},
        {"g_max", w.g_max}}},
      {"train", {{"psz", schedule_json(c.psz)}, {"xtc", schedule_json(c.xtc)}}},
      {"eval", {{"cap_db", c.eval.cap_db}}}};
  return j.dump(2);
}

}  // namespace bsann::config
