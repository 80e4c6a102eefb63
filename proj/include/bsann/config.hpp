#pragma once

#include <string>

#include "bsann/dataset.hpp"
#include "bsann/training.hpp"

// Run configuration: one JSON document with an explicit version. Every
// section is optional and missing keys keep their defaults; unknown keys are
// errors.
namespace bsann::config {

inline constexpr int kConfigVersion = 1;

struct EvalConfig {
  double cap_db = 120.0;
};

struct Config {
  FrequencyGrid grid;
  std::string scene_preset = "training";  // "training" or "fixed"
  dataset::SceneRanges scene = dataset::SceneRanges::training();
  dataset::BuildOptions build;
  nn::NetworkShape network;
  losses::LossWeights loss;
  training::TrainConfig psz;  // stage 1 schedule
  training::TrainConfig xtc;  // stage 2 schedule
  EvalConfig eval;

  // Stage schedule with the shared network and loss settings filled in.
  training::TrainConfig train_config(training::Stage stage) const;
  void validate() const;
};

Config defaults();
Config parse_config(const std::string& text);
Config load_config(const std::string& path);
// Canonical JSON of every setting (the manifest snapshot).
std::string to_json(const Config& c);

}  // namespace bsann::config
