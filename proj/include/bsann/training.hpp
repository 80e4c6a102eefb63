#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bsann/dataset.hpp"
#include "bsann/losses.hpp"
#include "bsann/nn.hpp"

namespace bsann::training {

enum class Stage { psz, xtc };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct TrainConfig {
  Stage stage = Stage::psz;
  int epochs = 40;
  int batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  losses::LossWeights weights;
  nn::NetworkShape network;      // speakers is taken from the dataset
  double holdout_fraction = 0.1; // trailing scenes held out for early stopping
  int patience = 10;             // epochs without held-out improvement; 0 disables
  std::string log_path;          // JSON lines, one per epoch; empty disables

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;  // NaN without a held-out split
  std::map<std::string, double> components;  // mean over the training scenes
  double wall_s = 0.0;
};

struct TrainResult {
  nn::NetworkParams params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool diverged = false;
  std::string divergence;
};

// Number of scenes held out at the end of a dataset of n scenes.
std::size_t holdout_count(std::size_t n, double fraction);

// Stage 1: fresh network, minimizes loss_psz.
TrainResult train_psz(const dataset::Dataset& ds, const TrainConfig& cfg);
TrainResult train_psz(const dataset::Dataset& ds, const TrainConfig& cfg, const nn::NetworkParams& init);

// Stage 2: starts from the teacher, minimizes loss_total against the
// teacher's filters and diagonal targets captured per scene.
TrainResult train_xtc(const dataset::Dataset& ds, const nn::NetworkParams& teacher, const TrainConfig& cfg);

// Per-scene stage-2 anchors.
struct TeacherCache {
  std::vector<nn::FilterBank> banks;
  std::vector<losses::XtcTargets> xtc_targets;
};
TeacherCache capture_teacher(const dataset::Dataset& ds, const nn::NetworkParams& teacher, double epsilon);

struct OracleOptions {
  int steps = 3000;
  double learning_rate = 0.02;
  std::uint64_t seed = 1;
  double init_scale = 0.1;  // std of the random starting bank
};

struct OracleResult {
  nn::FilterBank filters;
  double loss = 0.0;
  std::vector<double> history;  // loss before each step
};

// Adam directly on the filter entries of one scene (no network).
OracleResult direct_filter_oracle(const acoustic::AtfTensor& atf, const losses::TargetSpec& targets,
                                  const losses::CompactnessConfig& compact, const losses::LossWeights& w,
                                  const OracleOptions& opt);
// Same, minimizing loss_total anchored on `teacher` from its filters.
OracleResult direct_filter_oracle_xtc(const acoustic::AtfTensor& atf, const losses::TargetSpec& targets,
                                      const nn::FilterBank& teacher, const losses::CompactnessConfig& compact,
                                      const losses::LossWeights& w, const OracleOptions& opt);

// Mean loss_psz of a network over the given scenes.
double mean_psz_loss(const nn::NetworkParams& params, const dataset::Dataset& ds,
                     std::span<const std::size_t> scenes, const losses::LossWeights& w);

}  // namespace bsann::training
