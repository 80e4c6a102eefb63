#include "bsann/training.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>

#include "bsann/rng.hpp"
#include "bsann/targets.hpp"
#include "json_helpers.hpp"

namespace bsann::training {

using detail::json;
using nn::FilterBank;
using nn::NetworkParams;

std::string to_string(Stage s) { return s == Stage::psz ? "psz" : "xtc"; }

Stage stage_from_string(const std::string& s) {
  if (s == "psz") return Stage::psz;
  if (s == "xtc") return Stage::xtc;
  throw ConfigError("unknown training stage '" + s + "' (expected psz or xtc)");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and nonnegative");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must lie in [0, 1)");
  if (patience < 0) throw ConfigError("patience must be nonnegative");
  if (network.num_bands < 1 || network.hidden < 1 || network.layers < 1 || !(network.sigma > 0.0))
    throw ConfigError("network shape must be positive");
  weights.validate();
}

std::size_t holdout_count(std::size_t n, double fraction) {
  const auto h = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  return h < n ? h : 0;
}

namespace {

using Components = std::map<std::string, double>;

// Loss of one scene at filters g; adds scale * dL/dg into grad.
using SceneLoss = std::function<double(std::size_t scene, const FilterBank& g, FilterBank* grad, double scale,
                                       Components* comps)>;

Components psz_components(const losses::PszComponents& c) {
  return {{"bright", c.bright}, {"dark", c.dark}, {"gain", c.gain}, {"compact", c.compact}, {"total", c.total}};
}

Components total_components(const losses::TotalComponents& c) {
  return {{"off", c.xtc.off},   {"diag", c.xtc.diag}, {"reg", c.xtc.reg},         {"xtc", c.xtc.total},
          {"bright", c.bright}, {"dark", c.dark},     {"gain", c.gain},           {"compact", c.compact},
          {"teach", c.teach},   {"total", c.total}};
}

struct BatchResult {
  double loss = 0.0;
  Components comps;
  std::vector<double> grad;
};

// Mean loss and parameter gradient over one batch. Scenes run concurrently;
// the reduction over the batch is in a fixed order.
BatchResult evaluate_batch(const NetworkParams& params, const dataset::Dataset& ds,
                           std::span<const std::size_t> scenes, const SceneLoss& loss, bool want_grad) {
  const std::size_t B = scenes.size();
  std::vector<nn::PoseInput> poses(B);
  for (std::size_t b = 0; b < B; ++b) poses[b] = ds.samples[scenes[b]].pose;
  nn::ForwardCache cache;
  const auto banks = nn::forward_batch(params, poses, want_grad ? &cache : nullptr);
  std::vector<FilterBank> grads;
  if (want_grad) grads.assign(B, FilterBank(params.shape.speakers, params.grid));
  std::vector<double> values(B);
  std::vector<Components> comps(B);
  std::vector<std::exception_ptr> errors(B);
  const double scale = 1.0 / static_cast<double>(B);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < B; ++b) {
    try {
      values[b] = loss(scenes[b], banks[b], want_grad ? &grads[b] : nullptr, scale, &comps[b]);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  BatchResult r;
  for (std::size_t b = 0; b < B; ++b) {
    r.loss += values[b] * scale;
    for (const auto& [k, v] : comps[b]) r.comps[k] += v * scale;
  }
  if (want_grad && std::isfinite(r.loss)) r.grad = nn::backward_batch(params, cache, grads);
  return r;
}

double mean_loss(const NetworkParams& params, const dataset::Dataset& ds, std::span<const std::size_t> scenes,
                 const SceneLoss& loss, int batch_size) {
  double total = 0.0;
  for (std::size_t start = 0; start < scenes.size(); start += batch_size) {
    const std::size_t len = std::min<std::size_t>(batch_size, scenes.size() - start);
    total += evaluate_batch(params, ds, scenes.subspan(start, len), loss, false).loss * static_cast<double>(len);
  }
  return total / static_cast<double>(scenes.size());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void append_log(std::ofstream& log, Stage stage, const EpochRecord& rec) {
  json comps = json::object();
  for (const auto& [k, v] : rec.components) comps[k] = finite_or_null(v);
  json line = {{"stage", to_string(stage)},
               {"epoch", rec.epoch},
               {"train_loss", finite_or_null(rec.train_loss)},
               {"holdout_loss", finite_or_null(rec.holdout_loss)},
               {"components", comps},
               {"wall_s", rec.wall_s}};
  log << line.dump() << '\n';
  log.flush();
}

void check_dataset(const dataset::Dataset& ds) {
  if (ds.samples.empty()) throw ConfigError("training needs a nonempty dataset");
  const int L = ds.samples.front().atf.speakers();
  for (const auto& s : ds.samples)
    if (s.atf.speakers() != L || !(s.atf.grid() == ds.grid))
      throw ConfigError("dataset scenes disagree on speaker count or grid");
}

TrainResult run(const dataset::Dataset& ds, const TrainConfig& cfg, NetworkParams params, const SceneLoss& loss) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = ds.samples.size();
  const std::size_t held = holdout_count(n, cfg.holdout_fraction);
  std::vector<std::size_t> train(n - held), holdout(held);
  std::iota(train.begin(), train.end(), std::size_t{0});
  std::iota(holdout.begin(), holdout.end(), n - held);

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path, std::ios::trunc);
    if (!log) throw ConfigError("cannot open training log " + cfg.log_path);
  }

  TrainResult result;
  result.params = params;
  NetworkParams last_good = params;
  nn::AdamState adam = nn::AdamState::zeros(params.theta.size());
  const kernels::AdamHyper hyper{cfg.learning_rate, 0.9, 0.999, 1e-8};
  Rng rng(cfg.seed ^ 0x5eed5eed5eedULL);
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.below(i)]);
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      for (std::size_t s = 0; s < train.size(); s += cfg.batch_size) {
        const std::size_t len = std::min<std::size_t>(cfg.batch_size, train.size() - s);
        BatchResult b = evaluate_batch(params, ds, std::span<const std::size_t>(train).subspan(s, len), loss, true);
        if (!std::isfinite(b.loss)) throw NonFiniteError("non-finite training loss");
        const double w = static_cast<double>(len) / static_cast<double>(train.size());
        rec.train_loss += b.loss * w;
        for (const auto& [k, v] : b.comps) rec.components[k] += v * w;
        last_good = params;
        nn::adam_step(params.theta, b.grad, adam, hyper);
      }
    } catch (const NonFiniteError& e) {
      result.diverged = true;
      result.divergence = "epoch " + std::to_string(epoch) + ": " + e.what();
      result.params = last_good;
      return result;
    }
    rec.holdout_loss = held ? mean_loss(params, ds, holdout, loss, cfg.batch_size)
                            : std::numeric_limits<double>::quiet_NaN();
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (log.is_open()) append_log(log, cfg.stage, rec);

    if (!held) {
      result.params = params;
      result.best_epoch = epoch;
      continue;
    }
    if (!std::isfinite(rec.holdout_loss)) {
      result.diverged = true;
      result.divergence = "epoch " + std::to_string(epoch) + ": non-finite held-out loss";
      return result;
    }
    if (rec.holdout_loss < best) {
      best = rec.holdout_loss;
      result.params = params;
      result.best_epoch = epoch;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

SceneLoss psz_loss(const dataset::Dataset& ds, const losses::CompactnessConfig& compact,
                   const losses::LossWeights& w) {
  return [&ds, compact, w](std::size_t i, const FilterBank& g, FilterBank* grad, double scale, Components* comps) {
    const auto& s = ds.samples[i];
    const auto c = losses::loss_psz(s.atf, g, s.targets, compact, w, grad, scale);
    if (comps) *comps = psz_components(c);
    return c.total;
  };
}

// Flat (re, im) view of a bank for the optimizer; DC and Nyquist stay real.
std::vector<double> flatten(const FilterBank& g) {
  std::vector<double> out(2 * g.values().size());
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    out[2 * i] = g.values()[i].real();
    out[2 * i + 1] = g.values()[i].imag();
  }
  return out;
}

void unflatten(std::span<const double> theta, FilterBank& g) {
  for (std::size_t i = 0; i < g.values().size(); ++i) g.values()[i] = {theta[2 * i], theta[2 * i + 1]};
}

OracleResult optimize_bank(FilterBank g, const OracleOptions& opt,
                           const std::function<double(const FilterBank&, FilterBank&)>& loss) {
  if (opt.steps < 0 || !(opt.learning_rate >= 0.0)) throw ConfigError("oracle steps and rate must be nonnegative");
  const int N = g.bins();
  std::vector<double> theta = flatten(g);
  nn::AdamState adam = nn::AdamState::zeros(theta.size());
  const kernels::AdamHyper hyper{opt.learning_rate, 0.9, 0.999, 1e-8};
  OracleResult r;
  r.history.reserve(opt.steps);
  FilterBank grad(g.speakers(), g.grid());
  for (int step = 0; step < opt.steps; ++step) {
    grad.fill(0.0);
    const double value = loss(g, grad);
    if (!std::isfinite(value)) throw NonFiniteError("oracle loss became non-finite");
    r.history.push_back(value);
    std::vector<double> flat = flatten(grad);
    for (std::size_t c = 0; c < grad.values().size(); ++c) {
      const int n = static_cast<int>(c % N);
      if (n == 0 || n == N - 1) flat[2 * c + 1] = 0.0;
    }
    nn::adam_step(theta, flat, adam, hyper);
    unflatten(theta, g);
  }
  FilterBank scratch(g.speakers(), g.grid());
  r.loss = loss(g, scratch);
  r.filters = std::move(g);
  return r;
}

}  // namespace

TrainResult train_psz(const dataset::Dataset& ds, const TrainConfig& cfg) {
  check_dataset(ds);
  nn::NetworkShape shape = cfg.network;
  shape.speakers = ds.samples.front().atf.speakers();
  return train_psz(ds, cfg, nn::init_network(shape, dataset::pose_region(ds.ranges), ds.grid, cfg.seed));
}

TrainResult train_psz(const dataset::Dataset& ds, const TrainConfig& cfg, const NetworkParams& init) {
  check_dataset(ds);
  if (init.shape.speakers != ds.samples.front().atf.speakers() || !(init.grid == ds.grid))
    throw ConfigError("network does not match the dataset's speakers or grid");
  const auto compact = losses::CompactnessConfig::defaults(ds.grid);
  return run(ds, cfg, init, psz_loss(ds, compact, cfg.weights));
}

TeacherCache capture_teacher(const dataset::Dataset& ds, const NetworkParams& teacher, double epsilon) {
  TeacherCache c;
  c.banks.reserve(ds.samples.size());
  c.xtc_targets.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    c.banks.push_back(nn::forward(teacher, s.pose));
    c.xtc_targets.push_back(targets::capture_xtc_targets(s.atf, c.banks.back(), epsilon));
  }
  return c;
}

TrainResult train_xtc(const dataset::Dataset& ds, const NetworkParams& teacher, const TrainConfig& cfg) {
  check_dataset(ds);
  teacher.validate();
  if (teacher.shape.speakers != ds.samples.front().atf.speakers() || !(teacher.grid == ds.grid))
    throw ConfigError("teacher does not match the dataset's speakers or grid");
  const auto compact = losses::CompactnessConfig::defaults(ds.grid);
  const TeacherCache cache = capture_teacher(ds, teacher, cfg.weights.epsilon);
  const losses::LossWeights w = cfg.weights;
  const SceneLoss loss = [&](std::size_t i, const FilterBank& g, FilterBank* grad, double scale, Components* comps) {
    const auto& s = ds.samples[i];
    const auto c = losses::loss_total(s.atf, g, s.targets, cache.xtc_targets[i], cache.banks[i], compact, w, grad,
                                      scale);
    if (comps) *comps = total_components(c);
    return c.total;
  };
  return run(ds, cfg, teacher, loss);
}

OracleResult direct_filter_oracle(const acoustic::AtfTensor& atf, const losses::TargetSpec& targets,
                                  const losses::CompactnessConfig& compact, const losses::LossWeights& w,
                                  const OracleOptions& opt) {
  w.validate();
  FilterBank g(atf.speakers(), atf.grid());
  Rng rng(opt.seed);
  const int N = g.bins();
  for (std::size_t c = 0; c < g.values().size(); ++c) {
    const int n = static_cast<int>(c % N);
    const double re = rng.normal(), im = rng.normal();
    g.values()[c] = opt.init_scale * cplx(re, (n == 0 || n == N - 1) ? 0.0 : im);
  }
  return optimize_bank(std::move(g), opt, [&](const FilterBank& f, FilterBank& grad) {
    return losses::loss_psz(atf, f, targets, compact, w, &grad).total;
  });
}

OracleResult direct_filter_oracle_xtc(const acoustic::AtfTensor& atf, const losses::TargetSpec& targets,
                                      const FilterBank& teacher, const losses::CompactnessConfig& compact,
                                      const losses::LossWeights& w, const OracleOptions& opt) {
  w.validate();
  const losses::XtcTargets xt = targets::capture_xtc_targets(atf, teacher, w.epsilon);
  return optimize_bank(teacher, opt, [&](const FilterBank& f, FilterBank& grad) {
    return losses::loss_total(atf, f, targets, xt, teacher, compact, w, &grad).total;
  });
}

double mean_psz_loss(const NetworkParams& params, const dataset::Dataset& ds, std::span<const std::size_t> scenes,
                     const losses::LossWeights& w) {
  if (scenes.empty()) throw ConfigError("no scenes to evaluate");
  const auto compact = losses::CompactnessConfig::defaults(ds.grid);
  return mean_loss(params, ds, scenes, psz_loss(ds, compact, w), 16);
}

}  // namespace bsann::training
