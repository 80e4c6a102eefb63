#include "bsann/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsann/io.hpp"
#include "bsann/rng.hpp"
#include "json_helpers.hpp"

namespace bsann::nn {

using detail::json;

std::array<double, kPoseDim> PoseRegion::normalize(const PoseInput& p) const {
  const auto v = p.as_vector();
  std::array<double, kPoseDim> out{};
  for (int i = 0; i < kPoseDim; ++i) out[i] = (v[i] - center[i]) / half_range[i];
  return out;
}

bool PoseRegion::contains(const PoseInput& p) const {
  const auto s = normalize(p);
  return std::all_of(s.begin(), s.end(), [](double x) { return std::abs(x) <= 1.0 + 1e-12; });
}

FilterBank::FilterBank(int speakers, FrequencyGrid grid)
    : speakers_(speakers), grid_(std::move(grid)),
      values_(static_cast<std::size_t>(speakers) * kPrograms * grid_.num_bins()) {
  if (speakers <= 0) throw ConfigError("filter bank needs at least one loudspeaker");
}

void FilterBank::fill(cplx v) { std::fill(values_.begin(), values_.end(), v); }

FilterBank& FilterBank::operator*=(cplx s) {
  for (cplx& v : values_) v *= s;
  return *this;
}

bool FilterBank::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

std::vector<DenseLayer> NetworkParams::layout() const {
  std::vector<DenseLayer> out;
  std::size_t off = 0;
  int cols = 2 * shape.num_bands;
  for (int i = 0; i < shape.layers; ++i) {
    out.push_back({off, off + static_cast<std::size_t>(shape.hidden) * cols, shape.hidden, cols});
    off += static_cast<std::size_t>(shape.hidden) * cols + shape.hidden;
    cols = shape.hidden;
  }
  const int rows = output_dim();
  out.push_back({off, off + static_cast<std::size_t>(rows) * cols, rows, cols});
  return out;
}

std::size_t parameter_count(const NetworkShape& shape, const FrequencyGrid& grid) {
  NetworkParams p;
  p.shape = shape;
  p.grid = grid;
  const auto lay = p.layout();
  const DenseLayer& last = lay.back();
  return last.b_offset + last.rows;
}

void NetworkParams::validate() const {
  if (shape.num_bands <= 0 || shape.hidden <= 0 || shape.layers < 0 || shape.speakers <= 0)
    throw ConfigError("network shape must be positive");
  if (!(shape.sigma > 0.0)) throw ConfigError("Fourier scale sigma must be positive");
  for (double h : region.half_range)
    if (!(h > 0.0)) throw ConfigError("pose region half ranges must be positive");
  if (fourier.size() != static_cast<std::size_t>(shape.num_bands) * kPoseDim)
    throw ConfigError("Fourier matrix size does not match the shape");
  if (theta.size() != parameter_count(shape, grid))
    throw ConfigError("parameter vector size does not match the shape");
}

NetworkParams init_network(const NetworkShape& shape, const PoseRegion& region,
                           const FrequencyGrid& grid, std::uint64_t seed) {
  NetworkParams p;
  p.shape = shape;
  p.region = region;
  p.grid = grid;
  p.seed = seed;
  Rng rng(seed);
  p.fourier.resize(static_cast<std::size_t>(shape.num_bands) * kPoseDim);
  for (double& b : p.fourier) b = shape.sigma * rng.normal();
  p.theta.assign(parameter_count(shape, grid), 0.0);
  for (const DenseLayer& l : p.layout()) {
    const double limit = std::sqrt(6.0 / (l.rows + l.cols));
    const std::size_t n = static_cast<std::size_t>(l.rows) * l.cols;
    for (std::size_t i = 0; i < n; ++i) p.theta[l.w_offset + i] = rng.uniform(-limit, limit);
  }
  p.validate();
  return p;
}

std::vector<double> fourier_encode(std::span<const double> s, std::span<const double> fourier,
                                   int num_bands) {
  const std::size_t dim = s.size();
  if (fourier.size() != static_cast<std::size_t>(num_bands) * dim)
    throw ConfigError("Fourier matrix does not match the input dimension");
  std::vector<double> out(2 * static_cast<std::size_t>(num_bands));
  for (int k = 0; k < num_bands; ++k) {
    double phase = 0.0;
    for (std::size_t i = 0; i < dim; ++i) phase += fourier[k * dim + i] * s[i];
    phase *= 2.0 * kPi;
    out[k] = std::sin(phase);
    out[num_bands + k] = std::cos(phase);
  }
  return out;
}

std::vector<double> fourier_encode(const NetworkParams& params, const PoseInput& pose) {
  const auto s = params.region.normalize(pose);
  return fourier_encode(s, params.fourier, params.shape.num_bands);
}

namespace {

std::span<const double> weights(const NetworkParams& p, const DenseLayer& l) {
  return {p.theta.data() + l.w_offset, static_cast<std::size_t>(l.rows) * l.cols};
}
std::span<const double> biases(const NetworkParams& p, const DenseLayer& l) {
  return {p.theta.data() + l.b_offset, static_cast<std::size_t>(l.rows)};
}

void describe_output_index(std::ostringstream& msg, std::size_t i, int bins) {
  const std::size_t c = i / 2;
  msg << "loudspeaker " << c / (kPrograms * bins) << ", program " << (c / bins) % kPrograms
      << ", bin " << c % bins << (i % 2 ? " (imag)" : " (real)");
}

}  // namespace

std::vector<FilterBank> forward_batch(const NetworkParams& params, std::span<const PoseInput> poses,
                                      ForwardCache* cache) {
  const std::size_t B = poses.size();
  const auto lay = params.layout();
  const int enc_dim = 2 * params.shape.num_bands;
  std::vector<std::vector<double>> acts;
  acts.emplace_back(B * enc_dim);
  for (std::size_t b = 0; b < B; ++b) {
    const auto e = fourier_encode(params, poses[b]);
    std::copy(e.begin(), e.end(), acts[0].begin() + b * enc_dim);
  }
  for (std::size_t i = 0; i + 1 < lay.size(); ++i) {
    const DenseLayer& l = lay[i];
    std::vector<double> y(B * l.rows);
    kernels::dense_forward(weights(params, l), biases(params, l), acts.back(), y,
                           {static_cast<std::size_t>(l.rows), static_cast<std::size_t>(l.cols), B});
    for (double& v : y) v = std::tanh(v);
    acts.push_back(std::move(y));
  }
  const DenseLayer& head = lay.back();
  std::vector<double> out(B * head.rows);
  kernels::dense_forward(weights(params, head), biases(params, head), acts.back(), out,
                         {static_cast<std::size_t>(head.rows), static_cast<std::size_t>(head.cols), B});

  const int N = static_cast<int>(params.grid.num_bins());
  const int L = params.shape.speakers;
  std::vector<FilterBank> banks;
  banks.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double* y = out.data() + b * head.rows;
    for (int i = 0; i < head.rows; ++i)
      if (!std::isfinite(y[i])) {
        std::ostringstream msg;
        msg << "non-finite network output (check parameters) for pose " << b << ": ";
        describe_output_index(msg, static_cast<std::size_t>(i), N);
        throw NonFiniteError(msg.str());
      }
    FilterBank g(L, params.grid);
    auto& v = g.values();
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = cplx(y[2 * c], y[2 * c + 1]);
    for (int l = 0; l < L; ++l)
      for (int p = 0; p < kPrograms; ++p) {
        g.at(l, p, 0).imag(0.0);
        g.at(l, p, N - 1).imag(0.0);
      }
    banks.push_back(std::move(g));
  }
  if (cache) {
    cache->batch = B;
    cache->activations = std::move(acts);
  }
  return banks;
}

FilterBank forward(const NetworkParams& params, const PoseInput& pose) {
  return std::move(forward_batch(params, std::span<const PoseInput>(&pose, 1)).front());
}

std::vector<double> backward_batch(const NetworkParams& params, const ForwardCache& cache,
                                   std::span<const FilterBank> filter_grads) {
  const std::size_t B = cache.batch;
  if (filter_grads.size() != B) throw ConfigError("gradient count does not match the batch");
  const auto lay = params.layout();
  const int N = static_cast<int>(params.grid.num_bins());
  const DenseLayer& head = lay.back();

  std::vector<double> dy(B * head.rows);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& v = filter_grads[b].values();
    if (v.size() * 2 != static_cast<std::size_t>(head.rows))
      throw ConfigError("filter gradient shape does not match the network");
    double* out = dy.data() + b * head.rows;
    for (std::size_t c = 0; c < v.size(); ++c) {
      const int n = static_cast<int>(c % N);
      out[2 * c] = v[c].real();
      out[2 * c + 1] = (n == 0 || n == N - 1) ? 0.0 : v[c].imag();
    }
    for (int i = 0; i < head.rows; ++i)
      if (!std::isfinite(out[i])) {
        std::ostringstream msg;
        msg << "non-finite loss gradient for pose " << b << ": ";
        describe_output_index(msg, static_cast<std::size_t>(i), N);
        throw NonFiniteError(msg.str());
      }
  }

  std::vector<double> grad(params.theta.size());
  std::vector<double> upstream = std::move(dy);
  for (std::size_t li = lay.size(); li-- > 0;) {
    const DenseLayer& l = lay[li];
    const kernels::DenseDims d{static_cast<std::size_t>(l.rows), static_cast<std::size_t>(l.cols), B};
    const std::vector<double>& input = cache.activations[li];
    if (li + 1 < lay.size()) {
      const std::vector<double>& a = cache.activations[li + 1];
      for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] *= 1.0 - a[i] * a[i];
    }
    kernels::dense_backward_weights(upstream, input,
                                    std::span<double>(grad.data() + l.w_offset, d.rows * d.cols),
                                    std::span<double>(grad.data() + l.b_offset, d.rows), d);
    if (li == 0) break;
    std::vector<double> down(B * l.cols);
    kernels::dense_backward_input(weights(params, l), upstream, down, d);
    upstream = std::move(down);
  }
  return grad;
}

LossAndGrad backward(const NetworkParams& params, const PoseInput& pose, const FilterLoss& loss) {
  ForwardCache cache;
  const auto banks = forward_batch(params, std::span<const PoseInput>(&pose, 1), &cache);
  FilterBank g_grad(params.shape.speakers, params.grid);
  const double value = loss(banks[0], g_grad);
  if (!std::isfinite(value)) throw NonFiniteError("non-finite loss value");
  return {value, backward_batch(params, cache, std::span<const FilterBank>(&g_grad, 1))};
}

void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const kernels::AdamHyper& hyper) {
  if (grad.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size())
    throw ConfigError("Adam state does not match the parameter vector");
  ++state.step;
  kernels::adam_update(theta, grad, state.m, state.v, state.step, hyper);
}

namespace {

constexpr char kCkptMagic[4] = {'B', 'S', 'N', 'N'};
constexpr int kCkptVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& params, const std::string& extra_json) {
  params.validate();
  std::vector<std::uint8_t> blob;
  blob.reserve(4 * (params.fourier.size() + params.theta.size()));
  for (double v : params.fourier) io::append_f32_le(blob, static_cast<float>(v));
  for (double v : params.theta) io::append_f32_le(blob, static_cast<float>(v));
  json h;
  h["format"] = "bsann-checkpoint";
  h["version"] = kCkptVersion;
  h["shape"] = {{"num_bands", params.shape.num_bands}, {"sigma", params.shape.sigma},
                {"hidden", params.shape.hidden},       {"layers", params.shape.layers},
                {"speakers", params.shape.speakers},   {"activation", "tanh"}};
  h["region"] = {{"center", params.region.center}, {"half_range", params.region.half_range}};
  h["grid"] = detail::grid_to_json(params.grid);
  h["seed"] = params.seed;
  h["fourier_count"] = params.fourier.size();
  h["theta_count"] = params.theta.size();
  h["blob_sha256"] = io::sha256_hex(blob);
  h["extra"] = detail::parse_json(extra_json, "checkpoint extra");
  io::write_container(path, kCkptMagic, h.dump(), blob);
}

NetworkParams load_checkpoint(const std::string& path, std::string* extra_json) {
  const io::Container c = io::read_container(path, kCkptMagic);
  const json h = detail::parse_json(c.header, path);
  try {
    if (h.at("version").get<int>() != kCkptVersion)
      throw FormatError(path + ": unsupported checkpoint version");
    NetworkParams p;
    const json& s = h.at("shape");
    p.shape = {s.at("num_bands").get<int>(), s.at("sigma").get<double>(), s.at("hidden").get<int>(),
               s.at("layers").get<int>(), s.at("speakers").get<int>()};
    p.region.center = h.at("region").at("center").get<std::array<double, kPoseDim>>();
    p.region.half_range = h.at("region").at("half_range").get<std::array<double, kPoseDim>>();
    p.grid = detail::grid_from_json(h.at("grid"));
    p.seed = h.at("seed").get<std::uint64_t>();
    const std::size_t nf = h.at("fourier_count").get<std::size_t>();
    const std::size_t nt = h.at("theta_count").get<std::size_t>();
    if (c.blob.size() != 4 * (nf + nt)) throw FormatError(path + ": truncated parameter blob");
    if (io::sha256_hex(c.blob) != h.at("blob_sha256").get<std::string>())
      throw FormatError(path + ": parameter blob checksum mismatch");
    p.fourier.resize(nf);
    p.theta.resize(nt);
    for (std::size_t i = 0; i < nf; ++i) p.fourier[i] = io::read_f32_le(c.blob.data() + 4 * i);
    for (std::size_t i = 0; i < nt; ++i) p.theta[i] = io::read_f32_le(c.blob.data() + 4 * (nf + i));
    p.validate();
    if (extra_json) *extra_json = h.value("extra", json::object()).dump();
    return p;
  } catch (const json::exception& e) {
    throw FormatError(path + ": malformed checkpoint header: " + e.what());
  }
}

NetworkParams round_to_float(const NetworkParams& params) {
  NetworkParams p = params;
  for (double& v : p.fourier) v = static_cast<float>(v);
  for (double& v : p.theta) v = static_cast<float>(v);
  return p;
}

}  // namespace bsann::nn
