#include "bsann/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "bsann/losses.hpp"
#include "json_helpers.hpp"

namespace bsann::eval {

using detail::json;

namespace {

void check_shapes(const AtfTensor& plant, const FilterBank& g) {
  if (plant.speakers() != g.speakers()) throw ConfigError("filter bank and plant differ in loudspeaker count");
  if (!(plant.grid() == g.grid())) throw ConfigError("filter bank and plant use different grids");
}

// || H_listener g_program ||^2 at bin n: listener rows are its two ears at
// every point, program columns 2k and 2k+1.
double zone_energy(const AtfTensor& plant, const FilterBank& g, int listener, int program, int n) {
  double e = 0.0;
  for (int ear = 2 * listener; ear < 2 * listener + 2; ++ear)
    for (int m = 0; m < plant.points(); ++m)
      for (int c = 0; c < 2; ++c) {
        cplx acc{};
        for (int l = 0; l < plant.speakers(); ++l) acc += plant.at(ear, m, l, n) * g.at(l, 2 * program + c, n);
        e += std::norm(acc);
      }
  return e;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json mean_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

double ratio_db(double num, double den, double cap_db) {
  if (num <= 0.0 && den <= 0.0) return 0.0;
  if (num <= 0.0) return -cap_db;
  const double eps = std::pow(10.0, -cap_db / 10.0);
  return std::clamp(10.0 * std::log10(num / (den + eps * num)), -cap_db, cap_db);
}

DbCurves compute_izi(const AtfTensor& plant, const FilterBank& g, double cap_db) {
  check_shapes(plant, g);
  DbCurves out{std::vector<double>(plant.bins()), std::vector<double>(plant.bins())};
  for (int k = 0; k < 2; ++k)
    for (int n = 0; n < plant.bins(); ++n)
      out[k][n] = ratio_db(zone_energy(plant, g, k, k, n), zone_energy(plant, g, 1 - k, k, n), cap_db);
  return out;
}

DbCurves compute_ipi(const AtfTensor& plant, const FilterBank& g, double cap_db) {
  check_shapes(plant, g);
  DbCurves out{std::vector<double>(plant.bins()), std::vector<double>(plant.bins())};
  for (int k = 0; k < 2; ++k)
    for (int n = 0; n < plant.bins(); ++n)
      out[k][n] = ratio_db(zone_energy(plant, g, k, k, n), zone_energy(plant, g, k, 1 - k, n), cap_db);
  return out;
}

DbCurves compute_xtc(const AtfTensor& plant, const FilterBank& g, double cap_db) {
  check_shapes(plant, g);
  DbCurves out{std::vector<double>(plant.bins()), std::vector<double>(plant.bins())};
  for (int k = 0; k < 2; ++k) {
    const losses::EarMatrix T = losses::effective_ear_matrix(plant, g, k);
    for (int n = 0; n < plant.bins(); ++n) {
      double diag = 0.0, off = 0.0;
      for (int m = 0; m < plant.points(); ++m) {
        diag += std::norm(T.at(m, n, 0, 0)) + std::norm(T.at(m, n, 1, 1));
        off += std::norm(T.at(m, n, 0, 1)) + std::norm(T.at(m, n, 1, 0));
      }
      out[k][n] = ratio_db(diag, off, cap_db);
    }
  }
  return out;
}

double log_weighted_mean(std::span<const double> curve_db, const FrequencyGrid& grid) {
  if (curve_db.size() != grid.num_bins()) throw ConfigError("curve length does not match the grid");
  return bsann::log_weighted_mean(curve_db, log_frequency_weights(grid));
}

MetricCurves compute_metrics(const AtfTensor& plant, const FilterBank& g, double cap_db) {
  MetricCurves c;
  c.cap_db = cap_db;
  c.freq_hz = plant.grid().bin_freqs_hz();
  c.band_lo_hz = plant.grid().band_lo_hz();
  c.band_hi_hz = plant.grid().band_hi_hz();
  try {
    c.band_bins = plant.grid().band_bins();
  } catch (const EmptyBandError&) {
  }
  c.izi = compute_izi(plant, g, cap_db);
  c.ipi = compute_ipi(plant, g, cap_db);
  c.xtc = compute_xtc(plant, g, cap_db);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const std::vector<double> w = log_frequency_weights(plant.grid());
    for (int k = 0; k < 2; ++k) {
      c.means.izi[k] = bsann::log_weighted_mean(c.izi[k], w);
      c.means.ipi[k] = bsann::log_weighted_mean(c.ipi[k], w);
      c.means.xtc[k] = bsann::log_weighted_mean(c.xtc[k], w);
    }
  } catch (const EmptyBandError& e) {
    c.means = {{nan, nan}, {nan, nan}, {nan, nan}};
    c.band_error = e.what();
  }
  return c;
}

std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

void export_curves(const MetricCurves& curves, const std::string& csv_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw Error("cannot open " + csv_path + " for writing");
  csv << "freq_hz,izi1_db,izi2_db,ipi1_db,ipi2_db,xtc1_db,xtc2_db\n";
  for (int n : curves.band_bins)
    csv << fmt(curves.freq_hz[n]) << ',' << fmt(curves.izi[0][n]) << ',' << fmt(curves.izi[1][n]) << ','
        << fmt(curves.ipi[0][n]) << ',' << fmt(curves.ipi[1][n]) << ',' << fmt(curves.xtc[0][n]) << ','
        << fmt(curves.xtc[1][n]) << '\n';
  if (!csv) throw Error("failed writing " + csv_path);

  json side;
  if (!curves.band_error.empty()) side["error"] = curves.band_error;
  side["cap_db"] = curves.cap_db;
  side["band_hz"] = {curves.band_lo_hz, curves.band_hi_hz};
  side["rows"] = curves.band_bins.size();
  side["means_db"] = {{"izi1", mean_or_null(curves.means.izi[0])}, {"izi2", mean_or_null(curves.means.izi[1])},
                      {"ipi1", mean_or_null(curves.means.ipi[0])}, {"ipi2", mean_or_null(curves.means.ipi[1])},
                      {"xtc1", mean_or_null(curves.means.xtc[0])}, {"xtc2", mean_or_null(curves.means.xtc[1])}};
  std::ofstream js(sidecar_path(csv_path), std::ios::binary);
  if (!js) throw Error("cannot open the metrics sidecar for writing");
  js << side.dump(2) << '\n';
}

MetricCurves load_curves_csv(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line) || line != "freq_hz,izi1_db,izi2_db,ipi1_db,ipi2_db,xtc1_db,xtc2_db")
    throw FormatError("unexpected metrics CSV header");
  MetricCurves c;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  c.means = {{nan, nan}, {nan, nan}, {nan, nan}};
  std::vector<double>* cols[7] = {&c.freq_hz, &c.izi[0], &c.izi[1], &c.ipi[0], &c.ipi[1], &c.xtc[0], &c.xtc[1]};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i < 7; ++i) {
      if (!std::getline(row, cell, ',')) throw FormatError("short row in metrics CSV");
      try {
        cols[i]->push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("bad number in metrics CSV: " + cell);
      }
    }
    c.band_bins.push_back(static_cast<int>(c.band_bins.size()));
  }
  return c;
}

std::vector<double> filter_impulse_response(const FilterBank& g, int l, int p) {
  const int N = g.bins();
  return inverse_real_fft_projected(std::span<const cplx>(g.values().data() + g.index(l, p, 0), N),
                                    g.grid().fft_size());
}

std::vector<std::vector<double>> render(const FilterBank& g, const std::vector<std::vector<double>>& programs) {
  if (programs.size() != static_cast<std::size_t>(nn::kPrograms))
    throw ConfigError("render expects four program channels");
  const std::size_t T = programs[0].size();
  for (const auto& ch : programs)
    if (ch.size() != T) throw ConfigError("program channels differ in length");
  const int taps = g.grid().fft_size();
  const std::size_t out_len = T + taps - 1;
  if (T == 0) return std::vector<std::vector<double>>(g.speakers(), std::vector<double>(taps - 1, 0.0));
  int nfft = 2;
  while (static_cast<std::size_t>(nfft) < out_len) nfft *= 2;
  std::array<ComplexSpectrum, nn::kPrograms> S;
  for (int p = 0; p < nn::kPrograms; ++p) S[p] = forward_real_fft(programs[p], nfft);
  std::vector<std::vector<double>> out(g.speakers());
  for (int l = 0; l < g.speakers(); ++l) {
    ComplexSpectrum X(nfft / 2 + 1, cplx{});
    for (int p = 0; p < nn::kPrograms; ++p) {
      const ComplexSpectrum G = forward_real_fft(filter_impulse_response(g, l, p), nfft);
      for (std::size_t b = 0; b < X.size(); ++b) X[b] += G[b] * S[p][b];
    }
    std::vector<double> y = inverse_real_fft_projected(X, nfft);
    y.resize(out_len);
    out[l] = std::move(y);
  }
  return out;
}

}  // namespace bsann::eval
