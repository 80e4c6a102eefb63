#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "bsann/acoustic_model.hpp"
#include "bsann/nn.hpp"

// Objective metrics on a plant sampled at the ear reference points. Each
// listener's rows stack both ears (and every point the plant carries).
namespace bsann::eval {

using acoustic::AtfTensor;
using nn::FilterBank;

inline constexpr double kDefaultCapDb = 120.0;

// One dB value per bin for program/listener 1 and 2.
using DbCurves = std::array<std::vector<double>, 2>;

// 10 log10(num / (den + eps * num)) with eps = 10^(-cap/10), clamped to
// [-cap, cap]. Scale invariant; reaches the cap only when den is below
// eps * num. Zero energy on both sides reads 0 dB.
double ratio_db(double num, double den, double cap_db = kDefaultCapDb);

// Isolation between zones: program k at listener k vs at the other listener.
DbCurves compute_izi(const AtfTensor& plant, const FilterBank& g, double cap_db = kDefaultCapDb);
// Interference at listener k: program k vs the other program.
DbCurves compute_ipi(const AtfTensor& plant, const FilterBank& g, double cap_db = kDefaultCapDb);
// Ipsilateral vs contralateral energy of program k's ear matrix.
DbCurves compute_xtc(const AtfTensor& plant, const FilterBank& g, double cap_db = kDefaultCapDb);

// Log-frequency weighted average over the grid's band.
double log_weighted_mean(std::span<const double> curve_db, const FrequencyGrid& grid);

struct MetricMeans {
  std::array<double, 2> izi{};
  std::array<double, 2> ipi{};
  std::array<double, 2> xtc{};
};

struct MetricCurves {
  std::vector<double> freq_hz;
  std::vector<int> band_bins;  // rows exported to CSV
  double band_lo_hz = 0.0;
  double band_hi_hz = 0.0;
  DbCurves izi, ipi, xtc;
  MetricMeans means;       // NaN when the band is empty
  std::string band_error;  // set when the band is empty
  double cap_db = kDefaultCapDb;
};

MetricCurves compute_metrics(const AtfTensor& plant, const FilterBank& g, double cap_db = kDefaultCapDb);

// CSV of the in-band rows (freq_hz, izi1_db, izi2_db, ipi1_db, ipi2_db,
// xtc1_db, xtc2_db) plus a JSON sidecar with the log-weighted means.
void export_curves(const MetricCurves& curves, const std::string& csv_path);
std::string sidecar_path(const std::string& csv_path);
// Reads an exported CSV back (means are left unset).
MetricCurves load_curves_csv(const std::string& csv_path);

// Filter impulse responses of loudspeaker l, program p.
std::vector<double> filter_impulse_response(const FilterBank& g, int l, int p);

// Linear convolution of each program channel with its filters, summed per
// loudspeaker. Output length is T + fft_size - 1.
std::vector<std::vector<double>> render(const FilterBank& g, const std::vector<std::vector<double>>& programs);

}  // namespace bsann::eval
