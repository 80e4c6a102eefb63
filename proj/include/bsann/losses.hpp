#pragma once

#include <array>
#include <vector>

#include "bsann/acoustic_model.hpp"
#include "bsann/nn.hpp"

// Training objectives. Every loss returns its value and, when `grad` is
// given, adds scale * (dL/dRe g + i dL/dIm g) into it.
//
// Program pair k in {0, 1} uses filter columns 2k (left) and 2k+1 (right);
// its bright ears are listener k's (2k, 2k+1) and its dark ears the other
// listener's. Field terms (bright, dark, XTC) average over the in-band bins;
// filter-only terms (gain, teacher) over every bin.
namespace bsann::losses {

using acoustic::AtfTensor;
using nn::FilterBank;

struct LossWeights {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 0.5;
  double lambda_xtc = 0.14;
  double lambda_off = 1.5;
  double lambda_diag = 1.0;
  double lambda_reg = 1.0;
  double beta0 = 1e-4;
  double kappa_min = 1e3;
  double epsilon = 1e-8;
  double w_bz = 0.075;
  double w_dz = 0.075;
  double eta = 1.0;
  double g_max = 4.0;

  void validate() const;
};

// Bright-zone target magnitudes |p_T| per [ear][point][bin].
struct TargetSpec {
  int points = 0;
  int bins = 0;
  std::vector<double> mag;

  TargetSpec() = default;
  TargetSpec(int points, int bins) : points(points), bins(bins), mag(static_cast<std::size_t>(acoustic::kNumEars) * points * bins) {}
  double& at(int e, int m, int n) { return mag[(static_cast<std::size_t>(e) * points + m) * bins + n]; }
  double at(int e, int m, int n) const { return mag[(static_cast<std::size_t>(e) * points + m) * bins + n]; }
};

struct CompactnessConfig {
  int filter_len = 0;                 // N-hat, the time-domain length
  std::vector<double> window;         // w[n], nondecreasing in [0, 1]
  std::vector<double> bandpass_fir;   // f[n], linear phase

  // Zero below 0.2 N-hat, half-Hann rise to 1 at 0.4 N-hat; 65-tap
  // Blackman-windowed bandpass over the grid's band.
  static CompactnessConfig defaults(const FrequencyGrid& grid);
  void validate() const;
};

// Diagonal target magnitudes |R_LL|, |R_RR| per [pair][diag][point][bin].
struct XtcTargets {
  int points = 0;
  int bins = 0;
  std::vector<double> mag;

  XtcTargets() = default;
  XtcTargets(int points, int bins) : points(points), bins(bins), mag(4 * static_cast<std::size_t>(points) * bins) {}
  double& at(int k, int d, int m, int n) { return mag[((static_cast<std::size_t>(k) * 2 + d) * points + m) * bins + n]; }
  double at(int k, int d, int m, int n) const { return mag[((static_cast<std::size_t>(k) * 2 + d) * points + m) * bins + n]; }
};

// Effective 2x2 ear matrices per point and bin: rows are the bright ears
// (L, R), columns the active channels (L, R).
struct EarMatrix {
  int points = 0;
  int bins = 0;
  std::vector<cplx> values;  // [m][n][row * 2 + col]

  EarMatrix() = default;
  EarMatrix(int points, int bins) : points(points), bins(bins), values(4 * static_cast<std::size_t>(points) * bins) {}
  cplx& at(int m, int n, int row, int col) { return values[(static_cast<std::size_t>(m) * bins + n) * 4 + row * 2 + col]; }
  const cplx& at(int m, int n, int row, int col) const { return values[(static_cast<std::size_t>(m) * bins + n) * 4 + row * 2 + col]; }
};

// Field terms.
double loss_bright(const AtfTensor& atf, const FilterBank& g, const TargetSpec& targets,
                   FilterBank* grad = nullptr, double scale = 1.0);
double loss_dark(const AtfTensor& atf, const FilterBank& g, FilterBank* grad = nullptr,
                 double scale = 1.0);

// Filter terms.
double loss_gain(const FilterBank& g, double g_max, FilterBank* grad = nullptr, double scale = 1.0);
double loss_compact(const FilterBank& g, const CompactnessConfig& cfg, FilterBank* grad = nullptr,
                    double scale = 1.0);
double loss_teacher(const FilterBank& g, const FilterBank& teacher, FilterBank* grad = nullptr,
                    double scale = 1.0);

struct PszComponents {
  double bright = 0.0;
  double dark = 0.0;
  double gain = 0.0;
  double compact = 0.0;
  double total = 0.0;
};
double combine_psz(const PszComponents& c, const LossWeights& w);
PszComponents loss_psz(const AtfTensor& atf, const FilterBank& g, const TargetSpec& targets,
                       const CompactnessConfig& compact, const LossWeights& w,
                       FilterBank* grad = nullptr, double scale = 1.0);

// XTC terms on pair k.
EarMatrix effective_ear_matrix(const AtfTensor& atf, const FilterBank& g, int k);
// Adds the chain-rule image of dT into the filter gradient of pair k.
void backprop_ear_matrix(const AtfTensor& atf, const EarMatrix& dT, int k, FilterBank& grad);

// E and its band sum are stop-gradient weights. Throws DegeneratePlantError
// when a point has no diagonal energy anywhere in the band.
double xtc_off_loss(const EarMatrix& T, const FrequencyGrid& grid, double epsilon,
                    EarMatrix* dT = nullptr, double scale = 1.0);
double xtc_diag_loss(const EarMatrix& T, const XtcTargets& targets, int k, const FrequencyGrid& grid,
                     EarMatrix* dT = nullptr, double scale = 1.0);
// Conditioning weight beta_m(n) for pair k (a plant-only constant).
double conditioning_weight(const AtfTensor& atf, int k, int m, int n, const LossWeights& w);
double xtc_reg_loss(const AtfTensor& atf, const FilterBank& g, int k, const LossWeights& w,
                    FilterBank* grad = nullptr, double scale = 1.0);

struct XtcComponents {
  double off = 0.0;
  double diag = 0.0;
  double reg = 0.0;
  double total = 0.0;
};
double combine_xtc(const XtcComponents& c, const LossWeights& w);
// Averages each term over both program pairs.
XtcComponents loss_xtc(const AtfTensor& atf, const FilterBank& g, const XtcTargets& targets,
                       const LossWeights& w, FilterBank* grad = nullptr, double scale = 1.0);

struct TotalComponents {
  XtcComponents xtc;
  double bright = 0.0;
  double dark = 0.0;
  double gain = 0.0;
  double compact = 0.0;
  double teach = 0.0;
  double total = 0.0;
};
double combine_total(const TotalComponents& c, const LossWeights& w);
TotalComponents loss_total(const AtfTensor& atf, const FilterBank& g, const TargetSpec& targets,
                           const XtcTargets& xtc_targets, const FilterBank& teacher,
                           const CompactnessConfig& compact, const LossWeights& w,
                           FilterBank* grad = nullptr, double scale = 1.0);

}  // namespace bsann::losses
