#include "bsann/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bsann::losses {
namespace {

using acoustic::kNumEars;
using nn::kPrograms;

void check_pair(const AtfTensor& atf, const FilterBank& g) {
  if (atf.speakers() != g.speakers()) throw ConfigError("ATF and filter bank disagree on loudspeakers");
  if (!(atf.grid() == g.grid())) throw ConfigError("ATF and filter bank use different grids");
}

// Sum_l H(e, m, l, n) g(l, c, n)
cplx apply(const AtfTensor& atf, const FilterBank& g, int e, int m, int c, int n) {
  cplx z{};
  for (int l = 0; l < atf.speakers(); ++l) z += atf.at(e, m, l, n) * g.at(l, c, n);
  return z;
}

// grad(l, c, n) += conj(H(e, m, l, n)) * gz
void scatter(const AtfTensor& atf, FilterBank& grad, int e, int m, int c, int n, cplx gz) {
  for (int l = 0; l < atf.speakers(); ++l) grad.at(l, c, n) += std::conj(atf.at(e, m, l, n)) * gz;
}

// dL/dz for L = (a - b)^2 with a = |z|, in the Re + i Im convention;
// |z| has no gradient at z = 0 and contributes none.
cplx magnitude_grad(cplx z, double coeff) {
  const double a = std::abs(z);
  return a > 0.0 ? coeff * z / a : cplx{};
}

}  // namespace

void LossWeights::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0, 1]");
  for (double v : {beta, gamma, lambda_xtc, lambda_off, lambda_diag, lambda_reg, beta0, kappa_min,
                   epsilon, w_bz, w_dz, eta})
    if (!(v >= 0.0)) throw ConfigError("loss weights must be nonnegative");
  if (!(g_max > 0.0)) throw ConfigError("g_max must be positive");
  if (!(kappa_min > 0.0)) throw ConfigError("kappa_min must be positive");
}

double loss_bright(const AtfTensor& atf, const FilterBank& g, const TargetSpec& targets,
                   FilterBank* grad, double scale) {
  check_pair(atf, g);
  if (targets.points != atf.points() || targets.bins != atf.bins())
    throw ConfigError("target shape does not match the ATF");
  const auto bins = atf.grid().band_bins();
  const int M = atf.points();
  const double f = 1.0 / (2.0 * static_cast<double>(bins.size()) * M);
  double total = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int side = 0; side < 2; ++side) {
      const int e = 2 * k + side;
      const int c = 2 * k + side;
      for (int m = 0; m < M; ++m)
        for (int n : bins) {
          const cplx z = apply(atf, g, e, m, c, n);
          const double diff = targets.at(e, m, n) - std::abs(z);
          total += diff * diff;
          if (grad) scatter(atf, *grad, e, m, c, n, magnitude_grad(z, -2.0 * diff * f * scale));
        }
    }
  return total * f;
}

double loss_dark(const AtfTensor& atf, const FilterBank& g, FilterBank* grad, double scale) {
  check_pair(atf, g);
  const auto bins = atf.grid().band_bins();
  const int M = atf.points();
  const double f = 1.0 / (2.0 * static_cast<double>(bins.size()) * M);
  double total = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int dark = 0; dark < 2; ++dark) {
      const int e = 2 * (1 - k) + dark;
      for (int col = 0; col < 2; ++col) {
        const int c = 2 * k + col;
        for (int m = 0; m < M; ++m)
          for (int n : bins) {
            const cplx z = apply(atf, g, e, m, c, n);
            total += std::norm(z);
            if (grad) scatter(atf, *grad, e, m, c, n, 2.0 * f * scale * z);
          }
      }
    }
  return total * f;
}

double loss_gain(const FilterBank& g, double g_max, FilterBank* grad, double scale) {
  const double f = 1.0 / (static_cast<double>(kPrograms) * g.bins() * g.speakers());
  double total = 0.0;
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    const cplx v = g.values()[i];
    const double excess = std::abs(v) - g_max;
    if (excess <= 0.0) continue;
    total += excess * excess;
    if (grad) grad->values()[i] += magnitude_grad(v, 2.0 * excess * f * scale);
  }
  return total * f;
}

double loss_teacher(const FilterBank& g, const FilterBank& teacher, FilterBank* grad, double scale) {
  if (g.speakers() != teacher.speakers() || !(g.grid() == teacher.grid()))
    throw ConfigError("teacher bank shape does not match");
  const double f = 1.0 / g.bins();
  double total = 0.0;
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    const cplx d = g.values()[i] - teacher.values()[i];
    total += std::norm(d);
    if (grad) grad->values()[i] += 2.0 * f * scale * d;
  }
  return total * f;
}

CompactnessConfig CompactnessConfig::defaults(const FrequencyGrid& grid) {
  CompactnessConfig cfg;
  const int len = grid.fft_size();
  cfg.filter_len = len;
  cfg.window.resize(len);
  const double a = 0.2 * len, b = 0.4 * len;
  for (int n = 0; n < len; ++n) {
    if (n < a)
      cfg.window[n] = 0.0;
    else if (n < b)
      cfg.window[n] = 0.5 * (1.0 - std::cos(kPi * (n - a) / (b - a)));
    else
      cfg.window[n] = 1.0;
  }
  int taps = 65;
  while (taps > len / 2 && taps > 1) taps -= 2;
  const double c = 0.5 * (taps - 1);
  const double fl = grid.band_lo_hz() / grid.sample_rate_hz();
  const double fh = grid.band_hi_hz() / grid.sample_rate_hz();
  auto lowpass = [&](double fc, double x) {
    if (fc >= 0.5) return x == 0.0 ? 1.0 : 0.0;
    const double arg = 2.0 * fc * x;
    return 2.0 * fc * (arg == 0.0 ? 1.0 : std::sin(kPi * arg) / (kPi * arg));
  };
  cfg.bandpass_fir.resize(taps);
  for (int n = 0; n < taps; ++n) {
    const double x = n - c;
    const double win = taps == 1 ? 1.0
                                 : 0.42 - 0.5 * std::cos(2.0 * kPi * n / (taps - 1)) +
                                       0.08 * std::cos(4.0 * kPi * n / (taps - 1));
    cfg.bandpass_fir[n] = (lowpass(fh, x) - lowpass(fl, x)) * win;
  }
  return cfg;
}

void CompactnessConfig::validate() const {
  if (filter_len <= 0 || static_cast<int>(window.size()) != filter_len)
    throw ConfigError("compactness window length must equal the filter length");
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i] < 0.0 || window[i] > 1.0) throw ConfigError("compactness window must lie in [0, 1]");
    if (i > 0 && window[i] < window[i - 1]) throw ConfigError("compactness window must be nondecreasing");
  }
  if (bandpass_fir.empty() || static_cast<int>(bandpass_fir.size()) > filter_len)
    throw ConfigError("bandpass FIR length must be in [1, filter_len]");
  double peak = 0.0;
  for (double v : bandpass_fir) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < bandpass_fir.size(); ++i)
    if (std::abs(bandpass_fir[i] - bandpass_fir[bandpass_fir.size() - 1 - i]) > 1e-12 * peak)
      throw ConfigError("bandpass FIR must be symmetric (linear phase)");
}

double loss_compact(const FilterBank& g, const CompactnessConfig& cfg, FilterBank* grad, double scale) {
  const int len = cfg.filter_len;
  if (len != g.grid().fft_size()) throw ConfigError("compactness length must equal the FFT size");
  const int taps = static_cast<int>(cfg.bandpass_fir.size());
  const int L = g.speakers();
  const int N = g.bins();
  const double f = 1.0 / (static_cast<double>(kPrograms) * len * L);
  double total = 0.0;
  std::vector<double> y(len), dy(len), dg(len);
  for (int l = 0; l < L; ++l)
    for (int p = 0; p < kPrograms; ++p) {
      const std::span<const cplx> spec(g.values().data() + g.index(l, p, 0), N);
      const std::vector<double> gh = inverse_real_fft_projected(spec, len);
      for (int n = 0; n < len; ++n) {
        double acc = 0.0;
        for (int j = 0; j < taps && j <= n; ++j) acc += cfg.bandpass_fir[j] * gh[n - j];
        y[n] = acc;
        const double wy = cfg.window[n] * acc;
        total += wy * wy;
        dy[n] = 2.0 * f * scale * cfg.window[n] * cfg.window[n] * acc;
      }
      if (!grad) continue;
      for (int t = 0; t < len; ++t) {
        double acc = 0.0;
        for (int j = 0; j < taps && t + j < len; ++j) acc += dy[t + j] * cfg.bandpass_fir[j];
        dg[t] = acc;
      }
      const ComplexSpectrum G = forward_real_fft(dg, len);
      for (int n = 0; n < N; ++n) {
        const bool edge = n == 0 || n == N - 1;
        grad->at(l, p, n) += edge ? cplx(G[n].real() / len, 0.0) : 2.0 * G[n] / static_cast<double>(len);
      }
    }
  return total * f;
}

double combine_psz(const PszComponents& c, const LossWeights& w) {
  return w.alpha * c.bright + (1.0 - w.alpha) * c.dark + w.beta * c.gain + w.gamma * c.compact;
}

PszComponents loss_psz(const AtfTensor& atf, const FilterBank& g, const TargetSpec& targets,
                       const CompactnessConfig& compact, const LossWeights& w, FilterBank* grad,
                       double scale) {
  PszComponents c;
  c.bright = loss_bright(atf, g, targets, grad, scale * w.alpha);
  c.dark = loss_dark(atf, g, grad, scale * (1.0 - w.alpha));
  c.gain = loss_gain(g, w.g_max, grad, scale * w.beta);
  c.compact = loss_compact(g, compact, grad, scale * w.gamma);
  c.total = combine_psz(c, w);
  return c;
}

EarMatrix effective_ear_matrix(const AtfTensor& atf, const FilterBank& g, int k) {
  check_pair(atf, g);
  EarMatrix T(atf.points(), atf.bins());
  for (int m = 0; m < atf.points(); ++m)
    for (int n = 0; n < atf.bins(); ++n)
      for (int row = 0; row < 2; ++row)
        for (int col = 0; col < 2; ++col) T.at(m, n, row, col) = apply(atf, g, 2 * k + row, m, 2 * k + col, n);
  return T;
}

void backprop_ear_matrix(const AtfTensor& atf, const EarMatrix& dT, int k, FilterBank& grad) {
  for (int m = 0; m < dT.points; ++m)
    for (int n = 0; n < dT.bins; ++n)
      for (int row = 0; row < 2; ++row)
        for (int col = 0; col < 2; ++col) {
          const cplx d = dT.at(m, n, row, col);
          if (d != cplx{}) scatter(atf, grad, 2 * k + row, m, 2 * k + col, n, d);
        }
}

double xtc_off_loss(const EarMatrix& T, const FrequencyGrid& grid, double epsilon, EarMatrix* dT,
                    double scale) {
  const auto bins = grid.band_bins();
  const int M = T.points;
  const double f = 1.0 / (static_cast<double>(bins.size()) * M);
  double total = 0.0;
  for (int m = 0; m < M; ++m) {
    double esum = 0.0;
    for (int n : bins)
      esum += 0.5 * (std::norm(T.at(m, n, 0, 0)) + std::norm(T.at(m, n, 1, 1)));
    if (!(esum > 0.0)) {
      std::ostringstream msg;
      msg << "no diagonal ear energy in band at control point " << m;
      throw DegeneratePlantError(msg.str());
    }
    for (int n : bins) {
      const cplx ll = T.at(m, n, 0, 0), lr = T.at(m, n, 0, 1);
      const cplx rl = T.at(m, n, 1, 0), rr = T.at(m, n, 1, 1);
      const double dl = std::norm(ll) + epsilon, dr = std::norm(rr) + epsilon;
      const double r = 0.5 * (std::norm(rl) / dl + std::norm(lr) / dr);
      const double e = 0.5 * (std::norm(ll) + std::norm(rr));
      total += e * std::log1p(r) / esum;
      if (!dT) continue;
      const double c = scale * f * e / (esum * (1.0 + r));
      dT->at(m, n, 1, 0) += c * rl / dl;
      dT->at(m, n, 0, 1) += c * lr / dr;
      dT->at(m, n, 0, 0) += -c * std::norm(rl) * ll / (dl * dl);
      dT->at(m, n, 1, 1) += -c * std::norm(lr) * rr / (dr * dr);
    }
  }
  return total * f;
}

double xtc_diag_loss(const EarMatrix& T, const XtcTargets& targets, int k, const FrequencyGrid& grid,
                     EarMatrix* dT, double scale) {
  if (targets.points != T.points || targets.bins != T.bins)
    throw ConfigError("XTC target shape does not match the ear matrix");
  const auto bins = grid.band_bins();
  const int M = T.points;
  const double f = 1.0 / (static_cast<double>(bins.size()) * M);
  double total = 0.0;
  for (int m = 0; m < M; ++m)
    for (int n : bins)
      for (int d = 0; d < 2; ++d) {
        const cplx r = T.at(m, n, d, d);
        const double t = targets.at(k, d, m, n);
        const double dev = std::abs(r) / t - 1.0;
        total += 0.5 * dev * dev;
        if (dT) dT->at(m, n, d, d) += magnitude_grad(r, scale * f * dev / t);
      }
  return total * f;
}

double conditioning_weight(const AtfTensor& atf, int k, int m, int n, const LossWeights& w) {
  const int L = atf.speakers();
  // P P^H is 2x2 and shares the nonzero spectrum of G = P^H P.
  double a = 0.0, d = 0.0;
  cplx b{};
  for (int l = 0; l < L; ++l) {
    const cplx p0 = atf.at(2 * k, m, l, n), p1 = atf.at(2 * k + 1, m, l, n);
    a += std::norm(p0);
    d += std::norm(p1);
    b += p0 * std::conj(p1);
  }
  const double trace = a + d;
  double lmax, lmin;
  if (L == 1) {
    lmax = lmin = trace;
  } else {
    lmax = 0.5 * trace + std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
    lmin = L == 2 && lmax > 0.0 ? std::max(0.0, (a * d - std::norm(b)) / lmax) : 0.0;
  }
  const double kappa = lmax / (lmin + w.epsilon);
  return w.beta0 * std::max(0.0, (kappa - w.kappa_min) / w.kappa_min) * trace / L;
}

double xtc_reg_loss(const AtfTensor& atf, const FilterBank& g, int k, const LossWeights& w,
                    FilterBank* grad, double scale) {
  check_pair(atf, g);
  const auto bins = atf.grid().band_bins();
  const int M = atf.points();
  const double f = 1.0 / (static_cast<double>(bins.size()) * M);
  double total = 0.0;
  for (int n : bins) {
    double beta_sum = 0.0;
    for (int m = 0; m < M; ++m) beta_sum += conditioning_weight(atf, k, m, n, w);
    if (beta_sum == 0.0) continue;
    double fro = 0.0;
    for (int l = 0; l < g.speakers(); ++l)
      for (int col = 0; col < 2; ++col) {
        const cplx v = g.at(l, 2 * k + col, n);
        fro += std::norm(v);
        if (grad) grad->at(l, 2 * k + col, n) += 2.0 * scale * f * beta_sum * v;
      }
    total += beta_sum * fro;
  }
  return total * f;
}

double combine_xtc(const XtcComponents& c, const LossWeights& w) {
  return w.lambda_off * c.off + w.lambda_diag * c.diag + w.lambda_reg * c.reg;
}

XtcComponents loss_xtc(const AtfTensor& atf, const FilterBank& g, const XtcTargets& targets,
                       const LossWeights& w, FilterBank* grad, double scale) {
  XtcComponents c;
  const double half = 0.5 * scale;
  for (int k = 0; k < 2; ++k) {
    const EarMatrix T = effective_ear_matrix(atf, g, k);
    EarMatrix dT;
    if (grad) dT = EarMatrix(T.points, T.bins);
    c.off += 0.5 * xtc_off_loss(T, atf.grid(), w.epsilon, grad ? &dT : nullptr, half * w.lambda_off);
    c.diag += 0.5 * xtc_diag_loss(T, targets, k, atf.grid(), grad ? &dT : nullptr, half * w.lambda_diag);
    if (grad) backprop_ear_matrix(atf, dT, k, *grad);
    c.reg += 0.5 * xtc_reg_loss(atf, g, k, w, grad, half * w.lambda_reg);
  }
  c.total = combine_xtc(c, w);
  return c;
}

double combine_total(const TotalComponents& c, const LossWeights& w) {
  return w.lambda_xtc * c.xtc.total + w.w_bz * c.bright + w.w_dz * c.dark + w.beta * c.gain +
         w.gamma * c.compact + w.eta * c.teach;
}

TotalComponents loss_total(const AtfTensor& atf, const FilterBank& g, const TargetSpec& targets,
                           const XtcTargets& xtc_targets, const FilterBank& teacher,
                           const CompactnessConfig& compact, const LossWeights& w, FilterBank* grad,
                           double scale) {
  TotalComponents c;
  c.xtc = loss_xtc(atf, g, xtc_targets, w, grad, scale * w.lambda_xtc);
  c.bright = loss_bright(atf, g, targets, grad, scale * w.w_bz);
  c.dark = loss_dark(atf, g, grad, scale * w.w_dz);
  c.gain = loss_gain(g, w.g_max, grad, scale * w.beta);
  c.compact = loss_compact(g, compact, grad, scale * w.gamma);
  c.teach = loss_teacher(g, teacher, grad, scale * w.eta);
  c.total = combine_total(c, w);
  return c;
}

}  // namespace bsann::losses
