#pragma once

// Scalar reference implementations of every loss term, written as plain
// loops straight from the definitions. Shared by the unit and acceptance
// suites.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bsann/losses.hpp"

namespace oracle {

using bsann::cplx;
using bsann::FrequencyGrid;
using bsann::acoustic::AtfTensor;
using bsann::losses::CompactnessConfig;
using bsann::losses::LossWeights;
using bsann::losses::TargetSpec;
using bsann::losses::XtcTargets;
using bsann::nn::FilterBank;

struct Instance {
  AtfTensor atf;
  FilterBank g;
  FilterBank teacher;
  TargetSpec targets;
  XtcTargets xtc_targets;
  CompactnessConfig compact;
  LossWeights w;
};

inline Instance make_instance(int L, int M, const FrequencyGrid& grid, unsigned seed, double g_scale = 1.5) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.3, 1.5);
  Instance in{AtfTensor(M, L, grid), FilterBank(L, grid), FilterBank(L, grid), TargetSpec(M, grid.num_bins()),
              XtcTargets(M, grid.num_bins()), CompactnessConfig::defaults(grid), LossWeights{}};
  for (auto& v : in.atf.values()) v = {nd(gen), nd(gen)};
  for (auto* bank : {&in.g, &in.teacher}) {
    for (auto& v : bank->values()) v = {g_scale * nd(gen), g_scale * nd(gen)};
    for (int l = 0; l < L; ++l)
      for (int p = 0; p < 4; ++p) {
        bank->at(l, p, 0).imag(0.0);
        bank->at(l, p, bank->bins() - 1).imag(0.0);
      }
  }
  for (auto& v : in.targets.mag) v = ud(gen);
  for (auto& v : in.xtc_targets.mag) v = ud(gen);
  return in;
}

inline std::vector<int> band(const FrequencyGrid& grid) {
  std::vector<int> out;
  for (std::size_t n = 0; n < grid.num_bins(); ++n)
    if (grid.freq(n) >= grid.band_lo_hz() && grid.freq(n) <= grid.band_hi_hz()) out.push_back(static_cast<int>(n));
  return out;
}

// Pressure of filter column c at ear e, point m, bin n.
inline cplx field(const AtfTensor& H, const FilterBank& g, int e, int m, int c, int n) {
  cplx z = 0.0;
  for (int l = 0; l < H.speakers(); ++l) z += H.at(e, m, l, n) * g.at(l, c, n);
  return z;
}

inline double bright(const Instance& in, const FilterBank& g) {
  const auto B = band(in.atf.grid());
  double s = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int side = 0; side < 2; ++side)
      for (int m = 0; m < in.atf.points(); ++m)
        for (int n : B) {
          const double d = in.targets.at(2 * k + side, m, n) - std::abs(field(in.atf, g, 2 * k + side, m, 2 * k + side, n));
          s += d * d;
        }
  return s / (2.0 * B.size() * in.atf.points());
}

inline double dark(const Instance& in, const FilterBank& g) {
  const auto B = band(in.atf.grid());
  double s = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int e = 2 * (1 - k); e < 2 * (1 - k) + 2; ++e)
      for (int c = 2 * k; c < 2 * k + 2; ++c)
        for (int m = 0; m < in.atf.points(); ++m)
          for (int n : B) s += std::norm(field(in.atf, g, e, m, c, n));
  return s / (2.0 * B.size() * in.atf.points());
}

inline double gain(const FilterBank& g, double g_max) {
  double s = 0.0;
  for (int l = 0; l < g.speakers(); ++l)
    for (int p = 0; p < 4; ++p)
      for (int n = 0; n < g.bins(); ++n) {
        const double e = std::max(0.0, std::abs(g.at(l, p, n)) - g_max);
        s += e * e;
      }
  return s / (4.0 * g.bins() * g.speakers());
}

// Real impulse response by the inverse DFT sum over the Hermitian extension.
inline std::vector<double> impulse(const FilterBank& g, int l, int p) {
  const int Nf = g.grid().fft_size();
  const int N = g.bins();
  std::vector<double> x(Nf);
  for (int t = 0; t < Nf; ++t) {
    double acc = g.at(l, p, 0).real() + g.at(l, p, N - 1).real() * ((t % 2) ? -1.0 : 1.0);
    for (int k = 1; k < N - 1; ++k)
      acc += 2.0 * (g.at(l, p, k) * std::polar(1.0, 2.0 * bsann::kPi * k * t / Nf)).real();
    x[t] = acc / Nf;
  }
  return x;
}

inline double compact(const FilterBank& g, const CompactnessConfig& cfg) {
  const int Nf = cfg.filter_len;
  double s = 0.0;
  for (int l = 0; l < g.speakers(); ++l)
    for (int p = 0; p < 4; ++p) {
      const auto x = impulse(g, l, p);
      for (int t = 0; t < Nf; ++t) {
        double y = 0.0;
        for (std::size_t j = 0; j < cfg.bandpass_fir.size(); ++j)
          if (t - static_cast<int>(j) >= 0) y += cfg.bandpass_fir[j] * x[t - j];
        s += cfg.window[t] * cfg.window[t] * y * y;
      }
    }
  return s / (4.0 * Nf * g.speakers());
}

inline double teacher(const FilterBank& g, const FilterBank& t) {
  double s = 0.0;
  for (int l = 0; l < g.speakers(); ++l)
    for (int p = 0; p < 4; ++p)
      for (int n = 0; n < g.bins(); ++n) s += std::norm(g.at(l, p, n) - t.at(l, p, n));
  return s / g.bins();
}

// Ear-matrix entry T[row][col] of pair k.
inline cplx T(const Instance& in, const FilterBank& g, int k, int m, int n, int row, int col) {
  return field(in.atf, g, 2 * k + row, m, 2 * k + col, n);
}

// Energy weights E_m(n) per pair, as frozen constants for gradient checks.
struct OffWeights {
  std::vector<double> E;     // [k][m][n]
  std::vector<double> Esum;  // [k][m]
};

inline OffWeights off_weights(const Instance& in, const FilterBank& g) {
  const int M = in.atf.points(), N = in.atf.bins();
  OffWeights w{std::vector<double>(2 * M * N), std::vector<double>(2 * M)};
  for (int k = 0; k < 2; ++k)
    for (int m = 0; m < M; ++m)
      for (int n : band(in.atf.grid())) {
        const double e = 0.5 * (std::norm(T(in, g, k, m, n, 0, 0)) + std::norm(T(in, g, k, m, n, 1, 1)));
        w.E[(k * M + m) * N + n] = e;
        w.Esum[k * M + m] += e;
      }
  return w;
}

inline double off(const Instance& in, const FilterBank& g, int k, const OffWeights& ow) {
  const auto B = band(in.atf.grid());
  const int M = in.atf.points(), N = in.atf.bins();
  const double eps = in.w.epsilon;
  double s = 0.0;
  for (int m = 0; m < M; ++m)
    for (int n : B) {
      const double r = 0.5 * (std::norm(T(in, g, k, m, n, 1, 0)) / (std::norm(T(in, g, k, m, n, 0, 0)) + eps) +
                               std::norm(T(in, g, k, m, n, 0, 1)) / (std::norm(T(in, g, k, m, n, 1, 1)) + eps));
      s += ow.E[(k * M + m) * N + n] / ow.Esum[k * M + m] * std::log(1.0 + r);
    }
  return s / (B.size() * M);
}

inline double diag(const Instance& in, const FilterBank& g, int k) {
  const auto B = band(in.atf.grid());
  const int M = in.atf.points();
  double s = 0.0;
  for (int m = 0; m < M; ++m)
    for (int n : B)
      for (int d = 0; d < 2; ++d) {
        const double dev = std::abs(T(in, g, k, m, n, d, d)) / in.xtc_targets.at(k, d, m, n) - 1.0;
        s += 0.5 * dev * dev;
      }
  return s / (B.size() * M);
}

// beta_m(n) from the eigenvalues of the 2x2 matrix P P^H, P = the pair's
// bright-ear rows. For L >= 3 the L x L Gram P^H P has rank <= 2.
inline double beta(const Instance& in, int k, int m, int n) {
  const int L = in.atf.speakers();
  double a = 0.0, d = 0.0;
  cplx b = 0.0;
  for (int l = 0; l < L; ++l) {
    a += std::norm(in.atf.at(2 * k, m, l, n));
    d += std::norm(in.atf.at(2 * k + 1, m, l, n));
    b += in.atf.at(2 * k, m, l, n) * std::conj(in.atf.at(2 * k + 1, m, l, n));
  }
  const double tr = a + d;
  const double disc = std::sqrt((a - d) * (a - d) + 4.0 * std::norm(b));
  double lmax = 0.5 * (tr + disc), lmin = 0.5 * (tr - disc);
  if (L == 1) lmax = lmin = tr;
  if (L >= 3) lmin = 0.0;
  const double kappa = lmax / (lmin + in.w.epsilon);
  return in.w.beta0 * std::max(0.0, (kappa - in.w.kappa_min) / in.w.kappa_min) * tr / L;
}

inline double reg(const Instance& in, const FilterBank& g, int k) {
  const auto B = band(in.atf.grid());
  const int M = in.atf.points();
  double s = 0.0;
  for (int m = 0; m < M; ++m)
    for (int n : B) {
      double fro = 0.0;
      for (int l = 0; l < g.speakers(); ++l)
        for (int c = 0; c < 2; ++c) fro += std::norm(g.at(l, 2 * k + c, n));
      s += beta(in, k, m, n) * fro;
    }
  return s / (B.size() * M);
}

inline double xtc(const Instance& in, const FilterBank& g, const OffWeights& ow) {
  double s = 0.0;
  for (int k = 0; k < 2; ++k)
    s += 0.5 * (in.w.lambda_off * off(in, g, k, ow) + in.w.lambda_diag * diag(in, g, k) + in.w.lambda_reg * reg(in, g, k));
  return s;
}

inline double psz(const Instance& in, const FilterBank& g) {
  return in.w.alpha * bright(in, g) + (1.0 - in.w.alpha) * dark(in, g) + in.w.beta * gain(g, in.w.g_max) +
         in.w.gamma * compact(g, in.compact);
}

inline double total(const Instance& in, const FilterBank& g, const OffWeights& ow) {
  return in.w.lambda_xtc * xtc(in, g, ow) + in.w.w_bz * bright(in, g) + in.w.w_dz * dark(in, g) +
         in.w.beta * gain(g, in.w.g_max) + in.w.gamma * compact(g, in.compact) + in.w.eta * teacher(g, in.teacher);
}

// Library term next to its oracle. The library adds its gradient into
// `grad` when given; the oracle takes the frozen L_off weights.
struct Term {
  std::string name;
  std::function<double(const Instance&, const FilterBank&, FilterBank*)> lib;
  std::function<double(const Instance&, const FilterBank&, const OffWeights&)> ref;
};

inline std::vector<Term> terms() {
  namespace L = bsann::losses;
  // Averages a per-pair term over both pairs; per_pair scales its own
  // gradient by 1/2.
  auto pairwise = [](auto per_pair) {
    return [per_pair](const Instance& in, const FilterBank& g, FilterBank* grad) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k) {
        const L::EarMatrix Tm = L::effective_ear_matrix(in.atf, g, k);
        L::EarMatrix dT(Tm.points, Tm.bins);
        s += 0.5 * per_pair(in, Tm, k, grad ? &dT : nullptr);
        if (grad) L::backprop_ear_matrix(in.atf, dT, k, *grad);
      }
      return s;
    };
  };
  return {
      {"L1 bright", [](auto& in, auto& g, auto* gr) { return L::loss_bright(in.atf, g, in.targets, gr); },
       [](auto& in, auto& g, auto&) { return bright(in, g); }},
      {"L2 dark", [](auto& in, auto& g, auto* gr) { return L::loss_dark(in.atf, g, gr); },
       [](auto& in, auto& g, auto&) { return dark(in, g); }},
      {"L3 gain", [](auto& in, auto& g, auto* gr) { return L::loss_gain(g, in.w.g_max, gr); },
       [](auto& in, auto& g, auto&) { return gain(g, in.w.g_max); }},
      {"L4 compact", [](auto& in, auto& g, auto* gr) { return L::loss_compact(g, in.compact, gr); },
       [](auto& in, auto& g, auto&) { return compact(g, in.compact); }},
      {"L_teach", [](auto& in, auto& g, auto* gr) { return L::loss_teacher(g, in.teacher, gr); },
       [](auto& in, auto& g, auto&) { return teacher(g, in.teacher); }},
      {"L_off", pairwise([](const Instance& in, const L::EarMatrix& Tm, int, L::EarMatrix* dT) {
         return L::xtc_off_loss(Tm, in.atf.grid(), in.w.epsilon, dT, 0.5);
       }),
       [](auto& in, auto& g, auto& ow) { return 0.5 * (off(in, g, 0, ow) + off(in, g, 1, ow)); }},
      {"L_diag", pairwise([](const Instance& in, const L::EarMatrix& Tm, int k, L::EarMatrix* dT) {
         return L::xtc_diag_loss(Tm, in.xtc_targets, k, in.atf.grid(), dT, 0.5);
       }),
       [](auto& in, auto& g, auto&) { return 0.5 * (diag(in, g, 0) + diag(in, g, 1)); }},
      {"L_reg",
       [](auto& in, auto& g, auto* gr) {
         return 0.5 * L::xtc_reg_loss(in.atf, g, 0, in.w, gr, 0.5) + 0.5 * L::xtc_reg_loss(in.atf, g, 1, in.w, gr, 0.5);
       },
       [](auto& in, auto& g, auto&) { return 0.5 * (reg(in, g, 0) + reg(in, g, 1)); }},
      {"L_XTC", [](auto& in, auto& g, auto* gr) { return L::loss_xtc(in.atf, g, in.xtc_targets, in.w, gr).total; },
       [](auto& in, auto& g, auto& ow) { return xtc(in, g, ow); }},
      {"L_PSZ",
       [](auto& in, auto& g, auto* gr) {
         return L::loss_psz(in.atf, g, in.targets, in.compact, in.w, gr).total;
       },
       [](auto& in, auto& g, auto&) { return psz(in, g); }},
      {"L_total",
       [](auto& in, auto& g, auto* gr) {
         return L::loss_total(in.atf, g, in.targets, in.xtc_targets, in.teacher, in.compact, in.w, gr).total;
       },
       [](auto& in, auto& g, auto& ow) { return total(in, g, ow); }},
  };
}

}  // namespace oracle
