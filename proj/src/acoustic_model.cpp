#include "bsann/acoustic_model.hpp"

#include <algorithm>
#include <sstream>

#include "bsann/io.hpp"
#include "bsann/special.hpp"

namespace bsann::acoustic {

using special::Scaled;

std::string to_string(DriverBand b) { return b == DriverBand::woofer ? "woofer" : "tweeter"; }

DriverBand driver_band_from_string(const std::string& s) {
  if (s == "woofer") return DriverBand::woofer;
  if (s == "tweeter") return DriverBand::tweeter;
  throw ConfigError("unknown driver band '" + s + "'");
}

std::string to_string(AtfMode m) {
  return m == AtfMode::point_source ? "point_source" : "physically_informed";
}

AtfMode atf_mode_from_string(const std::string& s) {
  if (s == "point_source") return AtfMode::point_source;
  if (s == "physically_informed") return AtfMode::physically_informed;
  throw ConfigError("unknown ATF mode '" + s + "'");
}

void DriverSpec::validate() const {
  if (std::abs(facing_unit.norm() - 1.0) > 1e-9) throw ConfigError("driver facing must be a unit vector");
  if (!(piston_radius_m > 0.0 && piston_radius_m < 0.5))
    throw ConfigError("piston radius must lie in (0, 0.5) m");
}

Vec3 ListenerGeometry::left_unit() const {
  return Vec3{0.0, 0.0, 1.0}.cross(facing_unit).normalized();
}

Vec3 ListenerGeometry::ear_reference(Side side) const {
  const double r = head_radius_m + ear_offset_m;
  const Vec3 lat = left_unit();
  return side == Side::left ? head_center_m + lat * r : head_center_m - lat * r;
}

void ListenerGeometry::validate() const {
  if (!(head_radius_m > 0.0)) throw ConfigError("head radius must be positive");
  if (ear_offset_m < 0.0) throw ConfigError("ear offset must be nonnegative");
  if (std::abs(facing_unit.norm() - 1.0) > 1e-9) throw ConfigError("listener facing must be a unit vector");
  for (const auto& ear : control_points)
    for (const Vec3& p : ear)
      if (distance(p, head_center_m) <= head_radius_m)
        throw GeometryError("control point lies inside the rigid sphere");
}

AtfTensor::AtfTensor(int points, int speakers, FrequencyGrid grid)
    : points_(points), speakers_(speakers), grid_(std::move(grid)) {
  values_.assign(static_cast<std::size_t>(kNumEars) * points_ * speakers_ * grid_.num_bins(), {});
}

bool AtfTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

double off_axis_angle(const DriverSpec& driver, const Vec3& point) {
  const Vec3 dir = (point - driver.position_m).normalized();
  return std::acos(std::clamp(dir.dot(driver.facing_unit), -1.0, 1.0));
}

namespace {

void check_outside(double r, double a, const char* what) {
  if (r < a * (1.0 - 1e-12))
    throw GeometryError(std::string(what) + " lies inside the rigid sphere");
}

// alpha_n(ka) = j'_n(ka) / h'_n(ka), n = 0..order.
std::vector<Scaled> scattering_coefficients(int order, double ka) {
  const auto j = special::spherical_bessel_j(order + 1, ka);
  const auto h = special::spherical_hankel1(order + 1, ka);
  const auto dj = special::spherical_derivative(j, ka);
  const auto dh = special::spherical_derivative(h, ka);
  std::vector<Scaled> alpha(order + 1);
  for (int n = 0; n <= order; ++n) alpha[n] = dj[n] / dh[n];
  return alpha;
}

// Sum of (2n+1) c_n P_n with a tail check on the last two terms.
cplx legendre_series(const std::vector<cplx>& c, const std::vector<double>& p, double tol) {
  cplx sum{};
  const int order = static_cast<int>(c.size()) - 1;
  for (int n = 0; n <= order; ++n) sum += (2.0 * n + 1.0) * p[n] * c[n];
  double tail = 0.0;
  for (int n = std::max(0, order - 1); n <= order; ++n)
    tail += std::abs((2.0 * n + 1.0) * p[n] * c[n]);
  const double rel = tail / std::max(std::abs(sum), 1e-300);
  if (rel > tol) {
    std::ostringstream msg;
    msg << "rigid-sphere series not converged at order " << order << " (tail " << rel << ")";
    throw ConvergenceError(msg.str(), rel);
  }
  return sum;
}

// Converts ik * sum to the normalized HRTF in the e^{+jwt} convention.
cplx normalize_by_green(cplx sum, double k, double d) {
  const cplx ratio = cplx(0.0, k) * sum * d * std::exp(cplx(0.0, -k * d));
  return std::conj(ratio);
}

}  // namespace

cplx rigid_sphere_hrtf(const Vec3& src_pos, const Vec3& ctrl_pos, const Vec3& head_center,
                       double head_radius, double k, const HrtfConfig& cfg) {
  if (!(k > 0.0)) throw ConfigError("rigid_sphere_hrtf requires k > 0");
  if (!(head_radius > 0.0)) throw ConfigError("head radius must be positive");
  const Vec3 rs_vec = src_pos - head_center;
  const Vec3 re_vec = ctrl_pos - head_center;
  const double rs = rs_vec.norm();
  const double re = re_vec.norm();
  check_outside(rs, head_radius, "source");
  check_outside(re, head_radius, "control point");
  const int order = cfg.series_order;
  const double r_lo = std::min(rs, re);
  const double r_hi = std::max(rs, re);

  const auto alpha = scattering_coefficients(order, k * head_radius);
  const auto j_lo = special::spherical_bessel_j(order, k * r_lo);
  const auto h_hi = special::spherical_hankel1(order, k * r_hi);
  const auto h_s = special::spherical_hankel1(order, k * rs);
  const auto h_e = special::spherical_hankel1(order, k * re);
  const double cos_gamma = std::clamp(rs_vec.dot(re_vec) / (rs * re), -1.0, 1.0);
  const auto p = special::legendre(order, cos_gamma);

  std::vector<cplx> c(order + 1);
  for (int n = 0; n <= order; ++n)
    c[n] = (j_lo[n] * h_hi[n] - alpha[n] * h_s[n] * h_e[n]).value();
  const cplx sum = legendre_series(c, p, cfg.convergence_tol);
  return normalize_by_green(sum, k, distance(src_pos, ctrl_pos));
}

ComplexSpectrum synth_driver_response(DriverBand band, const FrequencyGrid& grid) {
  // Butterworth sections (Q = 1/sqrt 2) evaluated on the analog prototype;
  // cascades of such sections are minimum phase.
  const double q = 1.0 / std::sqrt(2.0);
  auto highpass = [q](cplx s, double w0) { return s * s / (s * s + s * (w0 / q) + w0 * w0); };
  auto lowpass = [q](cplx s, double w0) { return w0 * w0 / (s * s + s * (w0 / q) + w0 * w0); };
  ComplexSpectrum out(grid.num_bins());
  for (std::size_t n = 0; n < out.size(); ++n) {
    const cplx s(0.0, 2.0 * kPi * grid.freq(n));
    if (band == DriverBand::woofer)
      out[n] = highpass(s, 2.0 * kPi * 100.0) * lowpass(s, 2.0 * kPi * 2000.0);
    else
      out[n] = highpass(s, 2.0 * kPi * 2000.0);
  }
  return out;
}

ComplexSpectrum load_driver_response_wav(const std::string& path, const FrequencyGrid& grid) {
  const io::WavData wav = io::read_wav_float(path);
  if (wav.channels != 1) throw FormatError(path + ": driver response must be mono");
  if (wav.sample_rate != static_cast<int>(grid.sample_rate_hz()))
    throw FormatError(path + ": sample rate does not match the grid");
  std::vector<double> ir(wav.interleaved.begin(), wav.interleaved.end());
  if (ir.size() > static_cast<std::size_t>(grid.fft_size())) ir.resize(grid.fft_size());
  return forward_real_fft(ir, grid.fft_size());
}

std::array<std::vector<Vec3>, kNumEars> ear_points(const std::array<ListenerGeometry, 2>& listeners) {
  return {listeners[0].control_points[0], listeners[0].control_points[1],
          listeners[1].control_points[0], listeners[1].control_points[1]};
}

std::array<std::vector<Vec3>, kNumEars> ear_reference_points(
    const std::array<ListenerGeometry, 2>& listeners) {
  std::array<std::vector<Vec3>, kNumEars> out;
  for (int e = 0; e < kNumEars; ++e)
    out[e] = {listeners[e / 2].ear_reference(e % 2 == 0 ? Side::left : Side::right)};
  return out;
}

std::vector<room::RirPair> simulate_rir_pairs(const room::RoomSpec& room,
                                              const std::vector<DriverSpec>& drivers,
                                              const std::array<std::vector<Vec3>, kNumEars>& points,
                                              const FrequencyGrid& grid) {
  const int M = static_cast<int>(points[0].size());
  const int L = static_cast<int>(drivers.size());
  for (const auto& ear : points)
    if (static_cast<int>(ear.size()) != M) throw ConfigError("ears must have equal point counts");
  std::vector<room::RirPair> out(static_cast<std::size_t>(kNumEars) * M * L);
  const int total = kNumEars * M * L;
#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < total; ++idx) {
    const int l = idx % L;
    const int m = (idx / L) % M;
    const int e = idx / (L * M);
    const Vec3& p = points[e][m];
    const room::Rir rir = room::simulate_rir(room, drivers[l].position_m, p, grid);
    out[idx] = room::split_direct_reflected(rir.samples, drivers[l].position_m, p, room, grid);
  }
  return out;
}

namespace {

struct AssemblyContext {
  const std::vector<room::RirPair>& rirs;
  const std::vector<DriverSpec>& drivers;
  const std::array<ListenerGeometry, 2>& listeners;
  std::array<std::vector<Vec3>, kNumEars> points;
  int M;
  int L;
  int N;
};

AssemblyContext make_context(const AssemblyInputs& in, const FrequencyGrid& grid) {
  if (!in.rirs || !in.drivers || !in.listeners) throw ConfigError("assembly inputs incomplete");
  auto points = in.points ? *in.points : ear_points(*in.listeners);
  const int M = static_cast<int>(points[0].size());
  const int L = static_cast<int>(in.drivers->size());
  for (const auto& ear : points)
    if (static_cast<int>(ear.size()) != M) throw ConfigError("ears must have equal point counts");
  if (in.rirs->size() != static_cast<std::size_t>(kNumEars) * M * L)
    throw ConfigError("RIR pair count does not match ears x points x loudspeakers");
  for (const auto& d : *in.drivers)
    if (!d.anechoic_response.empty() && d.anechoic_response.size() != grid.num_bins())
      throw ConfigError("driver response length does not match the grid");
  return {*in.rirs, *in.drivers, *in.listeners, std::move(points), M, L,
          static_cast<int>(grid.num_bins())};
}

void check_finite_inputs(const AssemblyContext& ctx, int e, int m, int l,
                         const ComplexSpectrum& hd, const ComplexSpectrum& hr) {
  auto finite = [](const ComplexSpectrum& s) {
    return std::all_of(s.begin(), s.end(), [](const cplx& v) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    });
  };
  const auto& a = ctx.drivers[l].anechoic_response;
  if (!finite(hd) || !finite(hr) || !finite(a)) {
    std::ostringstream msg;
    msg << "non-finite input at (ear " << e << ", point " << m << ", loudspeaker " << l << ")";
    throw NonFiniteError(msg.str());
  }
}

cplx driver_gain(const DriverSpec& d, int n) {
  return d.anechoic_response.empty() ? cplx(1.0, 0.0) : d.anechoic_response[n];
}

}  // namespace

AtfTensor assemble_atf(const AssemblyInputs& in, const FrequencyGrid& grid, const HrtfConfig& cfg,
                       AtfMode mode, AtfTensor* direct_only) {
  const AssemblyContext ctx = make_context(in, grid);
  AtfTensor atf(ctx.M, ctx.L, grid);
  if (direct_only) *direct_only = AtfTensor(ctx.M, ctx.L, grid);
  const int order = cfg.series_order;
  const int N = ctx.N;
  const bool physical = mode == AtfMode::physically_informed;

  // Per-listener tables shared by every (ear, point): scattering coefficients
  // per bin and the source-radius Hankel functions per (driver, bin).
  struct HeadTables {
    std::vector<std::vector<Scaled>> alpha;               // [bin][n]
    std::vector<std::vector<std::vector<Scaled>>> h_src;  // [l][bin][n]
  };
  std::array<HeadTables, 2> tables;
  if (physical) {
    for (int li = 0; li < 2; ++li) {
      const ListenerGeometry& g = ctx.listeners[li];
      tables[li].alpha.resize(N);
      tables[li].h_src.assign(ctx.L, std::vector<std::vector<Scaled>>(N));
      for (int n = 1; n < N; ++n) {
        const double k = grid.wavenumber(n, cfg.speed_of_sound_mps);
        tables[li].alpha[n] = scattering_coefficients(order, k * g.head_radius_m);
        for (int l = 0; l < ctx.L; ++l) {
          const double rs = distance(ctx.drivers[l].position_m, g.head_center_m);
          check_outside(rs, g.head_radius_m, "source");
          tables[li].h_src[l][n] = special::spherical_hankel1(order, k * rs);
        }
      }
    }
  }

  const int pairs = kNumEars * ctx.M;
  std::vector<std::string> errors(pairs);
#pragma omp parallel for schedule(dynamic)
  for (int em = 0; em < pairs; ++em) {
    const int e = em / ctx.M;
    const int m = em % ctx.M;
    try {
      const Vec3& p = ctx.points[e][m];
      const ListenerGeometry& g = ctx.listeners[e / 2];
      const HeadTables& tab = tables[e / 2];
      const Vec3 re_vec = p - g.head_center_m;
      const double re = re_vec.norm();
      if (physical) check_outside(re, g.head_radius_m, "control point");

      std::vector<std::vector<Scaled>> bracket(N);  // j_n(k re) - alpha_n h_n(k re)
      if (physical) {
        for (int n = 1; n < N; ++n) {
          const double x = grid.wavenumber(n, cfg.speed_of_sound_mps) * re;
          const auto j = special::spherical_bessel_j(order, x);
          const auto h = special::spherical_hankel1(order, x);
          bracket[n].resize(order + 1);
          for (int i = 0; i <= order; ++i) bracket[n][i] = j[i] - tab.alpha[n][i] * h[i];
        }
      }

      std::vector<cplx> coeffs(order + 1);
      for (int l = 0; l < ctx.L; ++l) {
        const room::RirPair& rp = ctx.rirs[(static_cast<std::size_t>(e) * ctx.M + m) * ctx.L + l];
        const ComplexSpectrum hd = forward_real_fft(rp.h_dir, grid.fft_size());
        const ComplexSpectrum hr = forward_real_fft(rp.h_refl, grid.fft_size());
        check_finite_inputs(ctx, e, m, l, hd, hr);
        const DriverSpec& drv = ctx.drivers[l];
        if (!physical) {
          for (int n = 0; n < N; ++n) {
            atf.at(e, m, l, n) = hd[n] + hr[n];
            if (direct_only) direct_only->at(e, m, l, n) = hd[n];
          }
          continue;
        }
        const Vec3 rs_vec = drv.position_m - g.head_center_m;
        const double rs = rs_vec.norm();
        const double d = distance(drv.position_m, p);
        const double theta = off_axis_angle(drv, p);
        const auto leg = special::legendre(
            order, std::clamp(rs_vec.dot(re_vec) / (rs * re), -1.0, 1.0));
        for (int n = 0; n < N; ++n) {
          const cplx a = driver_gain(drv, n);
          cplx hrtf(1.0, 0.0);
          double directivity = 1.0;
          if (n > 0) {
            const double k = grid.wavenumber(n, cfg.speed_of_sound_mps);
            directivity = special::piston_directivity(k, drv.piston_radius_m, theta);
            if (rs > re) {
              for (int i = 0; i <= order; ++i) coeffs[i] = (tab.h_src[l][n][i] * bracket[n][i]).value();
              hrtf = normalize_by_green(legendre_series(coeffs, leg, cfg.convergence_tol), k, d);
            } else {
              hrtf = rigid_sphere_hrtf(drv.position_m, p, g.head_center_m, g.head_radius_m, k, cfg);
            }
          }
          const cplx direct = hd[n] * a * directivity * hrtf;
          atf.at(e, m, l, n) = direct + hr[n] * a;
          if (direct_only) direct_only->at(e, m, l, n) = direct;
        }
      }
    } catch (const std::exception& ex) {
      errors[em] = ex.what();
    }
  }
  for (const auto& msg : errors)
    if (!msg.empty()) throw Error("ATF assembly failed: " + msg);
  return atf;
}

AtfTensor assemble_atf_reference(const AssemblyInputs& in, const FrequencyGrid& grid,
                                 const HrtfConfig& cfg, AtfMode mode) {
  const AssemblyContext ctx = make_context(in, grid);
  AtfTensor atf(ctx.M, ctx.L, grid);
  for (int e = 0; e < kNumEars; ++e)
    for (int m = 0; m < ctx.M; ++m)
      for (int l = 0; l < ctx.L; ++l) {
        const room::RirPair& rp = ctx.rirs[(static_cast<std::size_t>(e) * ctx.M + m) * ctx.L + l];
        const ComplexSpectrum hd = forward_real_fft(rp.h_dir, grid.fft_size());
        const ComplexSpectrum hr = forward_real_fft(rp.h_refl, grid.fft_size());
        check_finite_inputs(ctx, e, m, l, hd, hr);
        const DriverSpec& drv = ctx.drivers[l];
        const ListenerGeometry& g = ctx.listeners[e / 2];
        const Vec3& p = ctx.points[e][m];
        for (int n = 0; n < ctx.N; ++n) {
          if (mode == AtfMode::point_source) {
            atf.at(e, m, l, n) = hd[n] + hr[n];
            continue;
          }
          const cplx a = driver_gain(drv, n);
          cplx hrtf(1.0, 0.0);
          double directivity = 1.0;
          if (n > 0) {
            const double k = grid.wavenumber(n, cfg.speed_of_sound_mps);
            directivity = special::piston_directivity(k, drv.piston_radius_m, off_axis_angle(drv, p));
            hrtf = rigid_sphere_hrtf(drv.position_m, p, g.head_center_m, g.head_radius_m, k, cfg);
          }
          atf.at(e, m, l, n) = hd[n] * a * directivity * hrtf + hr[n] * a;
        }
      }
  return atf;
}

}  // namespace bsann::acoustic
