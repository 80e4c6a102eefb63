#include "bsann/special.hpp"

#include <algorithm>
#include <cmath>

namespace bsann::special {

Scaled Scaled::from(cplx v) { return from_parts(v, 0); }

Scaled Scaled::from_parts(cplx m, long e) {
  const double big = std::max(std::abs(m.real()), std::abs(m.imag()));
  if (big == 0.0) return {};
  const int shift = std::ilogb(big);
  return {cplx(std::ldexp(m.real(), -shift), std::ldexp(m.imag(), -shift)), e + shift};
}

cplx Scaled::value() const {
  if (is_zero()) return {};
  const long clamped = std::clamp<long>(e, -2200, 2200);
  return {std::ldexp(m.real(), static_cast<int>(clamped)),
          std::ldexp(m.imag(), static_cast<int>(clamped))};
}

Scaled operator*(const Scaled& a, const Scaled& b) {
  return Scaled::from_parts(a.m * b.m, a.e + b.e);
}

Scaled operator/(const Scaled& a, const Scaled& b) {
  return Scaled::from_parts(a.m / b.m, a.e - b.e);
}

Scaled operator*(const Scaled& a, double s) { return Scaled::from_parts(a.m * s, a.e); }

Scaled operator+(const Scaled& a, const Scaled& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const Scaled& hi = a.e >= b.e ? a : b;
  const Scaled& lo = a.e >= b.e ? b : a;
  const long diff = hi.e - lo.e;
  if (diff > 1100) return hi;
  const int d = static_cast<int>(diff);
  const cplx shifted(std::ldexp(lo.m.real(), -d), std::ldexp(lo.m.imag(), -d));
  return Scaled::from_parts(hi.m + shifted, hi.e);
}

Scaled operator-(const Scaled& a, const Scaled& b) { return a + b * -1.0; }

std::vector<Scaled> spherical_bessel_j(int order, double x) {
  if (order < 0) throw ConfigError("order must be nonnegative");
  if (!(x > 0.0)) throw ConfigError("spherical_bessel_j requires x > 0");
  const double top = std::max(static_cast<double>(order), x);
  const int start = static_cast<int>(std::ceil(top + std::sqrt(40.0 * top))) + 10;

  std::vector<double> raw(order + 1, 0.0);
  std::vector<long> exps(order + 1, 0);
  double above = 0.0;  // j_{n+1}
  double cur = 1.0;    // j_n, unnormalized
  long scale = 0;
  constexpr int kRescaleBits = 600;
  const double rescale_threshold = std::ldexp(1.0, kRescaleBits);
  for (int n = start; n >= 1; --n) {
    if (n <= order) {
      raw[n] = cur;
      exps[n] = scale;
    }
    const double below = (2.0 * n + 1.0) / x * cur - above;
    above = cur;
    cur = below;
    if (std::abs(cur) > rescale_threshold) {
      cur = std::ldexp(cur, -kRescaleBits);
      above = std::ldexp(above, -kRescaleBits);
      scale += kRescaleBits;
    }
  }
  raw[0] = cur;
  exps[0] = scale;
  // `above` now holds the unnormalized j_1 at the final scale.

  // Fix the unknown constant against whichever closed form is larger.
  const double j0 = std::sin(x) / x;
  const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  Scaled norm;
  if (std::abs(j0) >= std::abs(j1)) {
    norm = Scaled::from(j0) / Scaled::from_parts(cur, scale);
  } else {
    norm = Scaled::from(j1) / Scaled::from_parts(above, scale);
  }
  std::vector<Scaled> out(order + 1);
  for (int n = 0; n <= order; ++n) out[n] = Scaled::from_parts(raw[n], exps[n]) * norm;
  return out;
}

std::vector<Scaled> spherical_hankel1(int order, double x) {
  if (order < 0) throw ConfigError("order must be nonnegative");
  if (!(x > 0.0)) throw ConfigError("spherical_hankel1 requires x > 0");
  const cplx eix = std::exp(cplx(0.0, x));
  std::vector<Scaled> out(order + 1);
  out[0] = Scaled::from(cplx(0.0, -1.0) * eix / x);
  if (order >= 1) out[1] = Scaled::from(-eix * cplx(x, 1.0) / (x * x));
  for (int n = 1; n < order; ++n)
    out[n + 1] = out[n] * ((2.0 * n + 1.0) / x) - out[n - 1];
  return out;
}

std::vector<Scaled> spherical_derivative(const std::vector<Scaled>& f, double x) {
  const int count = static_cast<int>(f.size());
  std::vector<Scaled> d(count);
  if (count == 0) return d;
  d[0] = count > 1 ? f[1] * -1.0 : Scaled{};
  for (int n = 1; n < count; ++n) d[n] = f[n - 1] - f[n] * ((n + 1.0) / x);
  return d;
}

std::vector<double> legendre(int order, double x) {
  std::vector<double> p(order + 1);
  p[0] = 1.0;
  if (order >= 1) p[1] = x;
  for (int n = 1; n < order; ++n)
    p[n + 1] = ((2.0 * n + 1.0) * x * p[n] - n * p[n - 1]) / (n + 1.0);
  return p;
}

double bessel_j1(double x) {
  const double ax = std::abs(x);
  const double v = std::cyl_bessel_j(1.0, ax);
  return x < 0.0 ? -v : v;
}

double piston_directivity(double k, double a, double theta) {
  const double x = std::abs(k * a * std::sin(theta));
  if (x < 1e-6) return 1.0 - x * x / 8.0;
  return 2.0 * bessel_j1(x) / x;
}

}  // namespace bsann::special
