#pragma once

#include <vector>

#include "bsann/core.hpp"

namespace bsann::special {

// Complex value stored as mantissa * 2^exp so that spherical Bessel and
// Hankel functions of high order at small argument neither overflow nor
// underflow before they are multiplied together.
struct Scaled {
  cplx m{0.0, 0.0};
  long e = 0;

  static Scaled from(cplx v);
  static Scaled from_parts(cplx m, long e);
  cplx value() const;
  bool is_zero() const { return m == cplx(0.0, 0.0); }
};

Scaled operator*(const Scaled& a, const Scaled& b);
Scaled operator/(const Scaled& a, const Scaled& b);
Scaled operator+(const Scaled& a, const Scaled& b);
Scaled operator-(const Scaled& a, const Scaled& b);
Scaled operator*(const Scaled& a, double s);

// j_n(x) for n = 0..order, x > 0, by Miller's downward recurrence normalized
// against the closed form of j_0 or j_1 (whichever is larger at x).
std::vector<Scaled> spherical_bessel_j(int order, double x);

// h_n^(1)(x) = j_n + i y_n for n = 0..order by upward recurrence.
std::vector<Scaled> spherical_hankel1(int order, double x);

// Derivatives f'_0..f'_N from f_0..f_N: f'_0 = -f_1, f'_n = f_{n-1} - (n+1)/x f_n.
std::vector<Scaled> spherical_derivative(const std::vector<Scaled>& f, double x);

// P_n(x) for n = 0..order.
std::vector<double> legendre(int order, double x);

double bessel_j1(double x);

// 2 J1(x)/x with x = k a sin(theta); 1 at x = 0.
double piston_directivity(double k, double a, double theta);

}  // namespace bsann::special
