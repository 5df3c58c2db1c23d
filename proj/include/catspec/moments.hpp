#pragma once

#include <cmath>
#include <complex>

namespace catspec {

// scaled oscillatory moments A_k(x) = integral of v^k e^{i x v} over [-1, 1],
// k = 0..3.  the closed forms cancel catastrophically near x = 0, so below
// |x| = 0.5 the power series is summed instead (terms decay factorially; the
// truncation error is far below double rounding).
template <class Real>
std::complex<Real> osc_moment(int k, Real x) {
  using C = std::complex<Real>;
  const Real ax = std::abs(x);
  if (ax < Real(0.5)) {
    const C ix(0, x);
    C term(1, 0);
    C acc(0, 0);
    for (int m = 0; m < 48; ++m) {
      if ((k + m) % 2 == 0) acc += term * (Real(2) / Real(k + m + 1));
      term *= ix / Real(m + 1);
      if (std::abs(term.real()) + std::abs(term.imag()) < Real(1e-22)) break;
    }
    return acc;
  }
  const Real s = std::sin(x);
  const Real c = std::cos(x);
  const Real x2 = x * x;
  switch (k) {
    case 0:
      return C(2 * s / x, 0);
    case 1:
      return C(0, 2 * (s - x * c) / x2);
    case 2:
      return C(2 * (2 * x * c + (x2 - 2) * s) / (x2 * x), 0);
    default:
      return C(0, 2 * ((3 * x2 - 6) * s - (x2 - 6) * x * c) / (x2 * x2));
  }
}

// exact integral of (a + b t) e^{i mu t} over [t0, t1]
template <class Real>
std::complex<Real> integral_linear(Real a, Real b, Real t0, Real t1, Real mu) {
  const Real c = (t0 + t1) / 2;
  const Real h = (t1 - t0) / 2;
  const Real x = mu * h;
  const std::complex<Real> rot = std::exp(std::complex<Real>(0, mu * c));
  return rot * ((a + b * c) * h * osc_moment(0, x) + b * h * h * osc_moment(1, x));
}

// exact integral of (a + b t) t e^{i mu t} over [t0, t1]
template <class Real>
std::complex<Real> integral_linear_t(Real a, Real b, Real t0, Real t1, Real mu) {
  const Real c = (t0 + t1) / 2;
  const Real h = (t1 - t0) / 2;
  const Real x = mu * h;
  const std::complex<Real> rot = std::exp(std::complex<Real>(0, mu * c));
  const Real ac = a + b * c;
  // (a + b t) t = ac c + (ac + b c) u + b u^2 with t = c + u
  return rot * (ac * c * h * osc_moment(0, x) + (ac + b * c) * h * h * osc_moment(1, x) +
                b * h * h * h * osc_moment(2, x));
}

// exact integral of (a + b t) t^2 e^{i mu t} over [t0, t1]
template <class Real>
std::complex<Real> integral_linear_t2(Real a, Real b, Real t0, Real t1, Real mu) {
  const Real c = (t0 + t1) / 2;
  const Real h = (t1 - t0) / 2;
  const Real x = mu * h;
  const std::complex<Real> rot = std::exp(std::complex<Real>(0, mu * c));
  const Real ac = a + b * c;
  // (a + b t) t^2 = ac c^2 + (2 c ac + b c^2) u + (ac + 2 b c) u^2 + b u^3
  return rot * (ac * c * c * h * osc_moment(0, x) +
                (2 * c * ac + b * c * c) * h * h * osc_moment(1, x) +
                (ac + 2 * b * c) * h * h * h * osc_moment(2, x) +
                b * h * h * h * h * osc_moment(3, x));
}

}  // namespace catspec
