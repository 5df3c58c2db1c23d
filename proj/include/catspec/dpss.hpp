#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "catspec/errors.hpp"

namespace catspec {

namespace detail {

// eigenvalues of the symmetric tridiagonal (diag, off) strictly below x,
// by the standard Sturm sequence count
template <class Real>
int sturm_count_below(const Eigen::VectorX<Real>& diag, const Eigen::VectorX<Real>& off, Real x) {
  const int n = static_cast<int>(diag.size());
  const Real tiny = std::numeric_limits<Real>::min() / std::numeric_limits<Real>::epsilon();
  int count = 0;
  Real q = diag(0) - x;
  if (q < 0) ++count;
  for (int i = 1; i < n; ++i) {
    if (std::abs(q) < tiny) q = (q < 0 ? -tiny : tiny);
    q = diag(i) - x - off(i - 1) * off(i - 1) / q;
    if (q < 0) ++count;
  }
  return count;
}

// x = rhs solved against (T - shift I) for tridiagonal T, LU with partial
// pivoting (band width 2 in the upper factor)
template <class Real>
Eigen::VectorX<Real> shifted_tridiag_solve(const Eigen::VectorX<Real>& diag,
                                           const Eigen::VectorX<Real>& off, Real shift,
                                           Eigen::VectorX<Real> rhs) {
  const int n = static_cast<int>(diag.size());
  Eigen::VectorX<Real> d0(n), d1(n), d2(n);
  Eigen::VectorX<Real> sub(n);
  for (int i = 0; i < n; ++i) d0(i) = diag(i) - shift;
  for (int i = 0; i + 1 < n; ++i) {
    d1(i) = off(i);
    sub(i) = off(i);
  }
  d2.setZero();
  Eigen::VectorXi pivoted = Eigen::VectorXi::Zero(n);

  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(sub(i)) > std::abs(d0(i))) {
      pivoted(i) = 1;
      std::swap(d0(i), sub(i));
      std::swap(d1(i), d0(i + 1));
      if (i + 2 < n) {
        d2(i) = d1(i + 1);
        d1(i + 1) = 0;
      }
      std::swap(rhs(i), rhs(i + 1));
    }
    const Real tiny = std::numeric_limits<Real>::min() * 16;
    if (std::abs(d0(i)) < tiny) d0(i) = (d0(i) < 0 ? -tiny : tiny);
    const Real m = sub(i) / d0(i);
    d0(i + 1) -= m * d1(i);
    if (i + 2 < n) d1(i + 1) -= m * d2(i);
    rhs(i + 1) -= m * rhs(i);
  }
  const Real tiny = std::numeric_limits<Real>::min() * 16;
  if (std::abs(d0(n - 1)) < tiny) d0(n - 1) = (d0(n - 1) < 0 ? -tiny : tiny);

  Eigen::VectorX<Real> x(n);
  x(n - 1) = rhs(n - 1) / d0(n - 1);
  for (int i = n - 2; i >= 0; --i) {
    Real acc = rhs(i) - d1(i) * x(i + 1);
    if (i + 2 < n) acc -= d2(i) * x(i + 2);
    x(i) = acc / d0(i);
  }
  return x;
}

}  // namespace detail

// zeroth discrete prolate spheroidal sequence of length num_points with half
// bandwidth w, affinely rescaled to min 0 and max 1.  computed as the dominant
// eigenvector of the symmetric tridiagonal operator with
// diag_m = ((n - 1 - 2m)/2)^2 cos(2 pi w) and off_m = m (n - m) / 2,
// via Sturm bisection for the top eigenvalue followed by inverse iteration.
template <class Real>
Eigen::VectorX<Real> dpss_zeroth(int num_points, Real w) {
  if (num_points < 2) throw ValidationError("dpss_zeroth: num_points must be >= 2");
  if (!(w > Real(0) && w < Real(0.5))) throw ValidationError("dpss_zeroth: half_bandwidth must lie in (0, 1/2)");

  const int n = num_points;
  Eigen::VectorX<Real> diag(n), off(n - 1);
  const Real c2w = std::cos(2 * std::numbers::pi_v<Real> * w);
  for (int m = 0; m < n; ++m) {
    const Real q = Real(n - 1 - 2 * m) / 2;
    diag(m) = q * q * c2w;
  }
  for (int m = 1; m < n; ++m) off(m - 1) = Real(m) * Real(n - m) / 2;

  // Gershgorin bracket, then bisect for the largest eigenvalue
  Real lo = diag(0), hi = diag(0);
  for (int i = 0; i < n; ++i) {
    Real r = 0;
    if (i > 0) r += std::abs(off(i - 1));
    if (i < n - 1) r += std::abs(off(i));
    lo = std::min(lo, diag(i) - r);
    hi = std::max(hi, diag(i) + r);
  }
  const Real scale = std::max(std::abs(lo), std::abs(hi));
  for (int it = 0; it < 200 && (hi - lo) > 8 * std::numeric_limits<Real>::epsilon() * scale; ++it) {
    const Real mid = (lo + hi) / 2;
    if (detail::sturm_count_below(diag, off, mid) >= n)
      hi = mid;  // all eigenvalues below mid
    else
      lo = mid;
  }
  const Real lambda = (lo + hi) / 2;
  const Real shift = lambda + scale * 64 * std::numeric_limits<Real>::epsilon();

  Eigen::VectorX<Real> v = Eigen::VectorX<Real>::Constant(n, Real(1) / std::sqrt(Real(n)));
  int iterations = 0;
  Real residual = 0;
  for (; iterations < 64; ++iterations) {
    v = detail::shifted_tridiag_solve(diag, off, shift, v);
    v.normalize();
    Eigen::VectorX<Real> tv(n);
    for (int i = 0; i < n; ++i) {
      Real acc = diag(i) * v(i);
      if (i > 0) acc += off(i - 1) * v(i - 1);
      if (i < n - 1) acc += off(i) * v(i + 1);
      tv(i) = acc;
    }
    residual = (tv - lambda * v).norm();
    if (residual <= scale * 1000 * std::numeric_limits<Real>::epsilon()) break;
  }
  if (iterations >= 64)
    throw NumericError("dpss_zeroth: inverse iteration failed to converge after 64 iterations, residual " +
                       std::to_string(static_cast<double>(residual / scale)));

  if (v(n / 2) < 0) v = -v;
  // the operator commutes with index reversal; enforce the symmetry exactly
  const Eigen::VectorX<Real> rev = v.reverse();
  v = (v + rev) / 2;
  const Real vmin = v.minCoeff();
  const Real vmax = v.maxCoeff();
  if (!(vmax > vmin)) throw NumericError("dpss_zeroth: degenerate eigenvector");
  return (v.array() - vmin) / (vmax - vmin);
}

}  // namespace catspec
