#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "catspec/moments.hpp"
#include "catspec/rng.hpp"

using catspec::integral_linear;
using catspec::integral_linear_t;
using catspec::integral_linear_t2;
using catspec::osc_moment;
using std::complex;

namespace {

template <class F>
complex<double> simpson_n(F f, double t0, double t1, int n) {
  const double h = (t1 - t0) / n;
  complex<double> acc = f(t0) + f(t1);
  for (int i = 1; i < n; ++i) acc += f(t0 + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

// Richardson-extrapolated composite Simpson; good to ~1e-10 for the
// oscillation rates drawn below
template <class F>
complex<double> simpson(F f, double t0, double t1) {
  const complex<double> coarse = simpson_n(f, t0, t1, 4096);
  const complex<double> fine = simpson_n(f, t0, t1, 8192);
  return fine + (fine - coarse) / 15.0;
}

}  // namespace

TEST_CASE("moments at x = 0 reduce to plain monomial integrals") {
  for (int k = 0; k <= 3; ++k) {
    const complex<double> a = osc_moment(k, 0.0);
    const double expected = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
    CHECK(std::abs(a - complex<double>(expected, 0)) < 1e-15);
  }
}

TEST_CASE("series and closed forms agree at the switchover") {
  for (int k = 0; k <= 3; ++k) {
    for (double x : {0.499, 0.501, -0.499, -0.501}) {
      const complex<double> below = osc_moment(k, std::abs(x) < 0.5 ? x : x * 0.996);
      const complex<double> above = osc_moment(k, std::abs(x) < 0.5 ? x * 1.004 : x);
      // smoothness across the branch: difference bounded by the derivative step
      CHECK(std::abs(below - above) < 0.01);
    }
    // direct cross-check on both sides against Simpson
    for (double x : {0.25, 0.4999, 0.5001, 2.0, 37.0, -5.0}) {
      const complex<double> fast = osc_moment(k, x);
      const complex<double> ref =
          simpson([&](double v) { return std::pow(v, k) * std::exp(complex<double>(0, x * v)); },
                  -1.0, 1.0);
      CHECK(std::abs(fast - ref) < 1e-10 * (1.0 + std::abs(ref)));
    }
  }
}

TEST_CASE("piecewise linear integrals match quadrature") {
  catspec::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    const double t0 = rng.uniform(-1.0, 1.0);
    const double t1 = t0 + rng.uniform(0.01, 2.0);
    const double mu = rng.uniform(-200.0, 200.0);

    auto poly = [&](double t) { return a + b * t; };
    auto kernel = [&](double t) { return std::exp(complex<double>(0, mu * t)); };

    const complex<double> r0 = integral_linear(a, b, t0, t1, mu);
    const complex<double> e0 = simpson([&](double t) { return poly(t) * kernel(t); }, t0, t1);
    CHECK(std::abs(r0 - e0) < 1e-8 * (1.0 + std::abs(e0)));

    const complex<double> r1 = integral_linear_t(a, b, t0, t1, mu);
    const complex<double> e1 = simpson([&](double t) { return poly(t) * t * kernel(t); }, t0, t1);
    CHECK(std::abs(r1 - e1) < 1e-8 * (1.0 + std::abs(e1)));

    const complex<double> r2 = integral_linear_t2(a, b, t0, t1, mu);
    const complex<double> e2 =
        simpson([&](double t) { return poly(t) * t * t * kernel(t); }, t0, t1);
    CHECK(std::abs(r2 - e2) < 1e-8 * (1.0 + std::abs(e2)));
  }
}

TEST_CASE("mu = 0 integrals are the exact polynomial antiderivatives") {
  const double a = 1.5, b = -0.75, t0 = 0.2, t1 = 1.7;
  auto mono = [&](int p) { return (std::pow(t1, p + 1) - std::pow(t0, p + 1)) / (p + 1); };
  CHECK(std::abs(integral_linear(a, b, t0, t1, 0.0) - complex<double>(a * mono(0) + b * mono(1), 0)) <
        1e-14);
  CHECK(std::abs(integral_linear_t(a, b, t0, t1, 0.0) -
                 complex<double>(a * mono(1) + b * mono(2), 0)) < 1e-14);
  CHECK(std::abs(integral_linear_t2(a, b, t0, t1, 0.0) -
                 complex<double>(a * mono(2) + b * mono(3), 0)) < 1e-14);
}

TEST_CASE("highly oscillatory regime stays accurate") {
  // mu t spans thousands of radians; composite rules would need huge grids
  const double a = 0.3, b = 2.0, t0 = 0.0, t1 = 1.0, mu = 4000.0;
  const complex<double> r = integral_linear(a, b, t0, t1, mu);
  // analytic: integral of (a + b t) e^{i mu t}
  const complex<double> imu(0, mu);
  auto prim = [&](double t) {
    return std::exp(imu * t) * ((a + b * t) / imu - b / (imu * imu));
  };
  const complex<double> exact = prim(t1) - prim(t0);
  CHECK(std::abs(r - exact) < 1e-12 * (1.0 + std::abs(exact)));
}
