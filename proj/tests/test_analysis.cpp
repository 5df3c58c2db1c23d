#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "catspec/analysis.hpp"
#include "catspec/rng.hpp"

using namespace catspec;

namespace {

constexpr double kPi = std::numbers::pi;

FilterCurve triangle_curve() {
  FilterCurve c;
  c.omegas = Eigen::VectorXd::LinSpaced(3, 1, 3);
  c.values.resize(3);
  c.values << 1, 2, 1;
  return c;
}

FilterCurve bump_curve(double center, double grid_end) {
  FilterCurve c;
  c.omegas = Eigen::VectorXd::LinSpaced(201, 0, grid_end);
  c.values.resize(201);
  for (int i = 0; i < 201; ++i) {
    const double u = c.omegas(i) - center;
    c.values(i) = std::exp(-u * u / 0.5);
  }
  return c;
}

std::vector<SidebandPoint> synthesize(double nbar, double base_rabi, double decay, double eta,
                                      int n, double t_end, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SidebandPoint> data;
  for (int i = 1; i <= n; ++i) {
    const double t = t_end * i / n;
    const double p = sideband_p1_model(t, nbar, base_rabi, decay, eta, 60);
    data.push_back({t, p + sigma * rng.normal(), sigma});
  }
  return data;
}

}  // namespace

TEST_CASE("tone prediction interpolates the curve and scales with beta squared") {
  const auto c = triangle_curve();
  CHECK(expected_p1_single_tone(c, 0.0, 2.0) == 0.0);
  CHECK(expected_p1_single_tone(c, 0.1, 2.0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(expected_p1_single_tone(c, 0.2, 2.0) ==
        doctest::Approx(4 * expected_p1_single_tone(c, 0.1, 2.0)).epsilon(1e-12));
  CHECK(expected_p1_single_tone(c, 0.1, 1.5) == doctest::Approx(0.0075).epsilon(1e-12));
  CHECK_THROWS_AS(expected_p1_single_tone(c, 0.1, 0.5), ValidationError);
  CHECK_THROWS_AS(expected_p1_single_tone(c, 0.1, 3.5), ValidationError);
}

TEST_CASE("tone sensitivity round-trips through the prediction") {
  const auto c = triangle_curve();
  const double beta_min = sensitivity_single_tone(c, 0.01);
  CHECK(beta_min == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(expected_p1_single_tone(c, beta_min, 2.0) == doctest::Approx(0.01).epsilon(1e-10));

  auto stronger = c;
  stronger.values *= 4;
  CHECK(sensitivity_single_tone(stronger, 0.01) == doctest::Approx(beta_min / 2).epsilon(1e-12));
}

TEST_CASE("broadband sensitivity follows the band integral") {
  FilterCurve flat;
  flat.omegas = Eigen::VectorXd::LinSpaced(11, 2 * kPi * 100, 2 * kPi * 300);
  flat.values = Eigen::VectorXd::Constant(11, 3.0);
  const double integral = 3.0 * 2 * kPi * 200;
  CHECK(sensitivity_broadband(flat, 0.01) ==
        doctest::Approx(std::sqrt(4 * 0.01 / integral)).epsilon(1e-12));

  FilterCurve narrow = flat;
  narrow.omegas = Eigen::VectorXd::LinSpaced(11, 2 * kPi * 100, 2 * kPi * 200);
  CHECK(sensitivity_broadband(narrow, 0.01) > sensitivity_broadband(flat, 0.01));
}

TEST_CASE("threshold validation") {
  const auto c = triangle_curve();
  CHECK_THROWS_AS(sensitivity_single_tone(c, 0.0), ValidationError);
  CHECK_THROWS_AS(sensitivity_single_tone(c, 0.5), ValidationError);
  CHECK_THROWS_AS(sensitivity_broadband(c, -0.1), ValidationError);
}

TEST_CASE("report flags a truncated band integral") {
  const auto short_grid = sensitivity_report(bump_curve(2.5, 10.0), 0.01);
  REQUIRE_FALSE(short_grid.warnings.empty());
  const auto long_grid = sensitivity_report(bump_curve(2.5, 14.0), 0.01);
  CHECK(long_grid.warnings.empty());
  CHECK(long_grid.omega_peak == doctest::Approx(2.5).epsilon(1e-3));
  CHECK(long_grid.delta_omega == doctest::Approx(2 * std::sqrt(0.5 * std::log(2.0))).epsilon(1e-3));
  CHECK(long_grid.beta_min_hz == doctest::Approx(std::sqrt(2 * 0.01)).epsilon(1e-3));
}

TEST_CASE("feature height converts to an equivalent tone deviation") {
  CHECK(feature_height_to_deviation(1.6, 2 * kPi * 550) ==
        doctest::Approx(std::sqrt(2 * 1.6 * 550)).epsilon(1e-12));
  CHECK(feature_height_to_deviation(0.0, 2 * kPi * 550) == 0.0);
  CHECK_THROWS_AS(feature_height_to_deviation(-1.0, 1.0), ValidationError);
}

TEST_CASE("crossed-beam coupling strength for a typical trap") {
  const double eta = raman_lamb_dicke(355e-9, kPi / 2, 171.0, 2 * kPi * 1.6e6);
  CHECK(eta == doctest::Approx(0.108).epsilon(0.01));
  // counter-propagating beams couple more strongly
  CHECK(raman_lamb_dicke(355e-9, kPi, 171.0, 2 * kPi * 1.6e6) > eta);
  CHECK_THROWS_AS(raman_lamb_dicke(0.0, kPi, 171.0, 1.0), ValidationError);
}

TEST_CASE("sideband signal reduces to bare flopping for a ground-state mode") {
  const double rabi = 2 * kPi * 40e3, eta = 0.1;
  CHECK(sideband_p1_model(0.0, 0.3, rabi, 50.0, eta, 40) == 0.0);
  for (double t : {1e-5, 5e-5, 2e-4}) {
    const double expected = 0.5 * (1 - std::cos(rabi * eta * t));
    CHECK(sideband_p1_model(t, 0.0, rabi, 0.0, eta, 40) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("sideband signal saturates at the truncated thermal weight") {
  const double nbar = 2.0;
  const int n_max = 30;
  const double r = nbar / (nbar + 1);
  const double expected = 0.5 * (1 - std::pow(r, n_max + 1));
  CHECK(sideband_p1_model(1e3, nbar, 2 * kPi * 40e3, 10.0, 0.1, n_max) ==
        doctest::Approx(expected).epsilon(1e-9));

  for (double t : {1e-6, 3e-5, 1e-4, 7e-4}) {
    const double p = sideband_p1_model(t, 0.7, 2 * kPi * 40e3, 100.0, 0.1, 40);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK_THROWS_AS(sideband_p1_model(-1.0, 0.1, 1.0, 1.0, 0.1, 10), ValidationError);
  CHECK_THROWS_AS(sideband_p1_model(1.0, 0.1, 1.0, 1.0, 0.1, 0), ValidationError);
}

TEST_CASE("occupation fit recovers synthetic flopping data") {
  const double rabi = 2 * kPi * 50e3, decay = 100.0, eta = 0.1;
  const auto data = synthesize(0.2, rabi, decay, eta, 40, 4e-4, 0.01, 5);
  const auto fit = thermometry_fit(data, eta, 30);
  CHECK(fit.converged);
  CHECK(std::abs(fit.nbar - 0.2) < 0.05);
  CHECK(fit.base_rabi == doctest::Approx(rabi).epsilon(0.02));
  CHECK(fit.chi2 < 2.0 * data.size());
  CHECK(fit.covariance(0, 0) > 0.0);
  CHECK(std::isfinite(fit.covariance(0, 0)));
}

TEST_CASE("occupation fit pins a ground-state mode near zero") {
  const auto data = synthesize(0.0, 2 * kPi * 50e3, 50.0, 0.1, 40, 4e-4, 0.005, 8);
  const auto fit = thermometry_fit(data, 0.1, 30);
  CHECK(fit.nbar <= 0.02);
}

TEST_CASE("duplicating every point leaves the fitted parameters in place") {
  const auto data = synthesize(0.5, 2 * kPi * 50e3, 80.0, 0.1, 30, 4e-4, 0.01, 11);
  auto doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  const auto a = thermometry_fit(data, 0.1, 30);
  const auto b = thermometry_fit(doubled, 0.1, 30);
  CHECK(std::abs(a.nbar - b.nbar) < 1e-4);
  CHECK(b.base_rabi == doctest::Approx(a.base_rabi).epsilon(1e-4));
  CHECK(b.chi2 == doctest::Approx(2 * a.chi2).epsilon(1e-3));
}

TEST_CASE("fit input validation") {
  const auto data = synthesize(0.2, 2 * kPi * 50e3, 80.0, 0.1, 30, 4e-4, 0.01, 12);
  CHECK_THROWS_AS(thermometry_fit({data.begin(), data.begin() + 5}, 0.1, 30), ValidationError);
  CHECK_THROWS_AS(thermometry_fit(data, 0.0, 30), ValidationError);
  auto bad = data;
  bad[3].sigma = 0;
  CHECK_THROWS_AS(thermometry_fit(bad, 0.1, 30), ValidationError);
  bad = data;
  bad[3].t_s = -1;
  CHECK_THROWS_AS(thermometry_fit(bad, 0.1, 30), ValidationError);
}
