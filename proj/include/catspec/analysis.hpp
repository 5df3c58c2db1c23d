#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "catspec/errors.hpp"
#include "catspec/filter.hpp"
#include "catspec/parallel.hpp"

namespace catspec {

// small-signal expected excitation for a discrete tone of deviation beta (Hz)
inline double expected_p1_single_tone(const FilterCurve& curve, double beta_hz, double omega) {
  const auto& w = curve.omegas;
  const Eigen::Index n = w.size();
  if (n < 2) throw ValidationError("expected_p1_single_tone: curve needs at least 2 points");
  if (omega < w(0) || omega > w(n - 1))
    throw ValidationError("expected_p1_single_tone: omega outside the curve grid");
  Eigen::Index hi = 1;
  while (hi < n - 1 && w(hi) < omega) ++hi;
  const double frac = (omega - w(hi - 1)) / (w(hi) - w(hi - 1));
  const double f = curve.values(hi - 1) * (1 - frac) + curve.values(hi) * frac;
  return beta_hz * beta_hz / 2 * f;
}

inline void check_p_min(double p_min) {
  if (!(p_min > 0 && p_min < 0.5))
    throw ValidationError("p_min must lie in (0, 0.5), got " + std::to_string(p_min));
}

// smallest discernible tone deviation, beta_min = sqrt(2 P_min / F(omega_peak))
inline double sensitivity_single_tone(const FilterCurve& curve, double p_min) {
  check_p_min(p_min);
  const double f_peak = peak_value(curve);
  if (f_peak <= 0) throw ValidationError("sensitivity_single_tone: filter peak is zero");
  return std::sqrt(2 * p_min / f_peak);
}

// smallest discernible flat noise density, beta_min_c = sqrt(4 P_min / int F domega)
inline double sensitivity_broadband(const FilterCurve& curve, double p_min) {
  check_p_min(p_min);
  const Eigen::Index n = curve.omegas.size();
  if (n < 2) throw ValidationError("sensitivity_broadband: curve needs at least 2 points");
  double integral = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    integral += (curve.values(i) + curve.values(i - 1)) / 2 * (curve.omegas(i) - curve.omegas(i - 1));
  if (integral <= 0) throw ValidationError("sensitivity_broadband: filter integral is zero");
  return std::sqrt(4 * p_min / integral);
}

struct SensitivityReport {
  double beta_min_hz = 0;    // discrete tone
  double beta_min_c_hz = 0;  // constant density across the band
  double p_min = 0;
  double omega_peak = 0;      // rad/s
  double delta_omega = 0;     // FWHM, rad/s
  std::vector<std::string> warnings;
};

inline SensitivityReport sensitivity_report(const FilterCurve& curve, double p_min) {
  SensitivityReport report;
  report.p_min = p_min;
  report.omega_peak = peak_frequency(curve);
  report.delta_omega = bandwidth_fwhm(curve);
  report.beta_min_hz = sensitivity_single_tone(curve, p_min);
  report.beta_min_c_hz = sensitivity_broadband(curve, p_min);
  if (curve.omegas(curve.omegas.size() - 1) < 5 * report.omega_peak)
    report.warnings.push_back(
        "band integral truncated: grid ends below 5x the peak frequency, beta_min_c is optimistic");
  return report;
}

// spectral feature height (Hz^2/Hz) and width (rad/s) to the tone deviation it represents
inline double feature_height_to_deviation(double psd_peak, double delta_omega) {
  if (psd_peak < 0 || delta_omega < 0)
    throw ValidationError("feature_height_to_deviation: inputs must be >= 0");
  return std::sqrt(2 * psd_peak * delta_omega / (2 * std::numbers::pi));
}

// eta = dk * sqrt(hbar / (2 m omega)) for two Raman beams crossing at beam_angle
inline double raman_lamb_dicke(double wavelength_m, double beam_angle_rad, double mass_amu,
                               double mode_omega) {
  if (wavelength_m <= 0 || mass_amu <= 0 || mode_omega <= 0)
    throw ValidationError("raman_lamb_dicke: wavelength, mass, and mode frequency must be > 0");
  constexpr double hbar = 1.054571817e-34;
  constexpr double amu = 1.66053906892e-27;
  const double dk = 2 * (2 * std::numbers::pi / wavelength_m) * std::sin(beam_angle_rad / 2);
  return dk * std::sqrt(hbar / (2 * mass_amu * amu * mode_omega));
}

// thermally weighted blue-sideband flopping with exponential contrast decay
inline double sideband_p1_model(double t_s, double nbar, double base_rabi, double decay,
                                double lamb_dicke, int n_max) {
  if (t_s < 0 || nbar < 0 || base_rabi < 0 || decay < 0 || lamb_dicke < 0)
    throw ValidationError("sideband_p1_model: parameters must be >= 0");
  if (n_max < 1) throw ValidationError("sideband_p1_model: n_max must be >= 1");
  const double ratio = nbar / (nbar + 1);
  double weight = 1.0 / (nbar + 1);
  double p1 = 0;
  for (int n = 0; n <= n_max; ++n) {
    const double rabi_n = base_rabi * lamb_dicke * std::sqrt(n + 1.0);
    p1 += weight / 2 * (1 - std::exp(-decay * t_s) * std::cos(rabi_n * t_s));
    weight *= ratio;
  }
  return p1;
}

struct ThermometryFit {
  double nbar = 0;
  double base_rabi = 0;  // rad/s
  double decay = 0;      // 1/s
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  int truncation = 0;
  double chi2 = 0;
  bool converged = false;
};

struct SidebandPoint {
  double t_s = 0;
  double p1 = 0;
  double sigma = 0;
};

namespace detail {

inline double thermometry_chi2(const std::vector<SidebandPoint>& data, double nbar,
                               double base_rabi, double decay, double lamb_dicke, int n_max) {
  if (nbar < 0 || decay < 0 || base_rabi < 0) return std::numeric_limits<double>::infinity();
  double chi2 = 0;
  for (const auto& d : data) {
    const double r = (sideband_p1_model(d.t_s, nbar, base_rabi, decay, lamb_dicke, n_max) - d.p1) / d.sigma;
    chi2 += r * r;
  }
  return chi2;
}

// Nelder-Mead on (nbar, base_rabi, decay); infeasible points score infinity
inline Eigen::Vector3d thermometry_simplex(const std::vector<SidebandPoint>& data,
                                           Eigen::Vector3d start, double lamb_dicke, int n_max) {
  auto score = [&](const Eigen::Vector3d& q) {
    return thermometry_chi2(data, q(0), q(1), q(2), lamb_dicke, n_max);
  };
  std::array<Eigen::Vector3d, 4> simplex;
  std::array<double, 4> value;
  simplex[0] = start;
  for (int i = 0; i < 3; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1](i) += (start(i) != 0) ? 0.1 * std::abs(start(i)) : 1e-3;
  }
  for (int i = 0; i < 4; ++i) value[i] = score(simplex[i]);

  for (int iter = 0; iter < 600; ++iter) {
    std::array<int, 4> order = {0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
    const int best = order[0], worst = order[3], second = order[2];
    if (std::isfinite(value[best]) &&
        value[worst] - value[best] <= 1e-12 * (1 + std::abs(value[best])))
      break;
    const Eigen::Vector3d centroid =
        (simplex[order[0]] + simplex[order[1]] + simplex[order[2]]) / 3;
    const Eigen::Vector3d reflected = centroid + (centroid - simplex[worst]);
    const double fr = score(reflected);
    if (fr < value[best]) {
      const Eigen::Vector3d expanded = centroid + 2 * (centroid - simplex[worst]);
      const double fe = score(expanded);
      if (fe < fr) { simplex[worst] = expanded; value[worst] = fe; }
      else { simplex[worst] = reflected; value[worst] = fr; }
    } else if (fr < value[second]) {
      simplex[worst] = reflected;
      value[worst] = fr;
    } else {
      const Eigen::Vector3d contracted = centroid + 0.5 * (simplex[worst] - centroid);
      const double fc = score(contracted);
      if (fc < value[worst]) { simplex[worst] = contracted; value[worst] = fc; }
      else {
        for (int i = 1; i < 4; ++i) {
          simplex[order[i]] = simplex[best] + 0.5 * (simplex[order[i]] - simplex[best]);
          value[order[i]] = score(simplex[order[i]]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (value[i] < value[best]) best = i;
  return simplex[best];
}

inline Eigen::Matrix<double, Eigen::Dynamic, 3> thermometry_jacobian(
    const std::vector<SidebandPoint>& data, const Eigen::Vector3d& q, double lamb_dicke,
    int n_max) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> jac(data.size(), 3);
  for (int k = 0; k < 3; ++k) {
    const double step = std::max(1e-7, 1e-6 * std::abs(q(k)));
    Eigen::Vector3d lo = q, hi = q;
    hi(k) += step;
    lo(k) = std::max(0.0, lo(k) - step);
    const double span = hi(k) - lo(k);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double fhi =
          sideband_p1_model(data[i].t_s, hi(0), hi(1), hi(2), lamb_dicke, n_max);
      const double flo =
          sideband_p1_model(data[i].t_s, lo(0), lo(1), lo(2), lamb_dicke, n_max);
      jac(static_cast<Eigen::Index>(i), k) = (fhi - flo) / span / data[i].sigma;
    }
  }
  return jac;
}

}  // namespace detail

// weighted fit of the sideband model over (nbar, base_rabi, decay); simplex
// rough pass, Gauss-Newton polish, multi-started over thermal occupations
inline ThermometryFit thermometry_fit(const std::vector<SidebandPoint>& data, double lamb_dicke,
                                      int n_max = 100) {
  if (data.size() < 6) throw ValidationError("thermometry_fit: need at least 6 data points");
  if (lamb_dicke <= 0) throw ValidationError("thermometry_fit: lamb_dicke must be > 0");
  if (n_max < 1) throw ValidationError("thermometry_fit: n_max must be >= 1");
  double t_max = 0;
  for (const auto& d : data) {
    if (d.t_s < 0) throw ValidationError("thermometry_fit: times must be >= 0");
    if (d.sigma <= 0) throw ValidationError("thermometry_fit: sigma must be > 0");
    t_max = std::max(t_max, d.t_s);
  }
  if (t_max <= 0) throw ValidationError("thermometry_fit: zero time span");

  // first local maximum of the signal sets the Rabi scale
  std::size_t peak = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i].p1 > data[peak].p1) peak = i;
  for (std::size_t i = 1; i + 1 < data.size(); ++i) {
    if (data[i].p1 >= data[i - 1].p1 && data[i].p1 >= data[i + 1].p1 &&
        data[i].p1 > 0.5 * data[peak].p1) {
      peak = i;
      break;
    }
  }
  const double t_peak = data[peak].t_s > 0 ? data[peak].t_s : t_max / 2;
  const double rabi_init = std::numbers::pi / (lamb_dicke * t_peak);

  const std::array<double, 5> nbar_starts = {0.05, 0.2, 0.5, 1.0, 2.0};
  std::array<Eigen::Vector3d, 5> fits;
  std::array<double, 5> scores;
  parallel_for(static_cast<std::ptrdiff_t>(nbar_starts.size()), [&](std::ptrdiff_t i) {
    Eigen::Vector3d q(nbar_starts[i], rabi_init, 1.0 / t_max);
    q = detail::thermometry_simplex(data, q, lamb_dicke, n_max);

    double chi2 = detail::thermometry_chi2(data, q(0), q(1), q(2), lamb_dicke, n_max);
    for (int iter = 0; iter < 60; ++iter) {
      const auto jac = detail::thermometry_jacobian(data, q, lamb_dicke, n_max);
      Eigen::VectorXd resid(data.size());
      for (std::size_t k = 0; k < data.size(); ++k)
        resid(static_cast<Eigen::Index>(k)) =
            (data[k].p1 -
             sideband_p1_model(data[k].t_s, q(0), q(1), q(2), lamb_dicke, n_max)) /
            data[k].sigma;
      const Eigen::Matrix3d jtj = jac.transpose() * jac;
      const Eigen::Vector3d g = jac.transpose() * resid;
      Eigen::Vector3d step =
          (jtj + 1e-12 * jtj.trace() * Eigen::Matrix3d::Identity()).ldlt().solve(g);
      if (!step.allFinite()) break;
      double scale = 1;
      bool improved = false;
      for (int back = 0; back < 12; ++back, scale /= 2) {
        Eigen::Vector3d trial = q + scale * step;
        trial(0) = std::max(trial(0), 0.0);
        trial(2) = std::max(trial(2), 0.0);
        const double trial_chi2 =
            detail::thermometry_chi2(data, trial(0), trial(1), trial(2), lamb_dicke, n_max);
        if (trial_chi2 < chi2) {
          const bool done = chi2 - trial_chi2 <= 1e-12 * (1 + chi2);
          q = trial;
          chi2 = trial_chi2;
          improved = true;
          if (done) iter = 60;
          break;
        }
      }
      if (!improved) break;
    }
    fits[i] = q;
    scores[i] = chi2;
  });

  int best = 0;
  for (int i = 1; i < 5; ++i)
    if (scores[i] < scores[best]) best = i;
  if (!std::isfinite(scores[best]))
    throw NumericError("thermometry_fit: no start converged, best chi2 = " +
                       std::to_string(scores[best]));

  ThermometryFit fit;
  fit.nbar = fits[best](0);
  fit.base_rabi = fits[best](1);
  fit.decay = fits[best](2);
  fit.truncation = n_max;
  fit.chi2 = scores[best];
  fit.converged = true;
  const auto jac = detail::thermometry_jacobian(data, fits[best], lamb_dicke, n_max);
  const Eigen::Matrix3d jtj = jac.transpose() * jac;
  const auto ldlt = jtj.ldlt();
  if (ldlt.info() == Eigen::Success && ldlt.isPositive())
    fit.covariance = ldlt.solve(Eigen::Matrix3d::Identity());
  else
    fit.covariance.setConstant(std::numeric_limits<double>::quiet_NaN());
  return fit;
}

}  // namespace catspec
