#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "catspec/errors.hpp"
#include "catspec/parallel.hpp"
#include "catspec/sequence.hpp"

namespace catspec {

// one motional mode: coupling strength, drive detuning, initial thermal
// occupancy.  thermal_factor scales the filter response.
struct Mode {
  double lamb_dicke = 0;
  double detuning = 0;       // rad/s, 0 on resonance
  double mean_phonons = 0;

  double thermal_factor() const { return 2.0 * (mean_phonons + 0.5); }

  bool operator==(const Mode&) const = default;
};

struct ModeConfig {
  std::vector<Mode> modes;

  bool operator==(const ModeConfig&) const = default;
};

inline void validate(const ModeConfig& config) {
  if (config.modes.empty()) throw ValidationError("mode config: need at least one mode");
  for (const auto& m : config.modes) {
    if (!(m.lamb_dicke > 0)) throw ValidationError("mode config: lamb_dicke must be > 0");
    if (m.mean_phonons < 0) throw ValidationError("mode config: mean_phonons must be >= 0");
  }
}

// FirstOrder is the transfer of the displacement integral expanded to first
// order in the accumulated noise phase; LiteralQuasiStatic replaces the
// kernel by its zero-frequency limit t.  both coincide at omega = 0.
enum class Kernel { FirstOrder, LiteralQuasiStatic };

inline std::string kernel_name(Kernel k) {
  return k == Kernel::FirstOrder ? "first_order" : "literal_quasi_static";
}

inline Kernel kernel_from_name(const std::string& name) {
  if (name == "first_order" || name == "first") return Kernel::FirstOrder;
  if (name == "literal_quasi_static" || name == "literal") return Kernel::LiteralQuasiStatic;
  throw ValidationError("kernel: expected \"first_order\" or \"literal_quasi_static\", got \"" + name + "\"");
}

// per-mode transfer G(omega) of the sequence.  FirstOrder uses
// (J(omega) - J(0)) / (i omega) with J the drive transform shifted by the
// mode detuning; near omega = 0 the kernel series t + i omega t^2 / 2 avoids
// the cancellation.  LiteralQuasiStatic applies the kernel t at all omega.
inline std::complex<double> displacement_transfer(const DriveDecomposition& drive, double detuning,
                                                  double omega, Kernel kernel) {
  if (kernel == Kernel::LiteralQuasiStatic) return drive_transform_t(drive, omega - detuning);
  if (std::abs(omega) * drive.tau_s < 1e-6) {
    return drive_transform_t(drive, -detuning) +
           std::complex<double>(0, omega / 2) * drive_transform_t2(drive, -detuning);
  }
  return (drive_transform(drive, omega - detuning) - drive_transform(drive, -detuning)) /
         std::complex<double>(0, omega);
}

// susceptibility to mode-frequency noise at omega, in Hz^-2: the expected
// signal of a two-sided noise density S (Hz^2/Hz) is (1/2pi) integral S F.
// the (pi eta)^2 prefactor carries the Hz-to-rad conversion of the noise
// variable.
inline double filter_value_from(const DriveDecomposition& drive, const ModeConfig& modes,
                                double omega, Kernel kernel = Kernel::FirstOrder) {
  double total = 0;
  for (const auto& m : modes.modes) {
    const double pref = std::numbers::pi * m.lamb_dicke;
    const std::complex<double> g = displacement_transfer(drive, m.detuning, omega, kernel);
    total += m.thermal_factor() * pref * pref * std::norm(g);
  }
  return total;
}

inline double filter_value(const SampledWaveform& waveform, const ModeConfig& modes, double omega,
                           Kernel kernel = Kernel::FirstOrder) {
  validate(modes);
  if (!std::isfinite(omega)) throw ValidationError("filter_value: omega must be finite");
  return filter_value_from(decompose_drive(waveform.spec), modes, omega, kernel);
}

struct FilterCurve {
  Eigen::VectorXd omegas;  // rad/s
  Eigen::VectorXd values;  // Hz^-2
  std::string label;
};

inline FilterCurve filter_curve(const SampledWaveform& waveform, const ModeConfig& modes,
                                const Eigen::VectorXd& omega_grid,
                                Kernel kernel = Kernel::FirstOrder) {
  validate(modes);
  const DriveDecomposition drive = decompose_drive(waveform.spec);
  FilterCurve curve;
  curve.omegas = omega_grid;
  curve.values.resize(omega_grid.size());
  curve.label = waveform.spec.label;
  parallel_for(omega_grid.size(), [&](std::ptrdiff_t i) {
    curve.values(i) = filter_value_from(drive, modes, omega_grid(i), kernel);
  });
  return curve;
}

namespace detail {

struct RefinedPeak {
  int index = 0;
  double omega = 0;
  double value = 0;
};

// argmax over the grid (ties resolved toward larger omega) refined by a
// three-point parabola through the neighbours
inline RefinedPeak refined_peak(const FilterCurve& curve) {
  const int n = static_cast<int>(curve.values.size());
  if (n < 1) throw ValidationError("peak_frequency: empty curve");
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (curve.values(i) >= curve.values(best)) best = i;
  if (best == 0 || best == n - 1)
    throw ValidationError("peak_frequency: maximum at the grid edge, widen the frequency grid");
  const double y0 = curve.values(best - 1);
  const double y1 = curve.values(best);
  const double y2 = curve.values(best + 1);
  const double den = y0 - 2 * y1 + y2;
  RefinedPeak peak;
  peak.index = best;
  if (den >= 0) {  // flat or degenerate neighbourhood, keep the grid point
    peak.omega = curve.omegas(best);
    peak.value = y1;
    return peak;
  }
  const double h = (curve.omegas(best + 1) - curve.omegas(best - 1)) / 2;
  double shift = 0.5 * (y0 - y2) / den;
  shift = std::clamp(shift, -0.5, 0.5);
  peak.omega = curve.omegas(best) + shift * h;
  peak.value = y1 - (y2 - y0) * (y2 - y0) / (8 * den);
  return peak;
}

}  // namespace detail

inline double peak_frequency(const FilterCurve& curve) { return detail::refined_peak(curve).omega; }

// refined height of the main response, used by the sensitivity formulas
inline double peak_value(const FilterCurve& curve) { return detail::refined_peak(curve).value; }

// full width at half maximum around the refined peak, with each crossing
// located by linear interpolation between adjacent grid points
inline double bandwidth_fwhm(const FilterCurve& curve) {
  const auto peak = detail::refined_peak(curve);
  const double half = peak.value / 2;
  const int n = static_cast<int>(curve.values.size());

  auto cross = [&](int from, int step) -> double {
    for (int i = from; i + step >= 0 && i + step < n; i += step) {
      const double a = curve.values(i);
      const double b = curve.values(i + step);
      if (a >= half && b < half) {
        const double frac = (a - half) / (a - b);
        return curve.omegas(i) + frac * (curve.omegas(i + step) - curve.omegas(i));
      }
    }
    throw ValidationError("bandwidth_fwhm: half maximum not bracketed within the grid");
  };

  const double left = cross(peak.index, -1);
  const double right = cross(peak.index, +1);
  return right - left;
}

struct FilterMatrix {
  Eigen::MatrixXd entries;  // m sequences x n frequencies, scaled by domega / 2pi
  double omega_min = 0;
  double omega_max = 0;
  double domega = 0;
  std::vector<std::string> labels;

  Eigen::VectorXd omegas() const {
    return Eigen::VectorXd::LinSpaced(entries.cols(), omega_min, omega_max);
  }
};

// discretized forward map from a tabulated noise density to expected signals:
// entry (q, i) is (domega / 2pi) F_q(omega_i)
inline FilterMatrix filter_matrix(const std::vector<SequenceSpec>& specs, const ModeConfig& modes,
                                  double omega_min, double omega_max, int n,
                                  Kernel kernel = Kernel::FirstOrder) {
  validate(modes);
  if (specs.empty()) throw ValidationError("filter_matrix: no sequences");
  if (n < 2) throw ValidationError("filter_matrix: need n >= 2 grid points");
  if (!(omega_min < omega_max)) throw ValidationError("filter_matrix: need omega_min < omega_max");

  FilterMatrix fm;
  fm.omega_min = omega_min;
  fm.omega_max = omega_max;
  fm.domega = (omega_max - omega_min) / (n - 1);
  fm.entries.resize(static_cast<Eigen::Index>(specs.size()), n);
  fm.labels.reserve(specs.size());

  std::vector<DriveDecomposition> drives(specs.size());
  for (std::size_t q = 0; q < specs.size(); ++q) {
    drives[q] = decompose_drive(specs[q]);
    fm.labels.push_back(specs[q].label);
  }
  const Eigen::VectorXd grid = fm.omegas();
  const double scale = fm.domega / (2 * std::numbers::pi);
  parallel_for(static_cast<std::ptrdiff_t>(specs.size()) * n, [&](std::ptrdiff_t flat) {
    const auto q = flat / n;
    const auto i = flat % n;
    fm.entries(q, i) = scale * filter_value_from(drives[q], modes, grid(i), kernel);
  });
  return fm;
}

}  // namespace catspec
