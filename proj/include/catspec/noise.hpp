#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <variant>
#include <vector>

#include "catspec/errors.hpp"
#include "catspec/rng.hpp"

namespace catspec {

struct NoNoise {
  bool operator==(const NoNoise&) const = default;
};

// nu(t) = amplitude_hz * sin(omega t + phase); a randomized tone draws a
// fresh phase per realization
struct SingleTone {
  double amplitude_hz = 0;
  double omega = 0;  // rad/s
  double phase = 0;
  bool randomized = true;

  bool operator==(const SingleTone&) const = default;
};

struct MultiTone {
  std::vector<SingleTone> tones;

  bool operator==(const MultiTone&) const = default;
};

// tabulated two-sided noise density S(omega) in Hz^2/Hz on a positive
// frequency grid.  realizations are harmonic superpositions over `bins`
// uniform bins across the tabulated support.
struct SampledPSD {
  Eigen::VectorXd omegas;  // ascending, > 0
  Eigen::VectorXd values;  // >= 0
  int bins = 256;

  bool operator==(const SampledPSD& other) const {
    return bins == other.bins && omegas == other.omegas && values == other.values;
  }
};

using NoiseModel = std::variant<NoNoise, SingleTone, MultiTone, SampledPSD>;

inline void validate(const NoiseModel& noise) {
  if (const auto* tone = std::get_if<SingleTone>(&noise)) {
    if (tone->amplitude_hz < 0) throw ValidationError("noise: tone amplitude_hz must be >= 0");
  } else if (const auto* multi = std::get_if<MultiTone>(&noise)) {
    for (const auto& t : multi->tones)
      if (t.amplitude_hz < 0) throw ValidationError("noise: tone amplitude_hz must be >= 0");
  } else if (const auto* psd = std::get_if<SampledPSD>(&noise)) {
    if (psd->omegas.size() < 2 || psd->omegas.size() != psd->values.size())
      throw ValidationError("noise: psd table needs matching omega/value columns, at least 2 rows");
    if (psd->bins < 1) throw ValidationError("noise: psd bins must be >= 1");
    for (Eigen::Index i = 0; i < psd->omegas.size(); ++i) {
      if (psd->values(i) < 0) throw ValidationError("noise: psd values must be >= 0");
      if (psd->omegas(i) <= 0 || (i > 0 && psd->omegas(i) <= psd->omegas(i - 1)))
        throw ValidationError("noise: psd omegas must be ascending and > 0");
    }
  }
}

namespace detail {

inline void require_uniform(const Eigen::VectorXd& times) {
  const Eigen::Index n = times.size();
  if (n < 2) throw ValidationError("detuning_trace: need at least 2 time samples");
  const double dt = (times(n - 1) - times(0)) / static_cast<double>(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(times(i) - times(i - 1) - dt) > 1e-9 * std::abs(dt))
      throw ValidationError("detuning_trace: time grid must be uniform");
  }
}

inline void add_tone(Eigen::VectorXd& nu, const Eigen::VectorXd& times, const SingleTone& tone,
                     Rng& rng) {
  const double phase = tone.randomized ? rng.uniform(0.0, 2 * std::numbers::pi) : tone.phase;
  for (Eigen::Index i = 0; i < times.size(); ++i)
    nu(i) += tone.amplitude_hz * std::sin(tone.omega * times(i) + phase);
}

}  // namespace detail

// one realization of the mode-frequency deviation nu(t) in Hz on the given
// uniform time grid.  tabulated densities synthesize
// nu(t) = sum_j A_j cos(omega_j t + phi_j) with A_j = sqrt(2 S_j dOmega / pi)
// and i.i.d. uniform phases, which reproduces the two-sided density.
inline Eigen::VectorXd detuning_trace(const NoiseModel& noise, const Eigen::VectorXd& times,
                                      Rng& rng) {
  validate(noise);
  detail::require_uniform(times);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(times.size());

  if (std::holds_alternative<NoNoise>(noise)) return nu;

  if (const auto* tone = std::get_if<SingleTone>(&noise)) {
    detail::add_tone(nu, times, *tone, rng);
    return nu;
  }
  if (const auto* multi = std::get_if<MultiTone>(&noise)) {
    for (const auto& t : multi->tones) detail::add_tone(nu, times, t, rng);
    return nu;
  }

  const auto& psd = std::get<SampledPSD>(noise);
  const double lo = psd.omegas(0);
  const double hi = psd.omegas(psd.omegas.size() - 1);
  const double dw = (hi - lo) / psd.bins;
  for (int j = 0; j < psd.bins; ++j) {
    const double wj = lo + (j + 0.5) * dw;
    // linear interpolation of the table at the bin center
    Eigen::Index k = 0;
    while (k + 2 < psd.omegas.size() && psd.omegas(k + 1) < wj) ++k;
    const double frac = (wj - psd.omegas(k)) / (psd.omegas(k + 1) - psd.omegas(k));
    const double sj = psd.values(k) * (1 - std::clamp(frac, 0.0, 1.0)) +
                      psd.values(k + 1) * std::clamp(frac, 0.0, 1.0);
    const double amp = std::sqrt(2.0 * sj * dw / std::numbers::pi);
    const double phi = rng.uniform(0.0, 2 * std::numbers::pi);
    for (Eigen::Index i = 0; i < times.size(); ++i) nu(i) += amp * std::cos(wj * times(i) + phi);
  }
  return nu;
}

// largest angular frequency present in the model, used to pick time steps
inline double max_content_frequency(const NoiseModel& noise) {
  if (const auto* tone = std::get_if<SingleTone>(&noise)) return std::abs(tone->omega);
  if (const auto* multi = std::get_if<MultiTone>(&noise)) {
    double m = 0;
    for (const auto& t : multi->tones) m = std::max(m, std::abs(t.omega));
    return m;
  }
  if (const auto* psd = std::get_if<SampledPSD>(&noise)) return psd->omegas(psd->omegas.size() - 1);
  return 0;
}

}  // namespace catspec
