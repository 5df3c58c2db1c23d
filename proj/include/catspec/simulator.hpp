#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "catspec/errors.hpp"
#include "catspec/filter.hpp"
#include "catspec/noise.hpp"
#include "catspec/parallel.hpp"
#include "catspec/rng.hpp"
#include "catspec/sequence.hpp"

namespace catspec {

struct TrajectoryResult {
  std::complex<double> alpha_final;
  double p1 = 0;
  // advisory flags: residual displacement and accumulated noise power small
  // enough for the first-order filter picture to hold
  bool small_displacement = true;
  bool weak_noise = true;
};

// branch-separation overlap for a thermal mode
inline double p1_from_alpha(std::complex<double> alpha, double mean_phonons) {
  return 0.5 * (1.0 - std::exp(-2.0 * std::norm(alpha) * (2.0 * mean_phonons + 1.0)));
}

// exact displacement under a sampled detuning trace nu(t) in Hz:
// alpha(tau) = -i (eta / 2) integral omega(t) e^{-i [delta t + phi(t) + Theta(t)]} dt
// with Theta the cumulative trapezoid of 2 pi nu.  composite Simpson per
// segment; the waveform grid places every segment boundary on a sample.
inline TrajectoryResult integrate_displacement(const SampledWaveform& waveform, const Mode& mode,
                                               const Eigen::VectorXd& trace) {
  const Eigen::Index n = waveform.times.size();
  if (trace.size() != n)
    throw ValidationError("integrate_displacement: trace length does not match the waveform grid");

  const int s_count = waveform.spec.num_phase_shifts;
  const int c = static_cast<int>((n - 1) / (2 * s_count));  // intervals per half segment
  const double dt = waveform.times(1) - waveform.times(0);

  Eigen::VectorXd theta(n);
  theta(0) = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    theta(i) = theta(i - 1) + std::numbers::pi * (trace(i) + trace(i - 1)) * dt;  // 2pi * trapezoid

  std::complex<double> total = 0;
  for (int seg = 0; seg <= s_count; ++seg) {
    const int h0 = std::max(2 * seg - 1, 0);
    const int h1 = std::min(2 * seg, 2 * s_count - 1);
    const int i0 = h0 * c;
    const int i1 = (h1 + 1) * c;
    const double sign = (seg % 2 == 0) ? 1.0 : -1.0;

    std::complex<double> acc = 0;
    for (int i = i0; i <= i1; ++i) {
      const double arg = mode.detuning * waveform.times(i) + theta(i);
      const std::complex<double> g =
          waveform.rabi(i) * std::complex<double>(std::cos(arg), -std::sin(arg));
      const double weight = (i == i0 || i == i1) ? 1.0 : (((i - i0) % 2) ? 4.0 : 2.0);
      acc += weight * g;
    }
    total += sign * acc * (dt / 3.0);
  }

  TrajectoryResult result;
  result.alpha_final = std::complex<double>(0, -0.5 * mode.lamb_dicke) * total;
  result.p1 = p1_from_alpha(result.alpha_final, mode.mean_phonons);
  result.small_displacement = std::norm(result.alpha_final) < 0.1;
  const double eps2 = (2 * std::numbers::pi) * (2 * std::numbers::pi) * trace.squaredNorm() /
                      static_cast<double>(n);
  result.weak_noise = eps2 * waveform.spec.tau_s * waveform.spec.tau_s < 0.1;
  return result;
}

namespace detail {

// sampling density rule: dt <= min(segment / 64, 2 pi / (32 omega_content))
inline int campaign_samples_per_segment(const SequenceSpec& spec, const NoiseModel& noise) {
  const double seg = spec.tau_s / spec.num_phase_shifts;
  double dt = seg / 64;
  const double content = std::max(omega_s(spec), max_content_frequency(noise));
  if (content > 0) dt = std::min(dt, 2 * std::numbers::pi / (32 * content));
  const int c = static_cast<int>(std::ceil(seg / (2 * dt)));  // intervals per half segment
  return 2 * (c + (c % 2));  // even c, expressed as min samples per segment
}

}  // namespace detail

// mean and standard error of p1 over independent noise realizations (phase
// draws for tones, full resynthesis for tabulated densities).  realizations
// run in parallel on substreams derived from one draw of the caller's stream,
// so results do not depend on the worker count.
inline std::pair<double, double> expected_p1(const SequenceSpec& spec, const Mode& mode,
                                             const NoiseModel& noise, int num_phase_samples,
                                             Rng& rng) {
  if (num_phase_samples < 1) throw ValidationError("expected_p1: need num_phase_samples >= 1");
  validate(noise);
  const SampledWaveform waveform =
      sample_waveform(spec, detail::campaign_samples_per_segment(spec, noise));
  const std::uint64_t base = rng.next_u64();

  Eigen::VectorXd p1s(num_phase_samples);
  parallel_for(num_phase_samples, [&](std::ptrdiff_t k) {
    Rng sub = Rng::derive(base, static_cast<std::uint64_t>(k));
    const Eigen::VectorXd trace = detuning_trace(noise, waveform.times, sub);
    p1s(k) = integrate_displacement(waveform, mode, trace).p1;
  });

  const double mean = p1s.mean();
  if (num_phase_samples == 1) return {mean, 0.0};
  const double var = (p1s.array() - mean).square().sum() / (num_phase_samples - 1);
  return {mean, std::sqrt(var / num_phase_samples)};
}

struct MeasurementRecord {
  std::string label;
  double tau_s = 0;
  int num_phase_shifts = 0;
  Shape shape = Shape::Square;
  double omega_max = 0;
  double p1_mean = 0;
  double p1_std = 0;
  int blocks = 0;
  int reps_per_block = 0;
  std::uint64_t seed = 0;
};

// M block means and their spread, one binomial draw Bin(r, p)/r per block.
// each block holds its own fresh noise realization, mimicking runs whose
// timing drifts between blocks; the record keeps the mean over blocks and the
// sample standard deviation.
inline std::vector<MeasurementRecord> measurement_campaign(const std::vector<SequenceSpec>& specs,
                                                           const Mode& mode,
                                                           const NoiseModel& noise, int blocks,
                                                           int reps_per_block, Rng& rng) {
  if (blocks < 2) throw ValidationError("measurement_campaign: need blocks >= 2");
  if (reps_per_block < 1) throw ValidationError("measurement_campaign: need reps_per_block >= 1");
  validate(noise);

  const std::uint64_t base = rng.next_u64();
  std::vector<MeasurementRecord> records(specs.size());
  parallel_for(static_cast<std::ptrdiff_t>(specs.size()), [&](std::ptrdiff_t q) {
    const SequenceSpec& spec = specs[q];
    const SampledWaveform waveform =
        sample_waveform(spec, detail::campaign_samples_per_segment(spec, noise));
    Eigen::VectorXd block_means(blocks);
    for (int b = 0; b < blocks; ++b) {
      Rng sub = Rng::derive(base, static_cast<std::uint64_t>(q) * blocks + b);
      const Eigen::VectorXd trace = detuning_trace(noise, waveform.times, sub);
      const double p = integrate_displacement(waveform, mode, trace).p1;
      block_means(b) = static_cast<double>(sub.binomial(reps_per_block, p)) / reps_per_block;
    }
    MeasurementRecord& rec = records[q];
    rec.label = spec.label;
    rec.tau_s = spec.tau_s;
    rec.num_phase_shifts = spec.num_phase_shifts;
    rec.shape = spec.shape;
    rec.omega_max = spec.omega_max;
    rec.p1_mean = block_means.mean();
    rec.p1_std = std::sqrt((block_means.array() - rec.p1_mean).square().sum() / (blocks - 1));
    rec.blocks = blocks;
    rec.reps_per_block = reps_per_block;
    rec.seed = base;
  });
  return records;
}

}  // namespace catspec
