#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "catspec/dpss.hpp"
#include "catspec/errors.hpp"
#include "catspec/moments.hpp"

namespace catspec {

enum class Shape { Square, Slepian };

inline std::string shape_name(Shape s) { return s == Shape::Square ? "square" : "slepian"; }

inline Shape shape_from_name(const std::string& name) {
  if (name == "square") return Shape::Square;
  if (name == "slepian") return Shape::Slepian;
  throw ValidationError("shape: expected \"square\" or \"slepian\", got \"" + name + "\"");
}

// a sensing sequence: total duration tau_s, S phase shifts, peak coupling
// omega_max (rad/s), and the amplitude shape.  Slepian envelopes take the
// dpss length and half bandwidth; zero selects the defaults
// num_points = max(512, 16 S) and half_bandwidth = 1/num_points.
struct SequenceSpec {
  std::string label;
  double tau_s = 0;
  int num_phase_shifts = 0;
  double omega_max = 0;
  Shape shape = Shape::Square;
  int envelope_points = 0;
  double half_bandwidth = 0;

  bool operator==(const SequenceSpec&) const = default;
};

inline int default_envelope_points(const SequenceSpec& spec) {
  return spec.envelope_points > 0 ? spec.envelope_points
                                  : std::max(512, 16 * spec.num_phase_shifts);
}

inline double default_half_bandwidth(const SequenceSpec& spec) {
  return spec.half_bandwidth > 0 ? spec.half_bandwidth : 1.0 / default_envelope_points(spec);
}

inline void validate(const SequenceSpec& spec) {
  const std::string who = "sequence \"" + spec.label + "\": ";
  if (!(spec.tau_s > 0)) throw ValidationError(who + "tau_s must be > 0");
  if (spec.num_phase_shifts < 1) throw ValidationError(who + "num_phase_shifts must be >= 1");
  if (spec.omega_max < 0) throw ValidationError(who + "omega_max must be >= 0");
  if (spec.shape == Shape::Slepian) {
    const int n = default_envelope_points(spec);
    const double w = default_half_bandwidth(spec);
    if (n < spec.num_phase_shifts)
      throw ValidationError(who + "envelope_points must be >= num_phase_shifts");
    if (!(w > 0 && w < 0.5)) throw ValidationError(who + "half_bandwidth must lie in (0, 1/2)");
  }
}

// modulation frequency commensurate with the phase flips
inline double omega_s(const SequenceSpec& spec) {
  return std::numbers::pi * spec.num_phase_shifts / spec.tau_s;
}

struct PhaseSegment {
  double start_s = 0;
  double duration_s = 0;
  double phase = 0;  // 0 or pi
};

// S + 1 segments tiling [0, tau]: the two end segments last tau/(2S), the
// interior ones tau/S, and the phase alternates 0, pi, 0, ... from the start
inline std::vector<PhaseSegment> build_segments(const SequenceSpec& spec) {
  validate(spec);
  const int s_count = spec.num_phase_shifts;
  const double tau = spec.tau_s;
  std::vector<PhaseSegment> segments(s_count + 1);
  auto boundary = [&](int s) {
    if (s <= 0) return 0.0;
    if (s > s_count) return tau;
    return tau * (2 * s - 1) / (2.0 * s_count);
  };
  for (int s = 0; s <= s_count; ++s) {
    segments[s].start_s = boundary(s);
    segments[s].duration_s = boundary(s + 1) - boundary(s);
    segments[s].phase = (s % 2 == 0) ? 0.0 : std::numbers::pi;
  }
  return segments;
}

// dpss envelope sample times and values for a Slepian spec
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> envelope_knots(const SequenceSpec& spec) {
  const int n = default_envelope_points(spec);
  const double w = default_half_bandwidth(spec);
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n, 0.0, spec.tau_s);
  return {std::move(times), dpss_zeroth<double>(n, w)};
}

struct SampledWaveform {
  Eigen::VectorXd times;  // uniform over [0, tau], segment boundaries on grid
  Eigen::VectorXd rabi;   // omega(t) >= 0, rad/s
  Eigen::VectorXd phase;  // phi(t), 0 or pi
  SequenceSpec spec;
};

// uniform sampling with at least min_samples_per_segment samples across every
// interior segment.  the step is tau / (2 S c) with c even, so each segment
// boundary lands exactly on the grid and every segment spans an even number of
// intervals.
inline SampledWaveform sample_waveform(const SequenceSpec& spec, int min_samples_per_segment = 8) {
  validate(spec);
  if (min_samples_per_segment < 8)
    throw ValidationError("sample_waveform: min_samples_per_segment must be >= 8");
  const int s_count = spec.num_phase_shifts;
  const int c = 2 * ((min_samples_per_segment + 3) / 4);  // intervals per half segment
  const int intervals = 2 * s_count * c;

  SampledWaveform wf;
  wf.spec = spec;
  wf.times = Eigen::VectorXd::LinSpaced(intervals + 1, 0.0, spec.tau_s);
  wf.rabi.resize(intervals + 1);
  wf.phase.resize(intervals + 1);

  const double ws = omega_s(spec);
  Eigen::VectorXd env_times, env_values;
  if (spec.shape == Shape::Slepian) std::tie(env_times, env_values) = envelope_knots(spec);

  for (int i = 0; i <= intervals; ++i) {
    const int half = std::min(i / c, 2 * s_count - 1);
    const int seg = (half + 1) / 2;
    wf.phase(i) = (seg % 2 == 0) ? 0.0 : std::numbers::pi;
    if (spec.shape == Shape::Square) {
      wf.rabi(i) = spec.omega_max;
    } else {
      const double t = wf.times(i);
      const int nk = static_cast<int>(env_times.size());
      const double pos = t / spec.tau_s * (nk - 1);
      const int k = std::min(static_cast<int>(pos), nk - 2);
      const double frac = pos - k;
      const double env = env_values(k) * (1 - frac) + env_values(k + 1) * frac;
      wf.rabi(i) = spec.omega_max * std::abs(env * std::cos(ws * t));
    }
  }
  return wf;
}

// piecewise linear-times-cosine description of the sign-resolved drive
// omega(t) e^{-i phi(t)} = (a + b t) cos(carrier t) on each piece.  the phase
// flips fold into the carrier sign pattern: for Slepian shapes the carrier is
// omega_s and the pieces follow the envelope knots; for square shapes the
// carrier is zero and the pieces are the segments with alternating sign.
struct DrivePiece {
  double t0 = 0, t1 = 0;
  double a = 0, b = 0;
};

struct DriveDecomposition {
  std::vector<DrivePiece> pieces;
  double carrier = 0;
  double tau_s = 0;
};

inline DriveDecomposition decompose_drive(const SequenceSpec& spec) {
  validate(spec);
  DriveDecomposition d;
  d.tau_s = spec.tau_s;
  if (spec.shape == Shape::Square) {
    d.carrier = 0;
    const auto segments = build_segments(spec);
    d.pieces.reserve(segments.size());
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const double sign = (s % 2 == 0) ? 1.0 : -1.0;
      d.pieces.push_back({segments[s].start_s, segments[s].start_s + segments[s].duration_s,
                          sign * spec.omega_max, 0.0});
    }
    return d;
  }
  d.carrier = omega_s(spec);
  const auto [env_times, env_values] = envelope_knots(spec);
  const int nk = static_cast<int>(env_times.size());
  d.pieces.reserve(nk - 1);
  for (int k = 0; k + 1 < nk; ++k) {
    const double t0 = env_times(k), t1 = env_times(k + 1);
    const double b = (env_values(k + 1) - env_values(k)) / (t1 - t0);
    const double a = env_values(k) - b * t0;
    d.pieces.push_back({t0, t1, spec.omega_max * a, spec.omega_max * b});
  }
  return d;
}

// integral of the sign-resolved drive against e^{i mu t}, exact per piece
inline std::complex<double> drive_transform(const DriveDecomposition& d, double mu) {
  std::complex<double> acc = 0;
  for (const auto& p : d.pieces) {
    if (d.carrier == 0) {
      acc += integral_linear(p.a, p.b, p.t0, p.t1, mu);
    } else {
      acc += 0.5 * (integral_linear(p.a, p.b, p.t0, p.t1, mu + d.carrier) +
                    integral_linear(p.a, p.b, p.t0, p.t1, mu - d.carrier));
    }
  }
  return acc;
}

// same with an extra factor t in the integrand
inline std::complex<double> drive_transform_t(const DriveDecomposition& d, double mu) {
  std::complex<double> acc = 0;
  for (const auto& p : d.pieces) {
    if (d.carrier == 0) {
      acc += integral_linear_t(p.a, p.b, p.t0, p.t1, mu);
    } else {
      acc += 0.5 * (integral_linear_t(p.a, p.b, p.t0, p.t1, mu + d.carrier) +
                    integral_linear_t(p.a, p.b, p.t0, p.t1, mu - d.carrier));
    }
  }
  return acc;
}

// and with t^2
inline std::complex<double> drive_transform_t2(const DriveDecomposition& d, double mu) {
  std::complex<double> acc = 0;
  for (const auto& p : d.pieces) {
    if (d.carrier == 0) {
      acc += integral_linear_t2(p.a, p.b, p.t0, p.t1, mu);
    } else {
      acc += 0.5 * (integral_linear_t2(p.a, p.b, p.t0, p.t1, mu + d.carrier) +
                    integral_linear_t2(p.a, p.b, p.t0, p.t1, mu - d.carrier));
    }
  }
  return acc;
}

// noise-free end-of-sequence displacement -i (eta / 2) integral of
// omega(t) e^{-i phi(t)}.  evaluated from the exact piecewise decomposition,
// so the value is independent of the sampling density.
inline std::complex<double> nominal_closure(const SampledWaveform& waveform, double lamb_dicke) {
  const DriveDecomposition d = decompose_drive(waveform.spec);
  return std::complex<double>(0, -0.5 * lamb_dicke) * drive_transform(d, 0.0);
}

}  // namespace catspec
