#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "catspec/errors.hpp"
#include "catspec/nnls.hpp"
#include "catspec/parallel.hpp"
#include "catspec/rng.hpp"

namespace catspec {

struct MeasurementSet {
  Eigen::VectorXd p;      // expected-signal estimates
  Eigen::VectorXd sigma;  // per-row uncertainties
  std::vector<std::string> labels;
  int blocks = 0;          // campaign statistics when known, for the noise floor
  int reps_per_block = 0;
};

inline void validate(const MeasurementSet& meas, Eigen::Index rows) {
  if (meas.p.size() != rows)
    throw ValidationError("measurements: " + std::to_string(meas.p.size()) +
                          " rows do not match the " + std::to_string(rows) + " filter rows");
  if (meas.sigma.size() != meas.p.size())
    throw ValidationError("measurements: sigma length does not match p");
  for (Eigen::Index i = 0; i < meas.p.size(); ++i) {
    if (meas.p(i) < 0) throw ValidationError("measurements: p must be >= 0");
    if (meas.sigma(i) < 0) throw ValidationError("measurements: sigma must be >= 0");
  }
}

struct ReconstructionConfig {
  std::vector<double> lambda_candidates;  // empty selects the scaled default grid
  int resamples = 50;
  double tolerance = 1e-10;
  std::uint64_t seed = 0;

  bool operator==(const ReconstructionConfig&) const = default;
};

// 25 logarithmic points over [1e-6, 1e2] scaled by trace(F^T F)/trace(D^T D)
inline std::vector<double> default_lambda_grid(const Eigen::MatrixXd& f) {
  const int n = static_cast<int>(f.cols());
  const double trace_ftf = f.squaredNorm();
  const double trace_dtd = 2.0 * n - 2.0;
  const double scale = trace_ftf / trace_dtd;
  std::vector<double> grid(25);
  for (int i = 0; i < 25; ++i) grid[i] = scale * std::pow(10.0, -6.0 + 8.0 * i / 24.0);
  return grid;
}

// zero uncertainties on nonzero signals are floored at max(1e-4, binomial
// shot noise) so that resampling never degenerates; an exact zero with zero
// spread stays exact
inline Eigen::VectorXd floored_sigma(const MeasurementSet& meas) {
  Eigen::VectorXd sigma = meas.sigma;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) == 0 && meas.p(i) > 0) {
      double floor = 1e-4;
      if (meas.blocks > 0 && meas.reps_per_block > 0) {
        const double p = std::clamp(meas.p(i), 0.0, 1.0);
        floor = std::max(floor, std::sqrt(p * (1 - p) / (static_cast<double>(meas.blocks) *
                                                         meas.reps_per_block)));
      }
      sigma(i) = floor;
    }
  }
  return sigma;
}

struct CvEntry {
  double lambda = 0;
  double error_first = 0;   // train odd rows, test even rows
  double error_second = 0;  // swapped halves
  double mean_error() const { return (error_first + error_second) / 2; }
};

struct CrossValidation {
  double chosen_lambda = 0;
  std::vector<CvEntry> table;
};

// split-half cross validation: rows of one parity train, the others test.
// each candidate is scored on l Gaussian resamples of the training half
// (clipped at zero), the same draws shared across candidates; ties resolve
// toward the larger, smoother candidate.
inline CrossValidation cross_validate(const Eigen::MatrixXd& f, const MeasurementSet& meas,
                                      const ReconstructionConfig& config) {
  validate(meas, f.rows());
  const std::vector<double> lambdas =
      config.lambda_candidates.empty() ? default_lambda_grid(f) : config.lambda_candidates;
  if (lambdas.empty()) throw ValidationError("cross_validate: no lambda candidates");
  for (double lambda : lambdas)
    if (lambda <= 0)
      throw ValidationError("cross_validate: lambda candidates must be > 0 (direct solves may use 0)");

  CrossValidation cv;
  cv.table.resize(lambdas.size());
  if (lambdas.size() == 1) {
    cv.chosen_lambda = lambdas[0];
    cv.table[0] = {lambdas[0], 0, 0};
    return cv;
  }

  const int m = static_cast<int>(f.rows());
  if (m < 4) throw ValidationError("cross_validate: need at least 4 measurement rows");
  if (config.resamples < 1) throw ValidationError("cross_validate: need resamples >= 1");

  std::vector<int> odd, even;
  for (int i = 0; i < m; ++i) (i % 2 ? odd : even).push_back(i);

  const Eigen::VectorXd sigma = floored_sigma(meas);
  auto take_rows = [&](const std::vector<int>& rows, const Eigen::MatrixXd& mat) {
    Eigen::MatrixXd out(rows.size(), mat.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = mat.row(rows[i]);
    return out;
  };
  auto take = [&](const std::vector<int>& rows, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
  };

  const int l = config.resamples;
  struct Half {
    Eigen::MatrixXd f_train, f_test;
    Eigen::VectorXd p_test;
    std::vector<Eigen::VectorXd> draws;
  };
  std::array<Half, 2> halves;
  for (int h = 0; h < 2; ++h) {
    const auto& train = (h == 0) ? odd : even;
    const auto& test = (h == 0) ? even : odd;
    halves[h].f_train = take_rows(train, f);
    halves[h].f_test = take_rows(test, f);
    halves[h].p_test = take(test, meas.p);
    const Eigen::VectorXd p_train = take(train, meas.p);
    const Eigen::VectorXd s_train = take(train, sigma);
    halves[h].draws.reserve(l);
    for (int i = 0; i < l; ++i) {
      Rng sub = Rng::derive(config.seed, static_cast<std::uint64_t>(h) * l + i);
      Eigen::VectorXd draw(p_train.size());
      for (Eigen::Index j = 0; j < draw.size(); ++j)
        draw(j) = std::max(0.0, p_train(j) + s_train(j) * sub.normal());
      halves[h].draws.push_back(std::move(draw));
    }
  }

  parallel_for(static_cast<std::ptrdiff_t>(lambdas.size()), [&](std::ptrdiff_t j) {
    CvEntry entry;
    entry.lambda = lambdas[j];
    for (int h = 0; h < 2; ++h) {
      double acc = 0;
      for (const auto& draw : halves[h].draws) {
        const auto sol = solve_regularized_nnls(halves[h].f_train, draw, lambdas[j], config.tolerance);
        acc += (halves[h].f_test * sol.s - halves[h].p_test).norm();
      }
      (h == 0 ? entry.error_first : entry.error_second) = acc / l;
    }
    cv.table[j] = entry;
  });

  std::size_t best = 0;
  for (std::size_t j = 1; j < cv.table.size(); ++j)
    if (cv.table[j].mean_error() <= cv.table[best].mean_error()) best = j;
  cv.chosen_lambda = cv.table[best].lambda;
  return cv;
}

struct SpectrumEstimate {
  Eigen::VectorXd omegas;
  Eigen::VectorXd s;  // Hz^2/Hz, >= 0
  Eigen::VectorXd band_low, band_high;  // 16th/84th percentile of the resample ensemble
  double chosen_lambda = 0;
  double objective = 0;
  double residual_norm = 0;
  std::vector<CvEntry> cv_table;
};

// cross-validate, solve on the full data, then band the estimate with l
// full-data resamples at the chosen candidate
inline SpectrumEstimate reconstruct(const FilterMatrix& fm, const MeasurementSet& meas,
                                    const ReconstructionConfig& config) {
  const Eigen::MatrixXd& f = fm.entries;
  validate(meas, f.rows());
  if (!meas.labels.empty() && meas.labels.size() == fm.labels.size()) {
    for (std::size_t i = 0; i < meas.labels.size(); ++i)
      if (meas.labels[i] != fm.labels[i])
        throw ValidationError("reconstruct: measurement label \"" + meas.labels[i] +
                              "\" does not match filter row \"" + fm.labels[i] + "\"");
  }

  CrossValidation cv = cross_validate(f, meas, config);
  const auto point = solve_regularized_nnls(f, meas.p, cv.chosen_lambda, config.tolerance);

  const Eigen::VectorXd sigma = floored_sigma(meas);
  const int l = config.resamples;
  std::vector<Eigen::VectorXd> ensemble(l);
  parallel_for(l, [&](std::ptrdiff_t i) {
    Rng sub = Rng::derive(config.seed, 0x10000000ull + static_cast<std::uint64_t>(i));
    Eigen::VectorXd draw(meas.p.size());
    for (Eigen::Index j = 0; j < draw.size(); ++j)
      draw(j) = std::max(0.0, meas.p(j) + sigma(j) * sub.normal());
    ensemble[i] = solve_regularized_nnls(f, draw, cv.chosen_lambda, config.tolerance).s;
  });

  const int n = static_cast<int>(f.cols());
  SpectrumEstimate est;
  est.omegas = fm.omegas();
  est.s = point.s;
  est.band_low.resize(n);
  est.band_high.resize(n);
  std::vector<double> column(l);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < l; ++i) column[i] = ensemble[i](j);
    std::sort(column.begin(), column.end());
    auto percentile = [&](double q) {
      if (l == 1) return column[0];
      const double pos = q * (l - 1);
      const int k = static_cast<int>(pos);
      const double frac = pos - k;
      return k + 1 < l ? column[k] * (1 - frac) + column[k + 1] * frac : column[k];
    };
    est.band_low(j) = percentile(0.16);
    est.band_high(j) = percentile(0.84);
  }
  est.chosen_lambda = cv.chosen_lambda;
  est.objective = point.objective;
  est.residual_norm = point.residual_norm;
  est.cv_table = std::move(cv.table);
  return est;
}

}  // namespace catspec
