#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "catspec/errors.hpp"
#include "catspec/filter.hpp"

namespace catspec {

// (n-1) x n forward difference rows [-1, 1]
inline Eigen::MatrixXd first_derivative_operator(int n) {
  if (n < 2) throw ValidationError("first_derivative_operator: need n >= 2");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    d(i, i) = -1;
    d(i, i + 1) = 1;
  }
  return d;
}

struct NnlsResult {
  Eigen::VectorXd x;
  std::vector<double> objective_trace;  // ||Ax - b||^2 after each passive-set change
  int iterations = 0;
  double kkt_residual = 0;
};

// active-set nonnegative least squares (Lawson-Hanson).  the Gram matrix and
// A^T b are formed once; each passive-set subproblem is solved through a
// Cholesky factor of the passive block.  terminates when every clamped
// coordinate has gradient >= -tol and every free coordinate has |gradient|
// <= tol, both relative to the problem scale.
inline NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol = 1e-10,
                       int max_iterations = 0) {
  const int n = static_cast<int>(a.cols());
  if (a.rows() != b.size()) throw ValidationError("nnls: dimension mismatch between A and b");
  if (max_iterations <= 0) max_iterations = 30 * std::max(n, 10);

  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;
  const double btb = b.squaredNorm();
  const double scale = std::max(1.0, atb.cwiseAbs().maxCoeff());
  const double threshold = tol * scale;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<int> passive;
  std::vector<bool> in_passive(n, false);

  auto objective = [&](const Eigen::VectorXd& v) {
    return v.dot(gram * v) - 2 * atb.dot(v) + btb;
  };

  auto solve_passive = [&]() -> Eigen::VectorXd {
    const int k = static_cast<int>(passive.size());
    Eigen::MatrixXd gp(k, k);
    Eigen::VectorXd fp(k);
    for (int i = 0; i < k; ++i) {
      fp(i) = atb(passive[i]);
      for (int j = 0; j < k; ++j) gp(i, j) = gram(passive[i], passive[j]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gp);
    if (llt.info() == Eigen::Success) return llt.solve(fp);
    // rank-deficient passive block: fall back to a rank-revealing solve
    return gp.completeOrthogonalDecomposition().solve(fp);
  };

  NnlsResult result;
  result.objective_trace.push_back(btb);

  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    const Eigen::VectorXd w = atb - gram * x;  // negative gradient / 2
    int best = -1;
    double best_w = threshold;
    for (int i = 0; i < n; ++i) {
      if (!in_passive[i] && w(i) > best_w) {
        best_w = w(i);
        best = i;
      }
    }
    if (best < 0) break;
    passive.push_back(best);
    in_passive[best] = true;

    for (;;) {
      const Eigen::VectorXd z = solve_passive();
      bool feasible = true;
      double alpha = 1.0;
      int drop = -1;
      for (std::size_t i = 0; i < passive.size(); ++i) {
        if (z(static_cast<int>(i)) <= 0) {
          feasible = false;
          const double xi = x(passive[i]);
          const double step = xi / (xi - z(static_cast<int>(i)));
          if (step < alpha) {
            alpha = step;
            drop = static_cast<int>(i);
          }
        }
      }
      if (feasible) {
        x.setZero();
        for (std::size_t i = 0; i < passive.size(); ++i) x(passive[i]) = z(static_cast<int>(i));
        break;
      }
      for (std::size_t i = 0; i < passive.size(); ++i) {
        const int idx = passive[i];
        x(idx) += alpha * (z(static_cast<int>(i)) - x(idx));
      }
      if (drop >= 0) {
        const int idx = passive[drop];
        x(idx) = 0;
        in_passive[idx] = false;
        passive.erase(passive.begin() + drop);
      }
      // remove any coordinate driven to zero by the step
      for (std::size_t i = passive.size(); i-- > 0;) {
        if (x(passive[i]) <= 0) {
          x(passive[i]) = 0;
          in_passive[passive[i]] = false;
          passive.erase(passive.begin() + static_cast<std::ptrdiff_t>(i));
        }
      }
      if (passive.empty()) break;
    }
    result.objective_trace.push_back(objective(x));
  }
  if (iter >= max_iterations) {
    throw NumericError("nnls: iteration cap " + std::to_string(max_iterations) +
                       " exceeded, residual norm " + std::to_string(std::sqrt(std::max(0.0, objective(x)))));
  }

  const Eigen::VectorXd w = atb - gram * x;
  double kkt = 0;
  for (int i = 0; i < n; ++i) {
    if (x(i) > 0)
      kkt = std::max(kkt, std::abs(w(i)));
    else
      kkt = std::max(kkt, std::max(0.0, w(i)));
  }
  result.x = x;
  result.iterations = iter;
  result.kkt_residual = kkt;
  return result;
}

// projected gradient descent with momentum restarts, for cross-checking the
// active-set path and for problems too large for it
inline Eigen::VectorXd nnls_projected_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                               int iterations = 4000) {
  const int n = static_cast<int>(a.cols());
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;

  // largest curvature via power iteration
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  double lip = 1;
  for (int i = 0; i < 60; ++i) {
    v = (gram * v).eval();
    lip = v.norm();
    if (lip == 0) return Eigen::VectorXd::Zero(n);
    v /= lip;
  }
  const double step = 1.0 / lip;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = x;
  double t = 1;
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd grad = gram * y - atb;
    Eigen::VectorXd xn = (y - step * grad).cwiseMax(0.0);
    const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
    y = xn + ((t - 1) / tn) * (xn - x);
    const double obj = xn.dot(gram * xn) - 2 * atb.dot(xn);
    if (obj > prev_obj) {  // momentum restart
      y = xn;
      t = 1;
    } else {
      t = tn;
    }
    prev_obj = obj;
    x = std::move(xn);
  }
  return x;
}

struct RegularizedSolution {
  Eigen::VectorXd s;
  double objective = 0;      // ||Fs - p||^2 + lambda ||Ds||^2
  double residual_norm = 0;  // ||Fs - p||
  std::vector<double> objective_trace;
  double kkt_residual = 0;
};

// min ||F s - p||^2 + lambda ||D s||^2 subject to s >= 0, as plain nnls on
// the stacked system [F; sqrt(lambda) D] s = [p; 0]
inline RegularizedSolution solve_regularized_nnls(const Eigen::MatrixXd& f,
                                                  const Eigen::VectorXd& p, double lambda,
                                                  double tol = 1e-10) {
  if (lambda < 0) throw ValidationError("solve_regularized_nnls: lambda must be >= 0");
  const int m = static_cast<int>(f.rows());
  const int n = static_cast<int>(f.cols());
  if (p.size() != m) throw ValidationError("solve_regularized_nnls: p length does not match F rows");

  Eigen::MatrixXd stacked;
  Eigen::VectorXd rhs;
  if (lambda > 0 && n >= 2) {
    stacked.resize(m + n - 1, n);
    stacked.topRows(m) = f;
    stacked.bottomRows(n - 1) = std::sqrt(lambda) * first_derivative_operator(n);
    rhs = Eigen::VectorXd::Zero(m + n - 1);
    rhs.head(m) = p;
  } else {
    stacked = f;
    rhs = p;
  }

  NnlsResult base = nnls(stacked, rhs, tol);
  RegularizedSolution sol;
  sol.s = std::move(base.x);
  sol.residual_norm = (f * sol.s - p).norm();
  sol.objective = (stacked * sol.s - rhs).squaredNorm();
  sol.objective_trace = std::move(base.objective_trace);
  sol.kkt_residual = base.kkt_residual;
  return sol;
}

inline RegularizedSolution solve_regularized_nnls(const FilterMatrix& f, const Eigen::VectorXd& p,
                                                  double lambda, double tol = 1e-10) {
  return solve_regularized_nnls(f.entries, p, lambda, tol);
}

}  // namespace catspec
