#pragma once

#include "irsrs/model.hpp"

#include <vector>

namespace irsrs {

/// f(z) = 1/2 z^T H z + b^T z + c. An empty H means f is affine.
struct QuadraticFn {
  RMat H;
  RVec b;
  double c = 0.0;

  bool affine() const { return H.size() == 0; }
  double value(const RVec& z) const;
  RVec gradient(const RVec& z) const;
};

/// minimize f0(z) subject to f_i(z) <= 0, every H positive semidefinite.
struct QcqpProblem {
  QuadraticFn objective;
  std::vector<QuadraticFn> constraints;

  Eigen::Index dimension() const { return objective.b.size(); }
};

struct QcqpOptions {
  double gap_tol = 1e-9;   // stop once (constraints / t) falls below this
  double t_growth = 50.0;
  int max_newton = 100;    // per centering step
};

enum class QcqpStatus { Optimal, NoInterior, IterationLimit };

struct QcqpResult {
  QcqpStatus status = QcqpStatus::NoInterior;
  RVec z;
  double objective = 0.0;
  double gap = 0.0;        // duality-gap bound m / t at exit
  int newton_steps = 0;
};

/// Log-barrier interior-point method. `start` need not be strictly feasible;
/// a phase-one problem finds an interior point first and NoInterior is
/// returned when none exists.
QcqpResult solve_qcqp(const QcqpProblem& problem, const RVec& start, const QcqpOptions& opts = {});

/// Largest constraint value max_i f_i(z).
double max_violation(const QcqpProblem& problem, const RVec& z);

}  // namespace irsrs
