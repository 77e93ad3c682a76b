#pragma once

#include "irsrs/model.hpp"

namespace irsrs {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  RVec x;
  double value = 0.0;
};

/// maximize c^T x  subject to  A x <= b,  x >= 0.
///
/// Dense two-phase tableau simplex with Bland's rule. Rows with negative
/// right-hand side get an artificial variable in phase one. Intended for the
/// handful of variables in a common-rate allocation, not for large programs.
LpResult solve_lp(const RVec& c, const RMat& A, const RVec& b, double tol = 1e-12);

}  // namespace irsrs
