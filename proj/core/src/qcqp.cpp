#include "irsrs/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace irsrs {

double QuadraticFn::value(const RVec& z) const {
  double v = b.dot(z) + c;
  if (!affine()) v += 0.5 * z.dot(H * z);
  return v;
}

RVec QuadraticFn::gradient(const RVec& z) const {
  if (affine()) return b;
  return H * z + b;
}

double max_violation(const QcqpProblem& problem, const RVec& z) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& f : problem.constraints) worst = std::max(worst, f.value(z));
  return worst;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// t * f0(z) - sum log(-f_i(z)); +inf outside the strict interior.
double barrier_value(const QcqpProblem& p, const RVec& z, double t) {
  double v = t * p.objective.value(z);
  for (const auto& f : p.constraints) {
    const double fi = f.value(z);
    if (!(fi < 0.0)) return kInf;
    v -= std::log(-fi);
  }
  return v;
}

void barrier_derivatives(const QcqpProblem& p, const RVec& z, double t, RVec& grad, RMat& hess) {
  const auto n = z.size();
  grad = t * p.objective.gradient(z);
  hess = p.objective.affine() ? RMat::Zero(n, n) : RMat(t * p.objective.H);
  for (const auto& f : p.constraints) {
    const double inv = -1.0 / f.value(z);  // > 0
    const RVec gi = f.gradient(z);
    grad.noalias() += inv * gi;
    hess.noalias() += (inv * inv) * gi * gi.transpose();
    if (!f.affine()) hess.noalias() += inv * f.H;
  }
}

RVec newton_direction(RMat& hess, const RVec& grad) {
  const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
  for (double ridge = 0.0; ridge < 1e6 * scale; ridge = ridge == 0.0 ? 1e-14 * scale : ridge * 100) {
    if (ridge > 0.0) hess.diagonal().array() += ridge;
    Eigen::LLT<RMat> llt(hess);
    if (llt.info() == Eigen::Success) {
      RVec dz = -llt.solve(grad);
      if (dz.allFinite()) return dz;
    }
  }
  return -grad / scale;
}

// Newton centering on the barrier at fixed t. `stop` is polled after every
// accepted step. Returns the number of Newton steps taken.
int center(const QcqpProblem& p, RVec& z, double t, int max_steps,
           const std::function<bool(const RVec&)>& stop) {
  RVec grad;
  RMat hess;
  double phi = barrier_value(p, z, t);
  int steps = 0;
  for (; steps < max_steps; ++steps) {
    barrier_derivatives(p, z, t, grad, hess);
    const RVec dz = newton_direction(hess, grad);
    const double decrement = -grad.dot(dz);
    if (!(decrement > 1e-10)) break;

    double s = 1.0;
    RVec next = z + dz;
    double phi_next = barrier_value(p, next, t);
    while (s > 1e-20 && !(phi_next <= phi - 0.01 * s * decrement)) {
      s *= 0.5;
      next = z + s * dz;
      phi_next = barrier_value(p, next, t);
    }
    if (s <= 1e-20) break;
    z = std::move(next);
    phi = phi_next;
    if (stop && stop(z)) return steps + 1;
  }
  return steps;
}

// Phase one: minimize s subject to f_i(z) - s <= 0 until s < 0.
bool find_interior(const QcqpProblem& p, RVec& z, const QcqpOptions& opts, int& steps) {
  const auto n = z.size();
  QcqpProblem aug;
  aug.objective.b = RVec::Zero(n + 1);
  aug.objective.b(n) = 1.0;
  aug.constraints.reserve(p.constraints.size());
  for (const auto& f : p.constraints) {
    QuadraticFn g;
    g.b.resize(n + 1);
    g.b.head(n) = f.b;
    g.b(n) = -1.0;
    g.c = f.c;
    if (!f.affine()) {
      g.H = RMat::Zero(n + 1, n + 1);
      g.H.topLeftCorner(n, n) = f.H;
    }
    aug.constraints.push_back(std::move(g));
  }

  RVec w(n + 1);
  w.head(n) = z;
  w(n) = max_violation(p, z) + 1.0;
  const auto m = static_cast<double>(aug.constraints.size());
  auto done = [n](const RVec& v) { return v(n) < 0.0; };

  for (double t = 1.0;; t *= opts.t_growth) {
    steps += center(aug, w, t, opts.max_newton, done);
    if (done(w)) {
      z = w.head(n);
      return max_violation(p, z) < 0.0;
    }
    if (m / t < opts.gap_tol) return false;
  }
}

}  // namespace

QcqpResult solve_qcqp(const QcqpProblem& problem, const RVec& start, const QcqpOptions& opts) {
  if (start.size() != problem.dimension()) throw StructuralError("QCQP start has wrong dimension");
  QcqpResult res;
  RVec z = start;

  if (!problem.constraints.empty() && !(max_violation(problem, z) < 0.0)) {
    if (!find_interior(problem, z, opts, res.newton_steps)) {
      res.status = QcqpStatus::NoInterior;
      res.z = start;
      res.objective = problem.objective.value(start);
      return res;
    }
  }

  const auto m = static_cast<double>(problem.constraints.size());
  double t = m > 0 ? std::max(1.0, m / (1.0 + std::abs(problem.objective.value(z)))) : 1.0;
  res.status = QcqpStatus::IterationLimit;
  for (int outer = 0; outer < 60; ++outer) {
    res.newton_steps += center(problem, z, t, opts.max_newton, nullptr);
    if (m == 0.0 || m / t < opts.gap_tol) {
      res.status = QcqpStatus::Optimal;
      break;
    }
    t *= opts.t_growth;
  }
  res.z = z;
  res.objective = problem.objective.value(z);
  res.gap = m > 0 ? m / t : 0.0;
  return res;
}

}  // namespace irsrs
