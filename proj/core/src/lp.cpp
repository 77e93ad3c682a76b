#include "irsrs/lp.hpp"

#include <limits>
#include <vector>

namespace irsrs {

namespace {

class Tableau {
 public:
  Tableau(const RMat& A, const RVec& b) : m_(A.rows()), n_(A.cols()) {
    artificial_rows_.reserve(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i)
      if (b(i) < 0.0) artificial_rows_.push_back(i);
    const auto n_art = static_cast<Eigen::Index>(artificial_rows_.size());
    cols_ = n_ + m_ + n_art;
    T_ = RMat::Zero(m_ + 1, cols_ + 1);
    basis_.resize(static_cast<std::size_t>(m_));
    blocked_.assign(static_cast<std::size_t>(cols_), false);

    Eigen::Index art = 0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      T_.row(i).head(n_) = sign * A.row(i);
      T_(i, n_ + i) = sign;
      T_(i, cols_) = sign * b(i);
      if (sign < 0.0) {
        const Eigen::Index col = n_ + m_ + art++;
        T_(i, col) = 1.0;
        basis_[static_cast<std::size_t>(i)] = col;
      } else {
        basis_[static_cast<std::size_t>(i)] = n_ + i;
      }
    }
  }

  bool has_artificials() const { return !artificial_rows_.empty(); }
  bool is_artificial(Eigen::Index col) const { return col >= n_ + m_; }

  // Sets the reduced-cost row for objective `cost` (length cols_).
  void set_objective(const RVec& cost) {
    T_.row(m_).setZero();
    T_.row(m_).head(cols_) = cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) T_.row(m_) -= cb * T_.row(i);
    }
  }

  // Returns false when unbounded.
  bool optimize(double tol) {
    for (int iter = 0; iter < 10000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < cols_; ++j)
        if (!blocked_[static_cast<std::size_t>(j)] && T_(m_, j) > tol) {
          enter = j;
          break;
        }
      if (enter < 0) return true;

      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = T_(i, enter);
        if (a <= tol) continue;
        const double ratio = T_(i, cols_) / a;
        if (ratio < best - tol ||
            (ratio <= best + tol && leave >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    return true;
  }

  // Pivots basic artificials out where possible and blocks artificial columns.
  void retire_artificials(double tol) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
      for (Eigen::Index j = 0; j < n_ + m_; ++j)
        if (std::abs(T_(i, j)) > tol) {
          pivot(i, j);
          break;
        }
    }
    for (Eigen::Index j = n_ + m_; j < cols_; ++j) blocked_[static_cast<std::size_t>(j)] = true;
  }

  double objective_value() const { return -T_(m_, cols_); }
  Eigen::Index columns() const { return cols_; }

  RVec solution() const {
    RVec x = RVec::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index col = basis_[static_cast<std::size_t>(i)];
      if (col < n_) x(col) = T_(i, cols_);
    }
    return x;
  }

 private:
  void pivot(Eigen::Index row, Eigen::Index col) {
    T_.row(row) /= T_(row, col);
    for (Eigen::Index i = 0; i <= m_; ++i)
      if (i != row && T_(i, col) != 0.0) T_.row(i) -= T_(i, col) * T_.row(row);
    basis_[static_cast<std::size_t>(row)] = col;
  }

  Eigen::Index m_, n_, cols_ = 0;
  RMat T_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> artificial_rows_;
  std::vector<bool> blocked_;
};

}  // namespace

LpResult solve_lp(const RVec& c, const RMat& A, const RVec& b, double tol) {
  if (A.cols() != c.size() || A.rows() != b.size())
    throw StructuralError("LP dimension mismatch");

  Tableau tab(A, b);
  LpResult res;
  if (tab.has_artificials()) {
    RVec phase1 = RVec::Zero(tab.columns());
    for (Eigen::Index j = 0; j < tab.columns(); ++j)
      if (tab.is_artificial(j)) phase1(j) = -1.0;
    tab.set_objective(phase1);
    tab.optimize(tol);
    if (tab.objective_value() < -1e-9) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    tab.retire_artificials(tol);
  }

  RVec cost = RVec::Zero(tab.columns());
  cost.head(c.size()) = c;
  tab.set_objective(cost);
  if (!tab.optimize(tol)) {
    res.status = LpStatus::Unbounded;
    return res;
  }
  res.status = LpStatus::Optimal;
  res.x = tab.solution();
  res.value = c.dot(res.x);
  return res;
}

}  // namespace irsrs
