#include "empcnet/linprog.hpp"

#include <cmath>
#include <vector>

namespace empcnet {
namespace {

// Dense tableau over  min cost'y  s.t.  T y = rhs, y >= 0.
// The last row holds reduced costs and (negated) objective value.
class Tableau {
 public:
  Tableau(Mat table, std::vector<int> basis, double tol)
      : t_(std::move(table)), basis_(std::move(basis)), tol_(tol) {}

  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  Mat& table() { return t_; }
  std::vector<int>& basis() { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = static_cast<int>(c);
  }

  // Runs simplex on columns [0, usable). Returns false if unbounded.
  bool optimize(Eigen::Index usable) {
    const Eigen::Index obj = t_.rows() - 1;
    const Eigen::Index rhs = t_.cols() - 1;
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < usable; ++j) {
        if (t_(obj, j) < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < obj; ++i) {
        const double a = t_(i, enter);
        if (a > tol_) {
          const double ratio = t_(i, rhs) / a;
          if (leave < 0 || ratio < best - tol_ ||
              (std::abs(ratio - best) <= tol_ && basis_[i] < basis_[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw NumericError("simplex failed to terminate");
  }

 private:
  Mat t_;
  std::vector<int> basis_;
  double tol_;
};

}  // namespace

LpResult maximize(const Vec& c, const Mat& A, const Vec& b, double tol) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (c.size() != n || b.size() != m) throw ConfigError("LP dimension mismatch");

  LpResult result;
  if (m == 0) {
    if (c.cwiseAbs().maxCoeff() > 0.0) {
      result.status = LpStatus::kUnbounded;
    } else {
      result.status = LpStatus::kOptimal;
      result.x = Vec::Zero(n);
    }
    return result;
  }

  // Columns: x+ (n), x- (n), slack (m), artificial (one per negative row).
  std::vector<Eigen::Index> negative;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0.0) negative.push_back(i);
  }
  const Eigen::Index n_art = static_cast<Eigen::Index>(negative.size());
  const Eigen::Index n_struct = 2 * n + m;
  const Eigen::Index n_cols = n_struct + n_art;

  Mat table = Mat::Zero(m + 1, n_cols + 1);
  std::vector<int> basis(static_cast<std::size_t>(m));
  Eigen::Index art = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    table.block(i, 0, 1, n) = sign * A.row(i);
    table.block(i, n, 1, n) = -sign * A.row(i);
    table(i, 2 * n + i) = sign;
    table(i, n_cols) = sign * b(i);
    if (sign < 0.0) {
      table(i, n_struct + art) = 1.0;
      basis[static_cast<std::size_t>(i)] = static_cast<int>(n_struct + art);
      ++art;
    } else {
      basis[static_cast<std::size_t>(i)] = static_cast<int>(2 * n + i);
    }
  }

  Tableau tab(std::move(table), std::move(basis), tol);
  Mat& t = tab.table();

  if (n_art > 0) {
    // Phase one: minimize the sum of artificials.
    t.row(m).setZero();
    t.block(m, n_struct, 1, n_art).setOnes();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] >= n_struct) t.row(m) -= t.row(i);
    }
    tab.optimize(n_cols);
    const double infeas = -t(m, n_cols);
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    if (infeas > tol * scale * 10.0) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive artificials out of the basis where possible.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < n_struct) continue;
      Eigen::Index col = -1;
      double best = tol;
      for (Eigen::Index j = 0; j < n_struct; ++j) {
        if (std::abs(t(i, j)) > best) {
          best = std::abs(t(i, j));
          col = j;
        }
      }
      if (col >= 0) tab.pivot(i, col);
    }
    // Zero artificial columns so they cannot re-enter.
    t.block(0, n_struct, m + 1, n_art).setZero();
  }

  // Phase two: minimize -c'x expressed in the current basis.
  t.row(m).setZero();
  t.block(m, 0, 1, n) = -c.transpose();
  t.block(m, n, 1, n) = c.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const int bcol = tab.basis()[static_cast<std::size_t>(i)];
    if (bcol < n_struct && t(m, bcol) != 0.0) t.row(m) -= t(m, bcol) * t.row(i);
  }
  if (!tab.optimize(n_struct)) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  Vec y = Vec::Zero(n_cols);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int bcol = tab.basis()[static_cast<std::size_t>(i)];
    y(bcol) = t(i, n_cols);
  }
  result.status = LpStatus::kOptimal;
  result.x = y.head(n) - y.segment(n, n);
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace empcnet
