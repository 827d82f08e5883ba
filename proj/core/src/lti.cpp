#include "empcnet/lti.hpp"

#include <cmath>
#include <sstream>

namespace empcnet {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid LTI problem: " + what);
}

bool is_symmetric(const Mat& M) {
  return M.rows() == M.cols() &&
         (M - M.transpose()).cwiseAbs().maxCoeff() <=
             1e-10 * (1.0 + M.cwiseAbs().maxCoeff());
}

bool is_psd(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (M + M.transpose()));
  return eig.eigenvalues().minCoeff() >= -1e-10 * (1.0 + M.cwiseAbs().maxCoeff());
}

bool is_bounded(double v) { return std::abs(v) < kInfiniteBound; }

}  // namespace

void LtiProblem::validate() const {
  const auto n = A.rows();
  const auto m = B.cols();
  require(n > 0 && A.cols() == n, "A must be square and non-empty");
  require(m > 0 && B.rows() == n, "B must be n x m with m > 0");
  require(C.size() == 0 || C.cols() == n, "C must have n columns");
  require(x_min.size() == n && x_max.size() == n, "state bounds must have n entries");
  require(u_min.size() == m && u_max.size() == m, "input bounds must have m entries");
  require((x_min.array() < x_max.array()).all(), "x_min < x_max must hold elementwise");
  require((u_min.array() < u_max.array()).all(), "u_min < u_max must hold elementwise");
  require(horizon >= 1, "horizon must be >= 1");
  require(Qx.rows() == n && Qx.cols() == n, "Qx must be n x n");
  require(Ru.rows() == m && Ru.cols() == m, "Ru must be m x m");
  require(is_symmetric(Qx) && is_psd(Qx), "Qx must be symmetric positive semidefinite");
  require(is_symmetric(Ru), "Ru must be symmetric");
  require(Eigen::LLT<Mat>(Ru).info() == Eigen::Success, "Ru must be positive definite");
  if (Qf) {
    require(Qf->rows() == n && Qf->cols() == n, "Qf must be n x n");
    require(is_symmetric(*Qf) && is_psd(*Qf), "Qf must be symmetric positive semidefinite");
  }
  require(A.allFinite() && B.allFinite() && Qx.allFinite() && Ru.allFinite(),
          "matrices must be finite");
}

double CondensedQp::objective(const Vec& x, const Vec& U) const {
  return 0.5 * U.dot(Q * U) + x.dot(R * U) + 0.5 * x.dot(Y * x);
}

bool CondensedQp::feasible(const Vec& x, const Vec& U, double tol) const {
  if (num_rows() == 0) return true;
  return ((G * U - rhs(x)).array() <= tol).all();
}

Prediction predict_matrices(const Mat& A, const Mat& B, int horizon) {
  const auto n = A.rows();
  const auto m = B.cols();
  Prediction p;
  p.Sx = Mat::Zero(horizon * n, n);
  p.Su = Mat::Zero(horizon * n, horizon * m);
  Mat power = Mat::Identity(n, n);
  for (int k = 1; k <= horizon; ++k) {
    // x_k = A x_{k-1} + B u_{k-1}
    power = A * power;
    p.Sx.middleRows((k - 1) * n, n) = power;
    if (k > 1) {
      p.Su.block((k - 1) * n, 0, n, (k - 1) * m) =
          A * p.Su.block((k - 2) * n, 0, n, (k - 1) * m);
    }
    p.Su.block((k - 1) * n, (k - 1) * m, n, m) = B;
  }
  return p;
}

CondensedQp condense(const LtiProblem& problem) {
  problem.validate();
  const int n = problem.num_states();
  const int m = problem.num_inputs();
  const int N = problem.horizon;
  const Prediction pred = predict_matrices(problem.A, problem.B, N);

  Mat Qbar = Mat::Zero(N * n, N * n);
  for (int k = 0; k < N; ++k) {
    Qbar.block(k * n, k * n, n, n) = (k == N - 1) ? problem.terminal_cost() : problem.Qx;
  }
  Mat Rbar = Mat::Zero(N * m, N * m);
  for (int k = 0; k < N; ++k) Rbar.block(k * m, k * m, m, m) = problem.Ru;

  CondensedQp qp;
  qp.horizon = N;
  qp.num_inputs = m;
  Mat H = 2.0 * (pred.Su.transpose() * Qbar * pred.Su + Rbar);
  qp.Q = 0.5 * (H + H.transpose());
  qp.R = 2.0 * pred.Sx.transpose() * Qbar * pred.Su;
  Mat Y = 2.0 * (problem.Qx + pred.Sx.transpose() * Qbar * pred.Sx);
  qp.Y = 0.5 * (Y + Y.transpose());

  // Count retained rows first so G/W/E are allocated once.
  std::vector<ConstraintRow> rows;
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < m; ++j) {
      if (is_bounded(problem.u_max(j))) rows.push_back({RowKind::kInputUpper, k, j});
      if (is_bounded(problem.u_min(j))) rows.push_back({RowKind::kInputLower, k, j});
    }
    for (int j = 0; j < n; ++j) {
      if (is_bounded(problem.x_max(j))) rows.push_back({RowKind::kStateUpper, k + 1, j});
      if (is_bounded(problem.x_min(j))) rows.push_back({RowKind::kStateLower, k + 1, j});
    }
  }

  const auto q = static_cast<Eigen::Index>(rows.size());
  qp.G = Mat::Zero(q, N * m);
  qp.W = Vec::Zero(q);
  qp.E = Mat::Zero(q, n);
  for (Eigen::Index r = 0; r < q; ++r) {
    const ConstraintRow& row = rows[r];
    switch (row.kind) {
      case RowKind::kInputUpper:
        qp.G(r, row.step * m + row.component) = 1.0;
        qp.W(r) = problem.u_max(row.component);
        break;
      case RowKind::kInputLower:
        qp.G(r, row.step * m + row.component) = -1.0;
        qp.W(r) = -problem.u_min(row.component);
        break;
      case RowKind::kStateUpper: {
        const auto idx = (row.step - 1) * n + row.component;
        qp.G.row(r) = pred.Su.row(idx);
        qp.W(r) = problem.x_max(row.component);
        qp.E.row(r) = -pred.Sx.row(idx);
        break;
      }
      case RowKind::kStateLower: {
        const auto idx = (row.step - 1) * n + row.component;
        qp.G.row(r) = -pred.Su.row(idx);
        qp.W(r) = -problem.x_min(row.component);
        qp.E.row(r) = pred.Sx.row(idx);
        break;
      }
    }
  }
  qp.rows = std::move(rows);
  return qp;
}

Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
               int max_iterations, double tol) {
  Mat P = Q;
  for (int it = 0; it < max_iterations; ++it) {
    const Mat BtP = B.transpose() * P;
    const Mat S = R + BtP * B;
    const Mat K = S.ldlt().solve(BtP * A);
    Mat next = Q + A.transpose() * P * A - A.transpose() * P * B * K;
    next = 0.5 * (next + next.transpose());
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (!P.allFinite()) break;
    if (delta <= tol * (1.0 + P.cwiseAbs().maxCoeff())) return P;
  }
  std::ostringstream os;
  os << "Riccati iteration did not converge in " << max_iterations << " iterations";
  throw NumericError(os.str());
}

}  // namespace empcnet
