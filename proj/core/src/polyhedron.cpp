#include "empcnet/polyhedron.hpp"

#include <cmath>

#include "empcnet/linprog.hpp"

namespace empcnet {

Mat DomainBox::halfspace_matrix() const {
  const auto n = lower.size();
  Mat H(2 * n, n);
  H << Mat::Identity(n, n), -Mat::Identity(n, n);
  return H;
}

Vec DomainBox::halfspace_rhs() const {
  const auto n = lower.size();
  Vec k(2 * n);
  k << upper, -lower;
  return k;
}

void DomainBox::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw ConfigError("domain box bounds must be non-empty and equally sized");
  }
  if (!lower.allFinite() || !upper.allFinite() || !(lower.array() < upper.array()).all()) {
    throw ConfigError("domain box requires finite lower < upper elementwise");
  }
}

std::optional<HalfspaceSet> normalize_rows(const Mat& H, const Vec& k, double zero_tol) {
  HalfspaceSet out;
  out.H.resize(H.rows(), H.cols());
  out.k.resize(k.size());
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    const double norm = H.row(i).norm();
    if (norm <= zero_tol) {
      if (k(i) < -zero_tol) return std::nullopt;
      continue;
    }
    out.H.row(kept) = H.row(i) / norm;
    out.k(kept) = k(i) / norm;
    ++kept;
  }
  out.H.conservativeResize(kept, H.cols());
  out.k.conservativeResize(kept);
  return out;
}

ChebyshevBall chebyshev_center(const Mat& H, const Vec& k, double tol) {
  const auto n = H.cols();
  // Variables (x, r): maximize r s.t. h_i'x + |h_i| r <= k_i.
  Mat A(H.rows(), n + 1);
  A.leftCols(n) = H;
  A.col(n) = H.rowwise().norm();
  Vec c = Vec::Zero(n + 1);
  c(n) = 1.0;
  const LpResult lp = maximize(c, A, k, tol);
  if (lp.status == LpStatus::kUnbounded) {
    throw NumericError("Chebyshev LP unbounded: polyhedron is not bounded");
  }
  ChebyshevBall ball;
  if (lp.status != LpStatus::kOptimal) {
    // Only possible for an empty row set; treat as empty.
    ball.center = Vec::Zero(n);
    ball.radius = -1.0;
    return ball;
  }
  ball.center = lp.x.head(n);
  ball.radius = lp.x(n);
  return ball;
}

HalfspaceSet reduce_polyhedron(const Mat& H, const Vec& k, double tol) {
  auto normalized = normalize_rows(H, k);
  if (!normalized) throw ConfigError("reduce_polyhedron: set is empty");
  Mat Hn = std::move(normalized->H);
  Vec kn = std::move(normalized->k);
  const auto n = Hn.cols();

  {
    const LpResult feas = maximize(Vec::Zero(n), Hn, kn, tol);
    if (feas.status == LpStatus::kInfeasible) throw ConfigError("reduce_polyhedron: set is empty");
  }

  std::vector<char> keep(static_cast<std::size_t>(Hn.rows()), 1);
  for (Eigen::Index j = 0; j < Hn.rows(); ++j) {
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < Hn.rows(); ++i) count += (i != j && keep[i]) ? 1 : 0;
    Mat A(count + 1, n);
    Vec b(count + 1);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < Hn.rows(); ++i) {
      if (i == j || !keep[i]) continue;
      A.row(r) = Hn.row(i);
      b(r) = kn(i);
      ++r;
    }
    A.row(r) = Hn.row(j);
    b(r) = kn(j) + 1.0;
    const LpResult lp = maximize(Hn.row(j).transpose(), A, b, tol);
    // Unbounded cannot happen thanks to the relaxed copy of row j.
    if (lp.status == LpStatus::kOptimal && lp.objective <= kn(j) + tol) keep[j] = 0;
  }

  HalfspaceSet out;
  Eigen::Index kept = 0;
  for (char flag : keep) kept += flag;
  out.H.resize(kept, n);
  out.k.resize(kept);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < Hn.rows(); ++i) {
    if (!keep[i]) continue;
    out.H.row(r) = Hn.row(i);
    out.k(r) = kn(i);
    ++r;
  }
  return out;
}

std::optional<ChebyshevBall> facet_center(const Mat& H, const Vec& k, Eigen::Index j,
                                          double tol) {
  const auto n = H.cols();
  const Vec a = H.row(j).transpose();
  const double norm = a.norm();
  if (norm == 0.0) return std::nullopt;
  const Vec x0 = a * (k(j) / (norm * norm));

  if (n == 1) {
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
      if (i != j && H.row(i).dot(x0) > k(i) + tol) return std::nullopt;
    }
    return ChebyshevBall{x0, 0.0};
  }

  // Orthonormal basis of the hyperplane's direction space.
  Eigen::HouseholderQR<Mat> qr(a);
  const Mat basis = Mat(qr.householderQ()).rightCols(n - 1);

  Mat Hz(H.rows() - 1, n - 1);
  Vec kz(H.rows() - 1);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    if (i == j) continue;
    Hz.row(r) = H.row(i) * basis;
    kz(r) = k(i) - H.row(i).dot(x0);
    ++r;
  }
  auto reduced = normalize_rows(Hz, kz, 1e-12);
  if (!reduced) return std::nullopt;
  if (reduced->H.rows() == 0) return std::nullopt;  // unbounded facet
  const ChebyshevBall inner = chebyshev_center(reduced->H, reduced->k, tol);
  if (inner.radius <= 0.0) return std::nullopt;
  return ChebyshevBall{x0 + basis * inner.center, inner.radius};
}

}  // namespace empcnet
