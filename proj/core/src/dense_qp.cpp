#include "empcnet/dense_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace empcnet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat active_rows(const Mat& G, const std::vector<int>& set) {
  Mat N(static_cast<Eigen::Index>(set.size()), G.cols());
  for (std::size_t i = 0; i < set.size(); ++i) N.row(static_cast<Eigen::Index>(i)) = G.row(set[i]);
  return N;
}

}  // namespace

double kkt_residual(const Mat& H, const Vec& c, const Mat& G, const Vec& h,
                    const Vec& x, const Vec& mu) {
  double res = (H * x + c + G.transpose() * mu).cwiseAbs().maxCoeff();
  if (G.rows() > 0) {
    const Vec slack = G * x - h;
    res = std::max(res, slack.maxCoeff());
    res = std::max(res, (-mu).maxCoeff());
    res = std::max(res, mu.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  return res;
}

QpResult DenseQpSolver::solve(const Mat& H, const Vec& c, const Mat& G, const Vec& h) const {
  const auto nv = H.rows();
  const auto q = G.rows();
  if (H.cols() != nv || c.size() != nv || (q > 0 && G.cols() != nv) || h.size() != q) {
    throw ConfigError("QP dimension mismatch");
  }
  const Eigen::LLT<Mat> chol(H);
  if (chol.info() != Eigen::Success) throw ConfigError("QP Hessian is not positive definite");

  const double tol = options_.tolerance;
  const int max_iter = options_.max_iterations > 0
                           ? options_.max_iterations
                           : static_cast<int>(10 * (nv + q) + 100);

  QpResult result;
  Vec x = -chol.solve(c);
  std::vector<int> active;
  std::vector<double> lambda;
  std::vector<char> in_active(static_cast<std::size_t>(q), 0);

  // Scale for the "dependent row" test on the primal step.
  const double h_scale = 1.0 + H.cwiseAbs().maxCoeff();

  int iter = 0;
  while (true) {
    int p = -1;
    double worst = tol;
    for (Eigen::Index j = 0; j < q; ++j) {
      if (in_active[j]) continue;
      const double scale = 1.0 + std::abs(h(j));
      const double viol = (G.row(j).dot(x) - h(j)) / scale;
      if (viol > worst) {
        worst = viol;
        p = static_cast<int>(j);
      }
    }
    if (p < 0) {
      result.status = QpStatus::kOptimal;
      break;
    }

    double lambda_p = 0.0;
    const Vec np = G.row(p).transpose();
    bool added = false;
    while (!added) {
      if (++iter > max_iter) {
        result.status = QpStatus::kIterationLimit;
        break;
      }
      // Projected directions for the current working set.
      Vec r;
      Vec z;
      const Vec Hinv_np = chol.solve(np);
      if (active.empty()) {
        z = Hinv_np;
      } else {
        const Mat N = active_rows(G, active);
        const Mat Hinv_Nt = chol.solve(N.transpose());
        const Mat M = N * Hinv_Nt;
        r = M.ldlt().solve(N * Hinv_np);
        z = Hinv_np - Hinv_Nt * r;
      }

      const double nz = np.dot(z);
      double t1 = kInf;
      if (z.norm() > 1e-12 * (1.0 + np.norm()) / h_scale && nz > 0.0) {
        t1 = (np.dot(x) - h(p)) / nz;
      }
      double t2 = kInf;
      int block = -1;
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (r(static_cast<Eigen::Index>(i)) > 1e-14) {
          const double ratio = lambda[i] / r(static_cast<Eigen::Index>(i));
          if (ratio < t2) {
            t2 = ratio;
            block = static_cast<int>(i);
          }
        }
      }
      if (t1 == kInf && t2 == kInf) {
        result.status = QpStatus::kInfeasible;
        result.iterations = iter;
        result.x = x;
        return result;
      }
      const double t = std::min(t1, t2);
      if (t1 != kInf) x -= t * z;
      for (std::size_t i = 0; i < active.size(); ++i) {
        lambda[i] -= t * r(static_cast<Eigen::Index>(i));
      }
      lambda_p += t;
      if (t1 <= t2) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        in_active[p] = 1;
        added = true;
      } else {
        in_active[active[block]] = 0;
        active.erase(active.begin() + block);
        lambda.erase(lambda.begin() + block);
      }
    }
    if (result.status == QpStatus::kIterationLimit) break;
  }

  result.iterations = iter;
  if (result.status != QpStatus::kOptimal) {
    result.x = x;
    return result;
  }

  // Polish on the final working set: solve the equality KKT system exactly.
  Vec mu = Vec::Zero(q);
  if (!active.empty()) {
    const Mat N = active_rows(G, active);
    Vec hA(static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) hA(static_cast<Eigen::Index>(i)) = h(active[i]);
    const Mat Hinv_Nt = chol.solve(N.transpose());
    const Mat M = N * Hinv_Nt;
    const Vec Hinv_c = chol.solve(c);
    const Vec lam = -M.ldlt().solve(hA + N * Hinv_c);
    const Vec x_pol = -Hinv_c - Hinv_Nt * lam;
    Vec mu_pol = Vec::Zero(q);
    for (std::size_t i = 0; i < active.size(); ++i) {
      mu_pol(active[i]) = lam(static_cast<Eigen::Index>(i));
    }
    Vec mu_raw = Vec::Zero(q);
    for (std::size_t i = 0; i < active.size(); ++i) mu_raw(active[i]) = lambda[i];
    // Keep whichever iterate has the smaller KKT residual.
    if (kkt_residual(H, c, G, h, x_pol, mu_pol) <= kkt_residual(H, c, G, h, x, mu_raw)) {
      x = x_pol;
      mu = mu_pol;
    } else {
      mu = mu_raw;
    }
  }
  std::sort(active.begin(), active.end());
  result.x = x;
  result.multipliers = mu;
  result.active_set = std::move(active);
  result.kkt_residual = kkt_residual(H, c, G, h, x, mu);
  return result;
}

}  // namespace empcnet
