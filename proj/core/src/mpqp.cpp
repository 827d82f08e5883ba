#include "empcnet/mpqp.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace empcnet {
namespace {

Mat select_rows(const Mat& M, const std::vector<int>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(rows[i]);
  return out;
}

Vec select(const Vec& v, const std::vector<int>& rows) {
  Vec out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

std::string format_set(const std::vector<int>& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << '}';
  return os.str();
}

int nth_prime(int i) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (i < 0 || i >= 16) throw ConfigError("halton_point supports at most 16 dimensions");
  return primes[i];
}

}  // namespace

int ExplicitSolution::total_facets() const {
  int total = 0;
  for (const auto& r : regions) total += r.num_facets();
  return total;
}

const char* to_string(Degeneracy d) {
  switch (d) {
    case Degeneracy::kNone: return "none";
    case Degeneracy::kRankDeficient: return "rank_deficient";
    case Degeneracy::kEmpty: return "empty";
    case Degeneracy::kLowerDimensional: return "lower_dimensional";
  }
  return "unknown";
}

Vec halton_point(int index, int dim) {
  Vec p(dim);
  for (int d = 0; d < dim; ++d) {
    const int base = nth_prime(d);
    double f = 1.0;
    double r = 0.0;
    int i = index + 1;
    while (i > 0) {
      f /= base;
      r += f * (i % base);
      i /= base;
    }
    p(d) = r;
  }
  return p;
}

PointwiseSolution solve_pointwise_qp(const CondensedQp& qp, const Vec& x,
                                     const QpOptions& options) {
  if (x.size() != qp.num_states()) throw ConfigError("state dimension mismatch");
  const DenseQpSolver solver(options);
  const Vec c = qp.R.transpose() * x;
  const QpResult res = solver.solve(qp.Q, c, qp.G, qp.rhs(x));
  PointwiseSolution out;
  out.iterations = res.iterations;
  if (res.status == QpStatus::kIterationLimit) {
    std::ostringstream os;
    os << "pointwise QP hit the iteration limit after " << res.iterations
       << " iterations at x = [" << x.transpose() << "], iterate U = [" << res.x.transpose()
       << "]";
    throw NumericError(os.str());
  }
  if (res.status == QpStatus::kInfeasible) return out;
  out.feasible = true;
  out.U = res.x;
  out.active_set = res.active_set;
  out.multipliers = res.multipliers;
  out.kkt_residual = res.kkt_residual;
  return out;
}

std::optional<ActiveSetLaw> active_set_law(const CondensedQp& qp,
                                           const std::vector<int>& active_set) {
  const Eigen::LLT<Mat> chol(qp.Q);
  const Mat Qinv_Rt = chol.solve(qp.R.transpose());  // Nm x n
  ActiveSetLaw law;
  if (active_set.empty()) {
    law.F = -Qinv_Rt;
    law.g = Vec::Zero(qp.num_vars());
    law.lambda_gain.resize(0, qp.num_states());
    law.lambda_offset.resize(0);
    return law;
  }
  const Mat GA = select_rows(qp.G, active_set);
  if (GA.rows() > GA.cols()) return std::nullopt;
  Eigen::FullPivLU<Mat> lu(GA);
  lu.setThreshold(1e-10);
  if (lu.rank() < GA.rows()) return std::nullopt;

  const Mat EA = select_rows(qp.E, active_set);
  const Vec WA = select(qp.W, active_set);
  const Mat Qinv_GAt = chol.solve(GA.transpose());
  const Mat M = GA * Qinv_GAt;
  const Eigen::LDLT<Mat> Mfac(M);
  // Stationarity QU + R'x + GA' lambda = 0 with GA U = WA + EA x.
  law.lambda_gain = -Mfac.solve(EA + GA * Qinv_Rt);
  law.lambda_offset = -Mfac.solve(WA);
  law.F = -(Qinv_Rt + Qinv_GAt * law.lambda_gain);
  law.g = -Qinv_GAt * law.lambda_offset;
  return law;
}

RegionBuild region_from_active_set(const CondensedQp& qp, std::vector<int> active_set,
                                   const DomainBox& domain, const MpqpOptions& options) {
  std::sort(active_set.begin(), active_set.end());
  RegionBuild out;
  const auto law = active_set_law(qp, active_set);
  if (!law) {
    out.reason = Degeneracy::kRankDeficient;
    return out;
  }

  std::vector<int> inactive;
  for (int i = 0, j = 0; i < qp.num_rows(); ++i) {
    if (j < static_cast<int>(active_set.size()) && active_set[j] == i) {
      ++j;
    } else {
      inactive.push_back(i);
    }
  }
  const Mat GI = select_rows(qp.G, inactive);
  const Mat EI = select_rows(qp.E, inactive);
  const Vec WI = select(qp.W, inactive);
  const auto n = qp.num_states();
  const auto n_primal = static_cast<Eigen::Index>(inactive.size());
  const auto n_dual = static_cast<Eigen::Index>(active_set.size());
  const auto n_box = 2 * n;

  Mat H(n_primal + n_dual + n_box, n);
  Vec k(n_primal + n_dual + n_box);
  if (n_primal > 0) {
    H.topRows(n_primal) = GI * law->F - EI;
    k.head(n_primal) = WI - GI * law->g;
  }
  if (n_dual > 0) {
    H.middleRows(n_primal, n_dual) = -law->lambda_gain;
    k.segment(n_primal, n_dual) = law->lambda_offset;
  }
  H.bottomRows(n_box) = domain.halfspace_matrix();
  k.tail(n_box) = domain.halfspace_rhs();

  auto normalized = normalize_rows(H, k);
  if (!normalized) {
    out.reason = Degeneracy::kEmpty;
    return out;
  }
  const ChebyshevBall ball = chebyshev_center(normalized->H, normalized->k, options.lp_tolerance);
  if (ball.radius <= options.min_radius) {
    out.reason = ball.radius < -options.lp_tolerance ? Degeneracy::kEmpty
                                                     : Degeneracy::kLowerDimensional;
    return out;
  }
  HalfspaceSet reduced = reduce_polyhedron(normalized->H, normalized->k, options.lp_tolerance);

  CriticalRegion region;
  region.H = std::move(reduced.H);
  region.k = std::move(reduced.k);
  region.F = law->F;
  region.g = law->g;
  region.active_set = std::move(active_set);
  region.chebyshev_center = ball.center;
  region.chebyshev_radius = ball.radius;
  out.region = std::move(region);
  return out;
}

namespace {

class Explorer {
 public:
  Explorer(const CondensedQp& qp, const DomainBox& domain, const MpqpOptions& options)
      : qp_(qp), domain_(domain), options_(options) {
    report_.solution.domain = domain;
    report_.solution.n = qp.num_states();
    report_.solution.m = qp.num_inputs;
    report_.solution.horizon = qp.horizon;
  }

  ExploreReport run() {
    const double step = options_.step_fraction * domain_.diameter();
    seed(domain_.center());
    if (report_.solution.regions.empty()) {
      // Center infeasible: take the first feasible low-discrepancy point.
      for (int i = 0; i < std::max(options_.repair_samples, 1) && queue_.empty(); ++i) {
        seed(sample(i));
      }
    }
    drain(step);
    for (int i = 0; i < options_.repair_samples; ++i) {
      const Vec x = sample(i);
      if (located(x)) continue;
      if (seed(x)) {
        ++report_.repair_seeds;
        drain(step);
      }
    }
    return std::move(report_);
  }

 private:
  Vec sample(int i) const {
    return domain_.lower +
           halton_point(i, domain_.dim()).cwiseProduct(domain_.upper - domain_.lower);
  }

  bool located(const Vec& x) const {
    for (const auto& r : report_.solution.regions) {
      if (r.contains(x, options_.lp_tolerance)) return true;
    }
    return false;
  }

  // Returns true if a new region was added.
  bool seed(const Vec& x) {
    ++report_.pointwise_solves;
    const PointwiseSolution pw = solve_pointwise_qp(qp_, x, options_.qp);
    if (!pw.feasible) return false;
    if (!seen_.insert(pw.active_set).second) return false;
    RegionBuild build = region_from_active_set(qp_, pw.active_set, domain_, options_);
    if (!build.region) {
      report_.degenerate.push_back({pw.active_set, build.reason, x});
      return false;
    }
    if (static_cast<int>(report_.solution.regions.size()) >= options_.region_cap) {
      std::ostringstream os;
      os << "region cap " << options_.region_cap << " exceeded while adding active set "
         << format_set(pw.active_set);
      throw RegionCapError(os.str(), std::move(report_));
    }
    report_.solution.regions.push_back(std::move(*build.region));
    queue_.push_back(static_cast<int>(report_.solution.regions.size()) - 1);
    return true;
  }

  void drain(double step) {
    while (!queue_.empty()) {
      const int idx = queue_.front();
      queue_.pop_front();
      // Copy: seed() may reallocate the region vector.
      const Mat H = report_.solution.regions[idx].H;
      const Vec k = report_.solution.regions[idx].k;
      for (Eigen::Index j = 0; j < H.rows(); ++j) {
        const auto facet = facet_center(H, k, j, options_.lp_tolerance);
        if (!facet) continue;
        const Vec x = facet->center + step * H.row(j).transpose();
        if (!domain_.contains(x)) continue;  // box facet
        ++report_.facets_crossed;
        seed(x);
      }
    }
  }

  const CondensedQp& qp_;
  const DomainBox& domain_;
  const MpqpOptions& options_;
  ExploreReport report_;
  std::set<std::vector<int>> seen_;
  std::deque<int> queue_;
};

}  // namespace

ExploreReport explore(const CondensedQp& qp, const DomainBox& domain, const MpqpOptions& options) {
  domain.validate();
  if (domain.dim() != qp.num_states()) throw ConfigError("domain box dimension mismatch");
  return Explorer(qp, domain, options).run();
}

std::vector<FacetContact> facet_adjacency(const ExplicitSolution& solution,
                                          double step_fraction) {
  std::vector<FacetContact> contacts;
  std::set<std::pair<int, int>> recorded;
  const double step = step_fraction * solution.domain.diameter();
  const int count = solution.num_regions();
  for (int a = 0; a < count; ++a) {
    const auto& ra = solution.regions[a];
    for (Eigen::Index j = 0; j < ra.H.rows(); ++j) {
      const auto facet = facet_center(ra.H, ra.k, j);
      if (!facet) continue;
      const Vec outside = facet->center + step * ra.H.row(j).transpose();
      if (!solution.domain.contains(outside)) continue;
      for (int b = 0; b < count; ++b) {
        if (b == a || !solution.regions[b].contains(outside, 0.0)) continue;
        const auto key = std::minmax(a, b);
        if (recorded.insert(key).second) {
          contacts.push_back({a, b, static_cast<int>(j), facet->center});
        }
        break;
      }
    }
  }
  return contacts;
}

}  // namespace empcnet
