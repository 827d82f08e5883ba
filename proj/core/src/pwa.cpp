#include "empcnet/pwa.hpp"

#include <limits>

namespace empcnet {

Vec affine_apply(const Mat& W, const Vec& b, const Vec& x) {
  Vec y(W.rows());
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    double acc = b(i);
    for (Eigen::Index j = 0; j < W.cols(); ++j) acc += W(i, j) * x(j);
    y(i) = acc;
  }
  return y;
}

PwaPolicy::PwaPolicy(ExplicitSolution solution) : solution_(std::move(solution)) {
  const int m = solution_.m;
  for (const auto& region : solution_.regions) {
    first_gain_.emplace_back(region.F.topRows(m));
    first_offset_.emplace_back(region.g.head(m));
  }
}

RegionIndex PwaPolicy::locate(const Vec& x) const {
  for (int r = 0; r < solution_.num_regions(); ++r) {
    if (solution_.regions[r].contains(x, kMembershipTolerance)) return r + 1;
  }
  return kOutside;
}

Vec PwaPolicy::first_input(RegionIndex r, const Vec& x) const {
  const auto i = static_cast<std::size_t>(r - 1);
  return affine_apply(first_gain_.at(i), first_offset_.at(i), x);
}

std::optional<Vec> PwaPolicy::evaluate(const Vec& x) const {
  const RegionIndex r = locate(x);
  if (r == kOutside) return std::nullopt;
  return first_input(r, x);
}

Located PwaPolicy::locate_with_fallback(const Vec& x) const {
  Located out;
  out.point = x;
  out.index = locate(x);
  if (out.index != kOutside || !x.allFinite()) return out;
  out.point = solution_.domain.clip(x);
  out.clipped = true;
  out.index = locate(out.point);
  if (out.index != kOutside || solution_.regions.empty()) return out;
  out.nearest = true;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < solution_.num_regions(); ++r) {
    const CriticalRegion& region = solution_.regions[r];
    const double violation =
        region.H.rows() == 0 ? 0.0 : (region.H * out.point - region.k).maxCoeff();
    if (violation < best) {
      best = violation;
      out.index = r + 1;
    }
  }
  return out;
}

}  // namespace empcnet
