#pragma once

#include <optional>

#include "empcnet/mpqp.hpp"

namespace empcnet {

// Region numbers are 1-based; 0 means "outside every region".
using RegionIndex = int;
inline constexpr RegionIndex kOutside = 0;

inline constexpr double kMembershipTolerance = 1e-9;

struct Located {
  RegionIndex index = kOutside;
  Vec point;             // the point actually located (clipped if needed)
  bool clipped = false;  // true if the fallback projection was used
  bool nearest = false;  // clipped point lay in a gap; least-violated region
};

// y = W x + b with a fixed summation order, so every caller that applies the
// same affine law gets bit-identical results.
Vec affine_apply(const Mat& W, const Vec& b, const Vec& x);

// Explicit controller evaluated by exact sequential point location.
class PwaPolicy {
 public:
  explicit PwaPolicy(ExplicitSolution solution);

  const ExplicitSolution& solution() const { return solution_; }
  int num_regions() const { return solution_.num_regions(); }
  int num_inputs() const { return solution_.m; }

  // Lowest r with H^r x <= k^r + tol, or kOutside.
  RegionIndex locate(const Vec& x) const;

  // First input of the region's affine sequence; std::nullopt outside.
  std::optional<Vec> evaluate(const Vec& x) const;

  // First-step law of region r (1-based): u = F_first x + g_first.
  Vec first_input(RegionIndex r, const Vec& x) const;

  // Locate, and if outside, clip x onto the domain box and locate again; if
  // that still fails, pick the region whose inequalities are least violated.
  // index is kOutside only for non-finite x.
  Located locate_with_fallback(const Vec& x) const;

 private:
  ExplicitSolution solution_;
  std::vector<Mat> first_gain_;
  std::vector<Vec> first_offset_;
};

}  // namespace empcnet
