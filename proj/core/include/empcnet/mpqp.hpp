#pragma once

#include <optional>
#include <string>
#include <vector>

#include "empcnet/dense_qp.hpp"
#include "empcnet/lti.hpp"
#include "empcnet/polyhedron.hpp"

namespace empcnet {

// One polyhedral piece of the explicit law: on {x : Hx <= k} the optimal
// input sequence is U*(x) = Fx + g and the optimal active set is fixed.
// Rows of (H, k) are unit-norm and irredundant.
struct CriticalRegion {
  Mat H;
  Vec k;
  Mat F;  // Nm x n, full horizon
  Vec g;  // Nm
  std::vector<int> active_set;
  Vec chebyshev_center;
  double chebyshev_radius = 0.0;

  int num_facets() const { return static_cast<int>(H.rows()); }
  bool contains(const Vec& x, double tol) const { return empcnet::contains(H, k, x, tol); }
  Vec sequence(const Vec& x) const { return F * x + g; }
};

struct ExplicitSolution {
  std::vector<CriticalRegion> regions;  // discovery order, frozen
  DomainBox domain;
  int n = 0;
  int m = 0;
  int horizon = 0;

  int num_regions() const { return static_cast<int>(regions.size()); }
  int total_facets() const;
};

struct MpqpOptions {
  double lp_tolerance = 1e-9;
  double min_radius = 1e-7;        // full-dimensionality threshold
  double step_fraction = 1e-6;     // facet step, times the box diameter
  int region_cap = 10000;
  int repair_samples = 4096;       // 0 disables the coverage repair pass
  QpOptions qp;
};

// ---------------------------------------------------------------- pointwise

struct PointwiseSolution {
  bool feasible = false;
  Vec U;
  std::vector<int> active_set;
  Vec multipliers;
  double kkt_residual = 0.0;
  int iterations = 0;
};

// Solves the condensed QP at a fixed state. Throws NumericError (with the
// iterate) if the active-set solver hits its iteration limit.
PointwiseSolution solve_pointwise_qp(const CondensedQp& qp, const Vec& x,
                                     const QpOptions& options = {});

// ------------------------------------------------------- active-set algebra

// Affine primal and dual laws implied by holding `active_set` tight:
//   U(x) = F x + g,   lambda(x) = L x + l   (lambda ordered as active_set).
struct ActiveSetLaw {
  Mat F;
  Vec g;
  Mat lambda_gain;
  Vec lambda_offset;
};

// std::nullopt when the active rows are linearly dependent (LICQ fails).
std::optional<ActiveSetLaw> active_set_law(const CondensedQp& qp,
                                           const std::vector<int>& active_set);

enum class Degeneracy { kNone, kRankDeficient, kEmpty, kLowerDimensional };
const char* to_string(Degeneracy d);

struct RegionBuild {
  std::optional<CriticalRegion> region;
  Degeneracy reason = Degeneracy::kNone;
};

// Builds the critical region of `active_set` intersected with `domain`:
// primal feasibility of the inactive rows and nonnegativity of the
// multipliers, normalized and reduced.
RegionBuild region_from_active_set(const CondensedQp& qp, std::vector<int> active_set,
                                   const DomainBox& domain, const MpqpOptions& options = {});

// -------------------------------------------------------------- exploration

struct DegenerateRecord {
  std::vector<int> active_set;
  Degeneracy reason;
  Vec seed_point;
};

struct ExploreReport {
  ExplicitSolution solution;
  std::vector<DegenerateRecord> degenerate;
  int pointwise_solves = 0;
  int facets_crossed = 0;
  int repair_seeds = 0;  // regions first reached by the coverage repair pass
};

// Raised when exploration would exceed MpqpOptions::region_cap; carries
// everything discovered so far.
class RegionCapError : public NumericError {
 public:
  RegionCapError(const std::string& what, ExploreReport partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const ExploreReport& partial() const { return partial_; }

 private:
  ExploreReport partial_;
};

// Facet-crossing breadth-first exploration. Starting from the pointwise
// solution at the box center, every non-box facet of every region is
// crossed by a small step from its Chebyshev-center point, and unseen
// active sets found there are turned into regions. A deterministic
// low-discrepancy sweep of the box then reseeds the search from any
// feasible point left uncovered.
ExploreReport explore(const CondensedQp& qp, const DomainBox& domain,
                      const MpqpOptions& options = {});

// ----------------------------------------------------------------- geometry

// A point on the common facet of two regions (indices are 0-based).
// `facet_a` is the row of region_a's H whose facet was crossed.
struct FacetContact {
  int region_a;
  int region_b;
  int facet_a;
  Vec point;
};

// Pairs of regions sharing a facet, found by stepping across each facet's
// center point. Each unordered pair is reported once.
std::vector<FacetContact> facet_adjacency(const ExplicitSolution& solution,
                                          double step_fraction = 1e-7);

// Deterministic Halton point in [0,1)^dim.
Vec halton_point(int index, int dim);

}  // namespace empcnet
