#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "empcnet/mpqp.hpp"
#include "empcnet/pwa.hpp"
#include "fixtures.hpp"
#include "oracles/oracles.hpp"

using namespace empcnet;

namespace {

struct DoubleIntegrator : ::testing::Test {
  static void SetUpTestSuite() {
    qp = new CondensedQp(condense(fixtures::double_integrator(3)));
    report = new ExploreReport(explore(*qp, fixtures::double_integrator_domain()));
  }
  static void TearDownTestSuite() {
    delete report;
    delete qp;
  }
  static CondensedQp* qp;
  static ExploreReport* report;
};
CondensedQp* DoubleIntegrator::qp = nullptr;
ExploreReport* DoubleIntegrator::report = nullptr;

// One state, one input, N = 1, only an input upper bound.
CondensedQp scalar_qp() {
  LtiProblem p;
  p.A = Mat::Constant(1, 1, 1.2);
  p.B = Mat::Constant(1, 1, 0.5);
  p.C = Mat::Identity(1, 1);
  p.x_min = Vec::Constant(1, -kInfiniteBound);
  p.x_max = Vec::Constant(1, kInfiniteBound);
  p.u_min = Vec::Constant(1, -kInfiniteBound);
  p.u_max = Vec::Constant(1, 0.4);
  p.horizon = 1;
  p.Qx = Mat::Identity(1, 1);
  p.Ru = Mat::Constant(1, 1, 0.3);
  p.Qf = Mat(Mat::Constant(1, 1, 2.0));
  return condense(p);
}

}  // namespace

TEST(RegionFromActiveSet, EmptyActiveSetGivesUnconstrainedLaw) {
  const CondensedQp qp = condense(fixtures::double_integrator(3));
  const RegionBuild b = region_from_active_set(qp, {}, fixtures::double_integrator_domain());
  ASSERT_TRUE(b.region.has_value());
  const Mat expected = -qp.Q.ldlt().solve(qp.R.transpose());
  EXPECT_LT((b.region->F - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(b.region->g.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RegionFromActiveSet, PinnedInputHandSolved) {
  // Pinning u = 0.4: F = 0, g = 0.4. The multiplier follows from
  // stationarity Q u + R x + lambda = 0, i.e. lambda = -(Q*0.4 + R x), which
  // is nonnegative for x <= -0.4 Q / R. Here Q = 2(0.3 + 2*0.25) = 1.6 and
  // R = 2*1.2*2*0.5 = 2.4.
  const CondensedQp qp = scalar_qp();
  EXPECT_NEAR(qp.Q(0, 0), 1.6, 1e-15);
  EXPECT_NEAR(qp.R(0, 0), 2.4, 1e-15);
  const DomainBox domain{Vec::Constant(1, -5.0), Vec::Constant(1, 5.0)};
  const RegionBuild b = region_from_active_set(qp, {0}, domain);
  ASSERT_TRUE(b.region.has_value());
  EXPECT_NEAR(b.region->F(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(b.region->g(0), 0.4, 1e-15);
  const double boundary = -0.4 * 1.6 / 2.4;
  EXPECT_TRUE(b.region->contains(Vec::Constant(1, boundary - 1e-6), 0.0));
  EXPECT_FALSE(b.region->contains(Vec::Constant(1, boundary + 1e-6), 0.0));
  EXPECT_TRUE(b.region->contains(Vec::Constant(1, -5.0), 1e-12));
}

TEST(RegionFromActiveSet, FullySaturatedRegionIsConstant) {
  const CondensedQp qp = condense(fixtures::double_integrator(3));
  // Rows 1, 3, 5 are the lower input bounds of steps 0..2.
  const RegionBuild b = region_from_active_set(qp, {1, 3, 5}, fixtures::double_integrator_domain());
  ASSERT_TRUE(b.region.has_value());
  const CriticalRegion& r = *b.region;
  EXPECT_LT(r.F.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r.g - Vec::Constant(3, -1.0)).cwiseAbs().maxCoeff(), 1e-12);

  // Points inside the region are confirmed by the pointwise QP.
  std::mt19937_64 rng(8);
  const DomainBox box{r.chebyshev_center.array() - r.chebyshev_radius,
                      r.chebyshev_center.array() + r.chebyshev_radius};
  int checked = 0;
  while (checked < 100) {
    const Vec x = fixtures::uniform_in(box, rng);
    if (!r.contains(x, -1e-9)) continue;
    const PointwiseSolution s = solve_pointwise_qp(qp, x);
    ASSERT_TRUE(s.feasible);
    EXPECT_LT((s.U - r.sequence(x)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(s.active_set, std::vector<int>({1, 3, 5}));
    ++checked;
  }
}

TEST(RegionFromActiveSet, DependentRowsAreDegenerate) {
  const CondensedQp qp = condense(fixtures::double_integrator(3));
  const RegionBuild b = region_from_active_set(qp, {0, 1}, fixtures::double_integrator_domain());
  EXPECT_FALSE(b.region.has_value());
  EXPECT_EQ(b.reason, Degeneracy::kRankDeficient);
}

TEST(Explore, UnconstrainedProblemHasOneRegion) {
  LtiProblem p = fixtures::double_integrator(3);
  p.u_min(0) = -kInfiniteBound;
  p.u_max(0) = kInfiniteBound;
  const DomainBox domain = fixtures::double_integrator_domain();
  const ExploreReport r = explore(condense(p), domain);
  ASSERT_EQ(r.solution.num_regions(), 1);
  EXPECT_EQ(r.solution.regions[0].num_facets(), 4);  // only the domain box
  EXPECT_NEAR(r.solution.regions[0].chebyshev_radius, 3.0, 1e-9);
}

TEST(Explore, RegionCapAbortsWithPartialSolution) {
  const CondensedQp qp = condense(fixtures::double_integrator(3));
  MpqpOptions options;
  options.region_cap = 3;
  try {
    explore(qp, fixtures::double_integrator_domain(), options);
    FAIL() << "expected RegionCapError";
  } catch (const RegionCapError& e) {
    EXPECT_EQ(e.partial().solution.num_regions(), 3);
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Explore, MatchesExhaustiveEnumeration) {
  const CondensedQp qp = condense(fixtures::double_integrator(2));
  const DomainBox domain = fixtures::double_integrator_domain();
  std::set<std::vector<int>> expected;
  for (const auto& active : oracle::subsets(qp.num_rows(), qp.num_vars())) {
    const oracle::KktLaw law = oracle::kkt_law(qp, active);
    if (!law.regular) continue;
    std::vector<int> inactive;
    for (int r = 0; r < qp.num_rows(); ++r) {
      if (!std::binary_search(active.begin(), active.end(), r)) inactive.push_back(r);
    }
    const auto a = static_cast<Eigen::Index>(active.size());
    Mat H(static_cast<Eigen::Index>(inactive.size()) + a + 2 * qp.num_states(), qp.num_states());
    Vec k(H.rows());
    Eigen::Index row = 0;
    for (int r : inactive) {
      H.row(row) = qp.G.row(r) * law.F - qp.E.row(r);
      k(row++) = qp.W(r) - qp.G.row(r).dot(law.g);
    }
    H.middleRows(row, a) = -law.lambda_gain;
    k.segment(row, a) = law.lambda_offset;
    row += a;
    H.bottomRows(2 * qp.num_states()) = domain.halfspace_matrix();
    k.tail(2 * qp.num_states()) = domain.halfspace_rhs();
    const auto normalized = normalize_rows(H, k);
    if (!normalized) continue;
    if (chebyshev_center(normalized->H, normalized->k).radius > 1e-7) expected.insert(active);
  }
  const ExploreReport r = explore(qp, domain);
  std::set<std::vector<int>> found;
  for (const auto& region : r.solution.regions) found.insert(region.active_set);
  EXPECT_EQ(found, expected);
  EXPECT_GT(expected.size(), 1u);
}

TEST_F(DoubleIntegrator, ExplicitLawMatchesPointwiseQp) {
  const ExplicitSolution& sol = report->solution;
  const PwaPolicy policy(sol);
  std::mt19937_64 rng(99);
  int outside = 0;
  for (int s = 0; s < 10000; ++s) {
    const Vec x = fixtures::uniform_in(sol.domain, rng);
    const PointwiseSolution pw = solve_pointwise_qp(*qp, x);
    ASSERT_TRUE(pw.feasible);  // input box only: always feasible
    const RegionIndex r = policy.locate(x);
    if (r == kOutside) {
      ++outside;
      continue;
    }
    EXPECT_LE((sol.regions[r - 1].sequence(x) - pw.U).cwiseAbs().maxCoeff(), 1e-6);
  }
  EXPECT_LE(outside, 10);  // coverage >= 99.9%
}

TEST_F(DoubleIntegrator, RegionsAreFullDimensionalAndIrredundant) {
  for (const auto& r : report->solution.regions) {
    EXPECT_GT(r.chebyshev_radius, 1e-7);
    EXPECT_TRUE(std::is_sorted(r.active_set.begin(), r.active_set.end()));
    const HalfspaceSet again = reduce_polyhedron(r.H, r.k);
    EXPECT_EQ(again.H.rows(), r.H.rows());
    for (Eigen::Index i = 0; i < r.H.rows(); ++i) EXPECT_NEAR(r.H.row(i).norm(), 1.0, 1e-12);
  }
}

TEST_F(DoubleIntegrator, ActiveSetHoldsInsideEachRegion) {
  for (const auto& r : report->solution.regions) {
    const PointwiseSolution s = solve_pointwise_qp(*qp, r.chebyshev_center);
    EXPECT_EQ(s.active_set, r.active_set);
    EXPECT_LT((s.U - r.sequence(r.chebyshev_center)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST_F(DoubleIntegrator, MultipliersNonnegativeAtCenters) {
  for (const auto& r : report->solution.regions) {
    const auto law = oracle::kkt_law(*qp, r.active_set);
    ASSERT_TRUE(law.regular);
    const Vec lambda = law.lambda_gain * r.chebyshev_center + law.lambda_offset;
    if (lambda.size() > 0) {
      EXPECT_GE(lambda.minCoeff(), -1e-9);
    }
  }
}

TEST_F(DoubleIntegrator, LawIsContinuousAcrossFacets) {
  const ExplicitSolution& sol = report->solution;
  const auto contacts = facet_adjacency(sol);
  ASSERT_FALSE(contacts.empty());
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int probes = 0;
  for (const auto& c : contacts) {
    const CriticalRegion& a = sol.regions[c.region_a];
    const CriticalRegion& b = sol.regions[c.region_b];
    // Walk along the shared facet line (2-D) from the contact point.
    const Vec h = a.H.row(c.facet_a).transpose();
    const Vec dir = (Vec(2) << -h(1), h(0)).finished();
    for (int s = 0; s < 1000 / static_cast<int>(contacts.size()) + 1; ++s) {
      const Vec x = c.point + (unit(rng) - 0.5) * 2.0 * a.chebyshev_radius * dir;
      if (!a.contains(x, 1e-9) || !b.contains(x, 1e-9)) continue;
      EXPECT_LT((a.sequence(x) - b.sequence(x)).cwiseAbs().maxCoeff(), 1e-6);
      ++probes;
    }
  }
  EXPECT_GT(probes, 0);
}

TEST(Explore, RandomProblemsAgreeWithPointwiseQp) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    LtiProblem p = fixtures::random_problem(rng, 2, 1, 2);
    p.A *= 0.9;
    const CondensedQp qp = condense(p);
    const DomainBox domain{Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)};
    const ExploreReport r = explore(qp, domain);
    const PwaPolicy policy(r.solution);
    int feasible = 0, missed = 0;
    for (int s = 0; s < 2000; ++s) {
      const Vec x = fixtures::uniform_in(domain, rng);
      const PointwiseSolution pw = solve_pointwise_qp(qp, x);
      if (!pw.feasible) continue;
      ++feasible;
      const RegionIndex i = policy.locate(x);
      if (i == kOutside) {
        ++missed;
        continue;
      }
      EXPECT_LE((r.solution.regions[i - 1].sequence(x) - pw.U).cwiseAbs().maxCoeff(), 1e-6);
    }
    EXPECT_LE(missed, feasible / 1000 + 1);
  }
}

TEST(Halton, DeterministicAndInUnitCube) {
  for (int i = 0; i < 100; ++i) {
    const Vec p = halton_point(i, 3);
    EXPECT_TRUE((p.array() >= 0.0).all() && (p.array() < 1.0).all());
    EXPECT_EQ(p, halton_point(i, 3));
  }
  EXPECT_NEAR(halton_point(0, 2)(0), 0.5, 1e-15);
  EXPECT_NEAR(halton_point(0, 2)(1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(halton_point(1, 2)(0), 0.25, 1e-15);
  EXPECT_NEAR(halton_point(1, 2)(1), 2.0 / 3.0, 1e-15);
}
