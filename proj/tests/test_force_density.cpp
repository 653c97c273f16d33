#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "support.hpp"
#include "tspine/error.hpp"

using namespace tspine;
using tspine::test::end_rings;
using tspine::test::model_of;

namespace {

// Free node B0-0 joined by cables to anchors at `anchors`.
StructureModel star(const std::vector<Vec3>& anchors) {
  StructureModel m;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    m.nodes.push_back({Family::A, static_cast<int>(i), 0});
    m.seed.push_back(anchors[i]);
  }
  m.nodes.push_back({Family::B, 0, 0});
  m.seed.push_back(Vec3(0.3, 0.7, 0.2));
  m.reindex();
  for (std::size_t i = 0; i < anchors.size(); ++i)
    m.members.push_back({MemberKind::Horizontal, m.nodes[i], m.nodes.back(), 0.0});
  return m;
}

AnchorSet star_anchors(const StructureModel& m) {
  std::vector<NodeId> ids(m.nodes.begin(), m.nodes.end() - 1);
  return AnchorSet::at_seed(m, ids);
}

// Independent oracle: assemble the force-density equations densely and solve
// them with a full-pivot LU, sharing no code with the library solver.
std::vector<Vec3> dense_oracle(const StructureModel& model, const ForceDensitySet& q, const AnchorSet& anchors) {
  const int n = model.node_count();
  std::vector<int> fixed(n, -1);
  for (std::size_t k = 0; k < anchors.fixed.size(); ++k) fixed[model.index_of(anchors.fixed[k])] = static_cast<int>(k);
  std::vector<int> col(n, -1);
  int nf = 0;
  for (int i = 0; i < n; ++i)
    if (fixed[i] < 0) col[i] = nf++;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nf, nf);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nf, 3);
  for (std::size_t e = 0; e < model.members.size(); ++e) {
    const int a = model.index_of(model.members[e].a), b = model.index_of(model.members[e].b);
    const double qe = q.q[e];
    for (auto [i, j] : {std::pair{a, b}, std::pair{b, a}}) {
      if (col[i] < 0) continue;
      D(col[i], col[i]) += qe;
      if (col[j] >= 0) D(col[i], col[j]) -= qe;
      else rhs.row(col[i]) += qe * anchors.positions[static_cast<std::size_t>(fixed[j])].transpose();
    }
  }
  const Eigen::MatrixXd X = D.fullPivLu().solve(rhs);
  std::vector<Vec3> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        col[i] >= 0 ? Vec3(X.row(col[i]).transpose()) : anchors.positions[static_cast<std::size_t>(fixed[i])];
  return out;
}

}  // namespace

TEST(ForceDensity, OneFreeNodeBetweenTwoAnchorsSitsAtTheMidpoint) {
  const auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  const auto st = solve_force_density(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m));
  EXPECT_NEAR((st.positions.back() - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_LT(st.residual, 1e-14);
}

TEST(ForceDensity, OneFreeNodeAmongThreeAnchorsSitsAtTheCentroid) {
  const double h = std::sqrt(3.0);
  const auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(1, h, 0)});
  const auto st = solve_force_density(m, ForceDensitySet{{2.5, 2.5, 2.5}}, star_anchors(m));
  EXPECT_NEAR((st.positions.back() - Vec3(1, h / 3.0, 0)).norm(), 0.0, 1e-15);
}

TEST(ForceDensity, LoadsShiftTheFreeNode) {
  const auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  const auto st = solve_force_density(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m), {{m.nodes.back(), Vec3(0, 0, -1)}});
  // 2 q (x - mid) = p  ->  x = mid + p / 2
  EXPECT_NEAR((st.positions.back() - Vec3(1, 0, -0.5)).norm(), 0.0, 1e-15);
}

TEST(ForceDensity, ResidualIsTinyOnEveryMatrixModel) {
  for (int n : {3, 5, 7, 9})
    for (int p = 0; p <= 3; ++p) {
      const auto model = model_of(n, 3 * p + 3);
      const auto q = ForceDensitySet::uniform(model, 1.0, -1.0);
      const auto st = solve_force_density(model, q, AnchorSet::at_seed(model, end_rings(model)));
      double fmax = 0.0;
      for (double f : st.member_forces) fmax = std::max(fmax, std::abs(f));
      EXPECT_LT(st.residual / fmax, 1e-9) << n << "," << 3 * p + 3;
    }
}

TEST(ForceDensity, MatchesDenseOracle) {
  for (int m : {3, 6, 9}) {
    const auto model = model_of(3, m);
    auto q = ForceDensitySet::uniform(model, 1.0, -0.4);
    for (std::size_t e = 0; e < q.q.size(); ++e) q.q[e] *= 1.0 + 0.05 * static_cast<double>(e % 7);
    const auto anchors = AnchorSet::at_seed(model, end_rings(model));
    const auto st = solve_force_density(model, q, anchors);
    const auto oracle = dense_oracle(model, q, anchors);
    for (std::size_t i = 0; i < oracle.size(); ++i)
      EXPECT_LT((st.positions[i] - oracle[i]).norm(), 1e-9 * model.params.base_radius) << m;
  }
}

TEST(ForceDensity, MemberForcesAreDensityTimesLength) {
  const auto model = model_of(3, 6);
  const auto q = ForceDensitySet::uniform(model, 1.0, -0.5);
  const auto st = solve_force_density(model, q, AnchorSet::at_seed(model, end_rings(model)));
  const auto L = member_lengths(model, st.positions);
  for (std::size_t e = 0; e < L.size(); ++e) EXPECT_NEAR(st.member_forces[e], q.q[e] * L[e], 1e-12 * L[e]);
  const auto back = force_densities_of(model, st);
  for (std::size_t e = 0; e < L.size(); ++e) EXPECT_NEAR(back.q[e], q.q[e], 1e-12);
}

TEST(ForceDensity, SingularSystemNamesTheNode) {
  // A cable and a strut of equal |q| leave the free node with zero stiffness.
  auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  m.members[1].kind = MemberKind::Strut;
  try {
    solve_force_density(m, ForceDensitySet{{1.0, -1.0}}, star_anchors(m));
    FAIL() << "expected SolvabilityError";
  } catch (const SolvabilityError& e) {
    ASSERT_FALSE(e.offending_nodes().empty());
    EXPECT_EQ(e.offending_nodes().front(), "B0-0");
  }
}

TEST(ForceDensity, RejectsBadInputs) {
  const auto model = model_of(3, 3);
  auto q = ForceDensitySet::uniform(model, 1.0, -1.0);
  const auto anchors = AnchorSet::at_seed(model, end_rings(model));
  q.q.pop_back();
  EXPECT_THROW(solve_force_density(model, q, anchors), ParameterError);
  q = ForceDensitySet::uniform(model, 1.0, -1.0);
  q.q.front() = -1.0;  // a cable in compression
  EXPECT_THROW(solve_force_density(model, q, anchors), ParameterError);
  EXPECT_THROW(solve_force_density(model, ForceDensitySet::uniform(model, 1.0, -1.0), AnchorSet{}), Error);
}

TEST(ForceDensity, AnchorPlaneRule) {
  const auto model = model_of(3, 3);
  const auto base = model.base_ring();
  EXPECT_NO_THROW(check_anchors(model, AnchorSet::at_seed(model, base)));
  const std::vector<NodeId> two(base.begin(), base.begin() + 2);
  EXPECT_THROW(check_anchors(model, AnchorSet::at_seed(model, two)), ParameterError);
  EXPECT_NO_THROW(check_anchors(model, AnchorSet::at_seed(model, two), false));
}

TEST(Adapt, TargetsAlreadyMetAreAFixedPoint) {
  const auto model = model_of(3, 6);
  const auto q0 = ForceDensitySet::uniform(model, 1.0, -0.5);
  const auto anchors = AnchorSet::at_seed(model, end_rings(model));
  const auto st = solve_force_density(model, q0, anchors);
  const auto L = member_lengths(model, st.positions);
  TargetMap targets;
  for (int e : {0, 3, 10, 20}) targets[e] = Target::length(L[static_cast<std::size_t>(e)]);
  const auto res = adapt_force_densities(model, q0, anchors, targets);
  EXPECT_TRUE(res.converged);
  for (std::size_t e = 0; e < q0.q.size(); ++e) EXPECT_NEAR(res.q.q[e], q0.q[e], 1e-12);
}

TEST(Adapt, HalvedChainTargetMatchesClosedForm) {
  // Anchors at 0 and 2, equal q: the free node sits at 1. Asking the first
  // cable for length 1/2 needs q1 (x) = q2 (2 - x) at x = 1/2, i.e. q1 = 3 q2.
  const auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  TargetMap targets{{0, Target::length(0.5)}};
  const auto res = adapt_force_densities(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m), targets);
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.q.q[0], 3.0, 1e-7);
  EXPECT_DOUBLE_EQ(res.q.q[1], 1.0);
  EXPECT_NEAR((res.state.positions.back() - Vec3(0.5, 0, 0)).norm(), 0.0, 1e-7);
  // The first fixed-point step is the length ratio: q doubles.
  AdaptOptions one;
  one.max_iter = 1;
  const auto first = adapt_force_densities(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m), targets, one);
  EXPECT_DOUBLE_EQ(first.q.q[0], 2.0);
  EXPECT_FALSE(first.converged);
}

TEST(Adapt, ForceTargetScalesDensity) {
  // With q1 = 1 the second member carries 2 q2 / (1 + q2): 1.5 needs q2 = 3.
  const auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  TargetMap targets{{1, Target::force(1.5)}};
  const auto res = adapt_force_densities(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m), targets);
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.q.q[1], 3.0, 1e-6);
  EXPECT_NEAR(res.state.member_forces[1], 1.5, 1e-7);
}

TEST(Adapt, UnreachableForceDivergesWithTrace) {
  // The same member can never carry 2 or more.
  const auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  TargetMap targets{{1, Target::force(4.0)}};
  try {
    adapt_force_densities(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m), targets, {1e-8, 10000, 2.0});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_FALSE(e.trace().empty());
  }
}

TEST(Adapt, DegenerateTargetIsRejectedUpFront) {
  const auto m = star({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  EXPECT_THROW(adapt_force_densities(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m), {{0, Target::length(0.0)}}),
               DivergenceError);
  EXPECT_THROW(adapt_force_densities(m, ForceDensitySet{{1.0, 1.0}}, star_anchors(m), {{0, Target::force(-1.0)}}),
               DivergenceError);
}
