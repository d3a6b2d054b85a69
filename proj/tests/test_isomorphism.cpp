#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "latcover/isomorphism.hpp"

using namespace latcover;

namespace {

constexpr double pi = std::numbers::pi;

// E X^4 for X ~ N(sqrt t, s2); both sides of the identity share it.
double exact_second_moment(double t, double s2) { return t * t + 6 * t * s2 + 3 * s2 * s2; }

struct Fixture {
  WiredGraph g;
  GreenOperator green_op;
  CovarianceFactorization factor;

  explicit Fixture(LatticeDomain d) : g(wire(std::move(d))), green_op(green(g)), factor(green_op) {}
};

}  // namespace

TEST(IsoMarginal, SingleSite) {
  const Fixture s(LatticeDomain({{0, 0}}));
  const auto rep = check_iso_marginal(s.g, s.green_op, s.factor, 1.0, {0}, 20'000, 7);
  ASSERT_EQ(rep.probes.size(), 1u);
  const auto& p = rep.probes[0];
  EXPECT_DOUBLE_EQ(p.exact_mean, 1.0 + pi / 4);
  EXPECT_FALSE(p.ks.rejected(0.001)) << p.ks.p_value;
  EXPECT_LE(std::abs(p.lhs_mean.mean - p.exact_mean), 3 * p.lhs_mean.se);
  EXPECT_LE(std::abs(p.rhs_mean.mean - p.exact_mean), 3 * p.rhs_mean.se);
  const double m2 = exact_second_moment(1.0, pi / 4);
  EXPECT_LE(std::abs(p.lhs_second_moment.mean - m2), 3 * p.lhs_second_moment.se);
  EXPECT_LE(std::abs(p.rhs_second_moment.mean - m2), 3 * p.rhs_second_moment.se);
}

TEST(IsoMarginal, BlockProbes) {
  const Fixture s(discretize_at_scale(PlanarShape::disc(), 3));
  const std::vector<int> probes{*s.g.domain().index_of({0, 0}), *s.g.domain().index_of({1, 1})};
  const auto rep = check_iso_marginal(s.g, s.green_op, s.factor, 2.5, probes, 20'000, 8);
  for (const auto& p : rep.probes) {
    EXPECT_EQ(p.site, s.g.coord(p.vertex));
    EXPECT_FALSE(p.ks.rejected(0.001)) << p.ks.p_value;
    EXPECT_NEAR(p.exact_mean, 0.5 * s.green_op(p.vertex, p.vertex) + 2.5, 1e-14);
    EXPECT_LE(std::abs(p.lhs_mean.mean - p.exact_mean), 3 * p.lhs_mean.se);
    const double m2 = exact_second_moment(2.5, 0.5 * s.green_op(p.vertex, p.vertex));
    EXPECT_LE(std::abs(p.lhs_second_moment.mean - m2), 3 * p.lhs_second_moment.se);
  }
}

TEST(IsoMarginal, ZeroTimeIsFieldAgainstField) {
  const Fixture s(LatticeDomain({{0, 0}, {1, 0}}));
  const auto rep = check_iso_marginal(s.g, s.green_op, s.factor, 0.0, {0, 1}, 5'000, 9);
  for (const auto& p : rep.probes) {
    EXPECT_FALSE(p.ks.rejected(0.001));
    EXPECT_NEAR(p.exact_mean, 4 * pi / 15, 1e-14);
  }
}

TEST(IsoMarginal, Errors) {
  const Fixture s(LatticeDomain({{0, 0}}));
  EXPECT_THROW(check_iso_marginal(s.g, s.green_op, s.factor, 1.0, {0}, 999, 1), std::invalid_argument);
  EXPECT_THROW(check_iso_marginal(s.g, s.green_op, s.factor, -1.0, {0}, 1000, 1), std::invalid_argument);
  EXPECT_THROW(check_iso_marginal(s.g, s.green_op, s.factor, 1.0, {1}, 1000, 1), std::invalid_argument);
}

TEST(IsoMarginal, Deterministic) {
  const Fixture s(LatticeDomain({{0, 0}}));
  const auto a = check_iso_marginal(s.g, s.green_op, s.factor, 1.0, {0}, 2'000, 11);
  const auto b = check_iso_marginal(s.g, s.green_op, s.factor, 1.0, {0}, 2'000, 11);
  EXPECT_EQ(a.probes[0].lhs_mean.mean, b.probes[0].lhs_mean.mean);
  EXPECT_EQ(a.probes[0].ks.statistic, b.probes[0].ks.statistic);
}

TEST(MomentIdentities, ZeroTime) {
  const Fixture s(discretize_at_scale(PlanarShape::disc(), 3));
  const auto tab = moment_identities(s.g, s.green_op, 0.0, 100, 3);
  EXPECT_EQ(tab.covariances.size(), 45u);
  for (const auto& r : tab.means) {
    EXPECT_EQ(r.estimate.mean, 0.0);
    EXPECT_EQ(r.z_score(), 0.0);
  }
  for (const auto& r : tab.covariances) EXPECT_EQ(r.z_score(), 0.0);
}

TEST(MomentIdentities, SingleSiteVariance) {
  const Fixture s(LatticeDomain({{0, 0}}));
  const auto tab = moment_identities(s.g, s.green_op, 1.0, 50'000, 4);
  ASSERT_EQ(tab.covariances.size(), 1u);
  EXPECT_DOUBLE_EQ(tab.covariances[0].exact, pi);
  EXPECT_LE(tab.means[0].z_score(), 3.0);
  EXPECT_LE(tab.covariances[0].z_score(), 3.0);
}

TEST(MomentIdentities, ExplicitPairs) {
  const Fixture s(discretize_at_scale(PlanarShape::disc(), 3));
  const auto tab = moment_identities(s.g, s.green_op, 1.0, 20'000, 5, {{0, 4}, {4, 4}});
  ASSERT_EQ(tab.covariances.size(), 2u);
  for (const auto& r : tab.covariances) {
    EXPECT_DOUBLE_EQ(r.exact, 2 * s.green_op(r.x, r.y));
    EXPECT_LE(r.z_score(), 3.5);
  }
}

TEST(MarginalInclusion, ExtremeLevels) {
  const Fixture s(discretize_at_scale(PlanarShape::disc(), 3));
  const int o = *s.g.domain().index_of({0, 0});
  const auto zero = marginal_inclusion_check(s.g, s.factor, 3.0, 0.0, {o}, 2'000, 1);
  EXPECT_EQ(zero[0].p_field, 0.0);
  EXPECT_FALSE(zero[0].violated());
  EXPECT_NEAR(zero[0].t, centering(3.0) * centering(3.0), 1e-12);
  const auto all = marginal_inclusion_check(s.g, s.factor, 3.0, 1e6, {o}, 2'000, 1);
  EXPECT_EQ(all[0].p_field, 1.0);
  EXPECT_EQ(all[0].p_local_time, 1.0);
  EXPECT_FALSE(all[0].violated());
  EXPECT_THROW(marginal_inclusion_check(s.g, s.factor, 3.0, -1.0, {o}, 2'000, 1), std::invalid_argument);
  EXPECT_THROW(marginal_inclusion_check(s.g, s.factor, 3.0, 1.0, {o}, 1, 1), std::invalid_argument);
}

TEST(MarginalInclusion, BlockAtUnitLevel) {
  const Fixture s(discretize_at_scale(PlanarShape::disc(), 3));
  std::vector<int> probes(9);
  for (int v = 0; v < 9; ++v) probes[v] = v;
  for (const auto& r : marginal_inclusion_check(s.g, s.factor, 3.0, 1.0, probes, 20'000, 2)) {
    EXPECT_FALSE(r.violated()) << r.vertex;
    EXPECT_GE(r.p_field, 0.0);
    EXPECT_LE(r.p_local_time, 1.0);
  }
}
