#include <cmath>
#include <random>
#include <unordered_set>

#include <gtest/gtest.h>

#include "latcover/clustering.hpp"
#include "oracles.hpp"

using namespace latcover;
using namespace latcover::oracle;

namespace {

WiredGraph block3() { return WiredGraph(discretize_at_scale(PlanarShape::disc(), 3)); }

}  // namespace

TEST(PhaseTimes, Examples) {
  const auto p1 = phase_times(1.0);
  EXPECT_NEAR(p1.t_a, 2.0, 1e-14);
  EXPECT_EQ(p1.t_b, 0.0);
  EXPECT_NEAR(p1.r_n, 1.0, 1e-15);
  EXPECT_NEAR(p1.m_n, std::sqrt(2.0), 1e-15);
  const auto p4 = phase_times(4.0, 0.25, 0.2);
  EXPECT_NEAR(p4.r_n, std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(p4.sqrt_t_c, 4 * std::sqrt(2.0) - std::log(4.0) / (2 * std::sqrt(2.0)), 1e-14);
  EXPECT_NEAR(p4.sqrt_t_c, 5.16673, 1e-5);
  EXPECT_NEAR(p4.t_b, 2 * std::log(4.0), 1e-14);
  EXPECT_EQ(p4.cluster_scale(), 2);
  EXPECT_NEAR(p4.total(1.5), p4.t_a + p4.t_b + 6.0, 1e-12);
  EXPECT_EQ(phase_times(0.5).cluster_scale(), 0);
}

TEST(PhaseTimes, DefectShrinks) {
  // sqrt(t_n(s)) - sqrt(t_C) - s / (2 sqrt 2) -> 0
  double prev = INFINITY;
  for (double n : {5.0, 20.0, 100.0, 1000.0}) {
    const double d = std::abs(phase_times(n).total_sqrt_defect(2.0));
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(PhaseTimes, RejectsBadParameters) {
  EXPECT_THROW(phase_times(0.0), std::invalid_argument);
  EXPECT_THROW(phase_times(4.0, 0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(phase_times(4.0, 0.5, 0.1), std::invalid_argument);
  EXPECT_THROW(phase_times(4.0, 0.25, 0.4), std::invalid_argument);
  EXPECT_THROW(phase_times(4.0, 0.25, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(phase_times(4.0, 0.25, 0.249));
}

TEST(LowSet, Examples) {
  const auto d = discretize(PlanarShape::disc(), 3.0);
  const WiredGraph g(d);
  const auto bk = bulk(d);
  auto rng = CounterRng::stream(40, 0);
  const auto zero = sample_local_time_field(g, {}, 0.0, rng);
  EXPECT_EQ(low_set(d, zero, 0.0), bk);
  const auto f = sample_local_time_field(g, {}, 10.0, rng);
  EXPECT_EQ(low_set(d, f, INFINITY), bk);
  SiteSet unvisited;
  for (Point p : bk)
    if (f[*d.index_of(p)] == 0) unvisited.push_back(p);
  EXPECT_EQ(low_set(d, f, 0.0), unvisited);
  EXPECT_TRUE(is_subset(low_set(d, f, 5.0), bk));
}

TEST(Census, EmptyAndSingleton) {
  const auto pt = phase_times(4.0);
  EXPECT_EQ(cluster_census({}, pt).center_count(), 0u);
  const auto c = cluster_census({{3, 7}}, pt);
  ASSERT_GT(c.center_count(), 0u);
  for (const auto& cl : c.clusters) {
    EXPECT_EQ(cl.log_scale, 0);
    EXPECT_EQ(cl.sites, (SiteSet{{3, 7}}));
  }
  EXPECT_EQ(c.centers_by_scale.size(), 1u);
  EXPECT_EQ(c.vertices_at_scale(0), (SiteSet{{3, 7}}));
}

TEST(Census, BruteForce) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const double n = 2.5 + 0.5 * (trial % 7);
    const auto pt = phase_times(n);
    const auto w = random_instance(rng, 60, 30);
    const auto c = cluster_census(w, pt);
    const auto b = brute_census(w, pt.cluster_scale());
    ASSERT_EQ(c.center_count(), b.size()) << trial;
    SiteSet covered;
    for (std::size_t i = 0; i < b.size(); ++i) {
      ASSERT_EQ(c.clusters[i].center, b[i].z);
      ASSERT_EQ(c.clusters[i].sites, b[i].sites);
      ASSERT_EQ(c.clusters[i].log_scale, b[i].rho);
      covered.insert(covered.end(), b[i].sites.begin(), b[i].sites.end());
    }
    SiteSet uni;
    for (const auto& [k, zs] : c.centers_by_scale) {
      const auto v = c.vertices_at_scale(k);
      uni.insert(uni.end(), v.begin(), v.end());
    }
    ASSERT_EQ(canonical(uni), canonical(covered));
    ASSERT_EQ(canonical(uni), w);
  }
}

TEST(ClusteredTest, Examples) {
  const auto pt = phase_times(8.0);
  EXPECT_EQ(pt.cluster_scale(), 6);
  EXPECT_TRUE(clustered_test({}, pt).clustered);
  EXPECT_TRUE(clustered_test({{4, 4}}, pt).clustered);
  // log-distance 3, inside [floor(r_8) + 1, floor(8 - r_8) - 2] = [2, 4]
  const auto mid = clustered_test({{0, 0}, {20, 0}}, pt);
  EXPECT_FALSE(mid.clustered);
  EXPECT_FALSE(mid.separation_holds);
  // distance e^4 rounded up lies just past the interval but still in one ball
  const auto edge = clustered_test({{0, 0}, {55, 0}}, pt);
  EXPECT_FALSE(edge.clustered);
  EXPECT_TRUE(edge.separation_holds);
  // far apart tight pairs are clustered
  const auto far = clustered_test({{0, 0}, {1, 0}, {1000, 0}, {1000, 1}}, pt);
  EXPECT_TRUE(far.clustered);
  EXPECT_TRUE(far.separation_holds);
}

TEST(ClusteredTest, BruteForce) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pt = phase_times(2.5 + 0.5 * (trial % 7));
    const auto a = random_instance(rng, 40 + trial % 30, 30);
    const auto r = clustered_test(a, pt);
    ASSERT_EQ(r.clustered, brute_clustered(a, pt)) << trial;
    if (r.clustered) ASSERT_TRUE(r.separation_holds) << trial;
  }
}

TEST(ClusteringNumber, Examples) {
  const auto pt = phase_times(4.0);  // balls of radius e^2
  EXPECT_EQ(clustering_number({}, pt).value, 0);
  EXPECT_EQ(clustering_number({{0, 0}}, pt).value, 1);
  const double r = std::exp(2.0);
  const int far = static_cast<int>(std::ceil(2 * r)) + 1;
  EXPECT_EQ(clustering_number({{0, 0}, {far, 0}}, pt).value, 2);
  EXPECT_EQ(brute_chi({{0, 0}, {far, 0}}, 2), 2);
}

TEST(ClusteringNumber, BruteForce) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pt = phase_times(3.0 + 0.5 * (trial % 5));
    const int window = 2 * static_cast<int>(std::exp(pt.cluster_scale())) + 4;
    const auto a = random_instance(rng, window, 30);
    const auto chi = clustering_number(a, pt);
    ASSERT_TRUE(chi.exact);
    ASSERT_EQ(chi.value, brute_chi(a, pt.cluster_scale())) << trial;
    ASSERT_EQ(chi.centers.size(), static_cast<std::size_t>(chi.value));
    for (Point p : a)
      ASSERT_TRUE(std::any_of(chi.centers.begin(), chi.centers.end(),
                              [&](Point z) { return inside(p, z, pt.cluster_scale()); }));
  }
}

TEST(ClusteringNumber, GreedyAboveSixtyFour) {
  // 70 points in two far tight groups: greedy meets the packing bound
  const auto pt = phase_times(4.0);
  SiteSet a;
  for (int i = 0; i < 35; ++i) a.push_back({i % 6, i / 6});
  for (int i = 0; i < 35; ++i) a.push_back({500 + i % 6, i / 6});
  const auto chi = clustering_number(a, pt);
  EXPECT_EQ(chi.value, 2);
  EXPECT_TRUE(chi.exact);
}

TEST(Skeleton, Examples) {
  const auto pt = phase_times(8.0);
  EXPECT_EQ(*skeleton({}, pt), std::vector<Point>{});
  const auto one = skeleton({{5, -3}}, pt);
  ASSERT_TRUE(one);
  ASSERT_EQ(one->size(), 1u);
  EXPECT_LT(norm((*one)[0] - Point{5, -3}), std::exp(pt.r_n));

  const SiteSet two{{0, 0}, {1, 1}, {2, 0}, {1000, 0}, {1001, 0}};
  const auto sk = skeleton(two, pt);
  ASSERT_TRUE(sk);
  ASSERT_EQ(sk->size(), 2u);
  EXPECT_EQ(static_cast<int>(sk->size()), clustering_number(two, pt).value);
  for (Point p : two)
    EXPECT_TRUE(std::any_of(sk->begin(), sk->end(), [&](Point z) { return norm(p - z) < std::exp(pt.r_n); }));
  EXPECT_GT(std::log(norm((*sk)[0] - (*sk)[1])), pt.cluster_scale() - 3);

  EXPECT_THROW(skeleton({{0, 0}, {20, 0}}, pt), std::invalid_argument);
}

TEST(Skeleton, VerifiedWheneverReturned) {
  std::mt19937_64 rng(44);
  int built = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto pt = phase_times(6.0 + (trial % 3));
    // a few tight groups spread over a large window
    std::uniform_int_distribution<int> groups(1, 4), far(-3000, 3000), near(-1, 1);
    SiteSet a;
    const int g = groups(rng);
    for (int i = 0; i < g; ++i) {
      const Point c{far(rng), far(rng)};
      for (int j = 0; j < 3; ++j) a.push_back(c + Point{near(rng), near(rng)});
    }
    a = canonical(a);
    if (!clustered_test(a, pt).clustered) continue;
    const auto sk = skeleton(a, pt);
    if (!sk) continue;
    ++built;
    ASSERT_EQ(static_cast<int>(sk->size()), clustering_number(a, pt).value);
    for (Point p : a)
      ASSERT_TRUE(std::any_of(sk->begin(), sk->end(), [&](Point z) { return norm(p - z) < std::exp(pt.r_n); }));
    for (std::size_t i = 0; i < sk->size(); ++i)
      for (std::size_t j = i + 1; j < sk->size(); ++j)
        ASSERT_GT(std::log(norm((*sk)[i] - (*sk)[j])), pt.cluster_scale() - 3);
  }
  EXPECT_GT(built, 50);
}

TEST(Repulsion, ZeroTimeAndAdmissibility) {
  const WiredGraph g(discretize(PlanarShape::disc(), 4.0));
  auto rng = CounterRng::stream(45, 0);
  const std::vector<int> ks{0, 1, 2, 3, 4};
  const auto [f, rows] = repulsion_profile(g, {}, 0.0, {0, 0}, ks, 0.2, rng);
  ASSERT_EQ(rows.size(), ks.size());
  int admissible = 0, expected = 0;
  for (const auto& r : rows) {
    admissible += r.admissible;
    EXPECT_EQ(r.sqrt_nhat, 0.0);
    EXPECT_EQ(r.sqrt_lbar, 0.0);
    EXPECT_EQ(r.relative_gap(), 0.0);
  }
  for (int k : ks) {
    if (k < 1) continue;
    const double outer = k + std::pow(k, 0.2);
    expected += closed_ball_inside(g.domain(), {0, 0}, outer) && closed_ball_inside(g.domain(), {0, 0}, k + 1.0);
  }
  EXPECT_EQ(admissible, expected);
  EXPECT_EQ(admissible, 2);
}

TEST(Repulsion, WholeDomainInsideInnerBall) {
  const auto g = block3();
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto rng = CounterRng::stream(46, i);
    const auto [f, rows] = repulsion_profile(g, {}, 3.0, {0, 0}, {1}, 0.2, rng, Containment::Relaxed);
    ASSERT_TRUE(rows[0].admissible);
    const double nhat = (rows[0].outer - rows[0].inner) * static_cast<double>(f.excursions());
    ASSERT_NEAR(rows[0].sqrt_nhat, std::sqrt(nhat), 1e-12);
  }
}

TEST(ClusteringNumber, SubadditiveAndBounded) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    const auto pt = phase_times(3.0 + 0.5 * (trial % 4));
    const auto a = random_instance(rng, 30, 15), b = random_instance(rng, 30, 15);
    SiteSet u = a;
    u.insert(u.end(), b.begin(), b.end());
    u = canonical(u);
    const int ca = clustering_number(a, pt).value, cb = clustering_number(b, pt).value;
    ASSERT_LE(clustering_number(u, pt).value, ca + cb);
    ASSERT_LE(ca, static_cast<int>(a.size()));
  }
}
