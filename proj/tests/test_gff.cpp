#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "latcover/gff.hpp"
#include "latcover/stats.hpp"

using namespace latcover;

namespace {

constexpr double pi = std::numbers::pi;

LatticeDomain block3() { return discretize_at_scale(PlanarShape::disc(), 3); }

// Conditioning oracle: Var(E[h_U(x) | h_U on U \ V]) = S_VW S_WW^{-1} S_WV.
Eigen::MatrixXd conditional_mean_cov(const LatticeDomain& u, const SiteSet& v) {
  const auto g = green(u);
  std::vector<int> vi, wi;
  for (int i = 0; i < static_cast<int>(u.size()); ++i)
    (site_set_contains(v, u.site(i)) ? vi : wi).push_back(i);
  const Eigen::MatrixXd s = 0.5 * g.matrix();
  Eigen::MatrixXd svw(vi.size(), wi.size()), sww(wi.size(), wi.size());
  for (std::size_t a = 0; a < vi.size(); ++a)
    for (std::size_t b = 0; b < wi.size(); ++b) svw(a, b) = s(vi[a], wi[b]);
  for (std::size_t a = 0; a < wi.size(); ++a)
    for (std::size_t b = 0; b < wi.size(); ++b) sww(a, b) = s(wi[a], wi[b]);
  if (wi.empty()) return Eigen::MatrixXd::Zero(vi.size(), vi.size());
  return svw * sww.ldlt().solve(svw.transpose());
}

}  // namespace

TEST(Dgff, SingleSiteVariance) {
  const auto g = green(LatticeDomain({{0, 0}}));
  const CovarianceFactorization f(g);
  EXPECT_NEAR(f.lower()(0, 0) * f.lower()(0, 0), pi / 4, 1e-14);
  std::vector<double> xs(100'000), sq(100'000);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto rng = CounterRng::stream(50, i);
    xs[i] = sample_dgff(f, rng)[0];
    sq[i] = xs[i] * xs[i];
  }
  const auto m = stats::mean_ci(xs), v = stats::mean_ci(sq);
  EXPECT_LE(std::abs(m.mean), 3 * m.se);
  EXPECT_LE(std::abs(v.mean - pi / 4), 3 * v.se);
}

TEST(Dgff, RoundTrip) {
  for (const auto& d : {block3(), discretize(PlanarShape::disc(), 3.0), discretize(PlanarShape::square(), 2.5)}) {
    const auto g = green(d);
    EXPECT_LE(CovarianceFactorization(g).roundtrip_residual(g), 1e-8);
  }
}

TEST(Dgff, EmpiricalCovarianceBlock) {
  const auto d = block3();
  const auto g = green(d);
  const CovarianceFactorization f(g);
  const std::size_t n = 100'000;
  const int m = static_cast<int>(d.size());
  std::vector<std::vector<double>> cols(m, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = CounterRng::stream(51, i);
    const auto h = f.sample(rng);
    for (int v = 0; v < m; ++v) cols[v][i] = h[v];
  }
  int outside = 0;
  for (int x = 0; x < m; ++x) {
    const auto mean = stats::mean_ci(cols[x]);
    EXPECT_LE(std::abs(mean.mean), 3 * mean.se) << x;
    for (int y = x; y < m; ++y) {
      const auto c = stats::covariance_ci(cols[x], cols[y]);
      outside += std::abs(c.mean - 0.5 * g(x, y)) > 3 * c.se;
    }
  }
  // 45 entries at 3 SE: about 0.12 expected outside by chance
  EXPECT_EQ(outside, 0);
}

TEST(Dgff, SameStreamSameSample) {
  const auto g = green(block3());
  const CovarianceFactorization f(g);
  auto a = CounterRng::stream(52, 4), b = CounterRng::stream(52, 4);
  EXPECT_EQ(f.sample(a).values, f.sample(b).values);
}

TEST(GibbsMarkov, TwoSiteExample) {
  const LatticeDomain u({{0, 0}, {1, 0}});
  const auto s = gibbs_markov_check(u, {{0, 0}});
  ASSERT_EQ(s.v.size(), 1u);
  EXPECT_NEAR(s.var_u[0], 4 * pi / 15, 1e-12);
  EXPECT_NEAR(s.var_v[0], pi / 4, 1e-12);
  EXPECT_NEAR(s.var_binding[0], pi / 60, 1e-12);
  EXPECT_LE(s.max_residual(), 1e-12);
}

TEST(GibbsMarkov, EqualSetsHaveNoBindingField) {
  const auto u = block3();
  const auto s = gibbs_markov_check(u, u.sites());
  for (double v : s.var_binding) EXPECT_NEAR(v, 0.0, 1e-14);
  EXPECT_LE(s.max_residual(), 1e-12);
}

TEST(GibbsMarkov, AgreesWithConditioning) {
  const auto u = discretize(PlanarShape::disc(), 2.3);
  for (double r : {1.0, 1.6, 2.2}) {
    SiteSet v;
    for (Point p : ball({1, 0}, r))
      if (u.contains(p)) v.push_back(p);
    const auto s = gibbs_markov_check(u, v);
    const auto oracle = conditional_mean_cov(u, canonical(v));
    EXPECT_LE((s.binding_covariance - oracle).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(s.max_residual(), 1e-8);
    EXPECT_GE(s.min_eigenvalue, -1e-10);
  }
}

TEST(GibbsMarkov, Errors) {
  const auto u = block3();
  EXPECT_THROW(gibbs_markov_check(u, {}), std::invalid_argument);
  EXPECT_THROW(gibbs_markov_check(u, {{0, 0}, {5, 5}}), std::invalid_argument);
}

TEST(Centering, Values) {
  EXPECT_NEAR(centering(1.0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(centering(std::numbers::e), std::sqrt(2.0) * std::numbers::e - 3 / (4 * std::sqrt(2.0)), 1e-14);
  EXPECT_NEAR(centering(std::numbers::e), 3.313901, 1e-6);
  for (double n = 1; n < 30; n += 0.25) EXPECT_LT(centering(n), centering(n + 0.25));
  EXPECT_THROW(centering(0.0), std::invalid_argument);
}

TEST(LevelSet, Properties) {
  const auto d = discretize(PlanarShape::disc(), 3.0);
  const auto g = green(d);
  const CovarianceFactorization f(g);
  auto rng = CounterRng::stream(53, 0);
  const auto h = f.sample(rng);
  const ShiftedField fn{&h, centering(3.0)};
  const auto bk = bulk(d);
  EXPECT_TRUE(level_set(d, fn, 0.0, bk).empty());
  std::size_t prev = 0;
  for (double u : {0.5, 2.0, 8.0, 30.0, 1e9}) {
    const auto s = level_set(d, fn, u, bk);
    EXPECT_TRUE(is_subset(s, bk));
    EXPECT_GE(s.size(), prev);
    prev = s.size();
    for (Point p : s) EXPECT_LE(std::pow(fn[*d.index_of(p)], 2), u);
  }
  EXPECT_EQ(prev, bk.size());
  EXPECT_THROW(level_set(d, fn, -1.0, bk), std::invalid_argument);
}

TEST(Dgff, SquareFieldMean) {
  // E (h' + sqrt t)^2 = G(0,0)/2 + t on the single site, exactly
  const auto g = green(LatticeDomain({{0, 0}}));
  const CovarianceFactorization f(g);
  const double t = 1.7;
  std::vector<double> xs(100'000);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto rng = CounterRng::stream(54, i);
    const double v = f.sample(rng)[0] + std::sqrt(t);
    xs[i] = v * v;
  }
  const auto m = stats::mean_ci(xs);
  EXPECT_LE(std::abs(m.mean - (pi / 4 + t)), 3 * m.se);
}

TEST(Dgff, VarianceGrowsLikeHalfN) {
  // Var h(0) = G(0,0) / 2 stays within the frozen log-distance band of n / 2
  for (int N : {20, 55, 90}) {
    const auto d = discretize_at_scale(PlanarShape::disc(), N);
    const GreenColumnSolver s(d);
    const int o = *d.index_of({0, 0});
    const double var = 0.5 * s.column(o)(o);
    const double dist = N - 1.0;
    EXPECT_LE(std::abs(var - 0.5 * std::log(dist)), 0.5 * 2.5) << N;
  }
  const auto d = discretize_at_scale(PlanarShape::disc(), 20);
  const auto g = green(d);
  const CovarianceFactorization f(g);
  const int o = *d.index_of({0, 0});
  std::vector<double> sq(20'000);
  for (std::size_t i = 0; i < sq.size(); ++i) {
    auto rng = CounterRng::stream(55, i);
    const double v = f.sample(rng)[o];
    sq[i] = v * v;
  }
  const auto m = stats::mean_ci(sq);
  EXPECT_LE(std::abs(m.mean - 0.5 * g(o, o)), 3 * m.se);
}
