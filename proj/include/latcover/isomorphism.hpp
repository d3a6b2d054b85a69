#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "latcover/gff.hpp"
#include "latcover/harmonic.hpp"
#include "latcover/parallel.hpp"
#include "latcover/stats.hpp"
#include "latcover/walk.hpp"

namespace latcover {

// Marginal checks of L_t(x) + h(x)^2 = (h'(x) + sqrt t)^2 in law, where L_t
// and h are independent and h, h' are DGFFs with covariance G/2.

/// Stream tags keep the three random inputs of a sample independent.
inline constexpr std::uint64_t kLocalTimeStream = 0x4c4f43414cULL;
inline constexpr std::uint64_t kFieldStream = 0x4649454c44ULL;
inline constexpr std::uint64_t kShiftedFieldStream = 0x5348494654ULL;

struct ProbeReport {
  int vertex = -1;
  Point site;
  stats::TestResult ks;
  stats::MeanEstimate lhs_mean;
  stats::MeanEstimate rhs_mean;
  /// G(x,x)/2 + t, the common mean of both sides.
  double exact_mean = 0;
  stats::MeanEstimate lhs_second_moment;
  stats::MeanEstimate rhs_second_moment;
};

struct IsoReport {
  double t = 0;
  std::size_t samples = 0;
  std::vector<ProbeReport> probes;
};

/// Draws `samples` independent (L_t, h) pairs for the left side and
/// independent h' for the right side, then compares marginals per probe.
inline IsoReport check_iso_marginal(const WiredGraph& g, const GreenOperator& green_op,
                                    const CovarianceFactorization& factor, double t, const std::vector<int>& probes,
                                    std::size_t samples, std::uint64_t seed, const WalkConfig& cfg = {}) {
  if (!(t >= 0)) throw std::invalid_argument("check_iso_marginal: t must be >= 0");
  if (samples < 1000) throw std::invalid_argument("check_iso_marginal: need at least 1000 samples");
  for (int p : probes)
    if (p < 0 || p >= g.size()) throw std::invalid_argument("check_iso_marginal: probe out of range");
  const std::size_t np = probes.size();
  std::vector<double> lhs(np * samples), rhs(np * samples);
  const double root_t = std::sqrt(t);
  parallel_for(samples, [&](std::size_t i) {
    auto rl = CounterRng::stream(seed ^ kLocalTimeStream, i);
    auto rh = CounterRng::stream(seed ^ kFieldStream, i);
    auto rs = CounterRng::stream(seed ^ kShiftedFieldStream, i);
    const auto field = sample_local_time_field(g, cfg, t, rl);
    const auto h = factor.sample(rh);
    const auto hp = factor.sample(rs);
    for (std::size_t j = 0; j < np; ++j) {
      const int x = probes[j];
      lhs[j * samples + i] = field[x] + h[x] * h[x];
      rhs[j * samples + i] = (hp[x] + root_t) * (hp[x] + root_t);
    }
  });

  IsoReport rep{t, samples, {}};
  for (std::size_t j = 0; j < np; ++j) {
    const std::span<const double> a(lhs.data() + j * samples, samples), b(rhs.data() + j * samples, samples);
    std::vector<double> a2(samples), b2(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      a2[i] = a[i] * a[i];
      b2[i] = b[i] * b[i];
    }
    const int x = probes[j];
    rep.probes.push_back({x, g.coord(x), stats::ks_two_sample(a, b), stats::mean_ci(a), stats::mean_ci(b),
                          0.5 * green_op(x, x) + t, stats::mean_ci(a2), stats::mean_ci(b2)});
  }
  return rep;
}

struct MomentRow {
  int x = -1;
  int y = -1;
  stats::MeanEstimate estimate;
  double exact = 0;

  double residual() const { return estimate.mean - exact; }
  /// |residual| in standard errors; zero when both vanish.
  double z_score() const {
    if (estimate.se == 0) return residual() == 0 ? 0.0 : INFINITY;
    return std::abs(residual()) / estimate.se;
  }
};

struct MomentTable {
  double t = 0;
  std::size_t samples = 0;
  /// E L_t(x) against t, one row per vertex (y = -1).
  std::vector<MomentRow> means;
  /// Cov(L_t(x), L_t(y)) against 2 t G(x,y).
  std::vector<MomentRow> covariances;
};

/// Monte Carlo estimates of E L_t(x) = t and Cov(L_t(x), L_t(y)) = 2 t G(x,y).
/// An empty `pairs` means all pairs x <= y.
inline MomentTable moment_identities(const WiredGraph& g, const GreenOperator& green_op, double t,
                                     std::size_t samples, std::uint64_t seed,
                                     std::vector<std::pair<int, int>> pairs = {}, const WalkConfig& cfg = {}) {
  if (!(t >= 0)) throw std::invalid_argument("moment_identities: t must be >= 0");
  const auto nv = static_cast<std::size_t>(g.size());
  if (pairs.empty())
    for (int x = 0; x < g.size(); ++x)
      for (int y = x; y < g.size(); ++y) pairs.emplace_back(x, y);
  std::vector<double> data(nv * samples);
  parallel_for(samples, [&](std::size_t i) {
    auto rng = CounterRng::stream(seed ^ kLocalTimeStream, i);
    const auto f = sample_local_time_field(g, cfg, t, rng);
    for (std::size_t v = 0; v < nv; ++v) data[v * samples + i] = f.local_time[v];
  });
  auto column = [&](int v) { return std::span<const double>(data.data() + static_cast<std::size_t>(v) * samples, samples); };
  MomentTable tab{t, samples, {}, {}};
  for (int x = 0; x < g.size(); ++x) tab.means.push_back({x, -1, stats::mean_ci(column(x)), t});
  for (auto [x, y] : pairs)
    tab.covariances.push_back({x, y, stats::covariance_ci(column(x), column(y)), 2 * t * green_op(x, y)});
  return tab;
}

struct InclusionReport {
  double n = 0;
  double t = 0;
  double u = 0;
  int vertex = -1;
  /// P(f(x)^2 <= u) with f = h' + m_n.
  double p_field = 0;
  /// P(L_t(x) <= u).
  double p_local_time = 0;
  double se_difference = 0;

  /// The marginal inequality p_field <= p_local_time fails by more than 3 SE.
  bool violated() const { return p_field - p_local_time > 3 * se_difference; }
};

/// Marginal consequence of the level-set inclusion at t = m_n^2.
inline std::vector<InclusionReport> marginal_inclusion_check(const WiredGraph& g,
                                                             const CovarianceFactorization& factor, double n, double u,
                                                             const std::vector<int>& probes, std::size_t samples,
                                                             std::uint64_t seed, const WalkConfig& cfg = {}) {
  if (!(u >= 0)) throw std::invalid_argument("marginal_inclusion_check: u must be >= 0");
  if (samples < 2) throw std::invalid_argument("marginal_inclusion_check: need at least two samples");
  const double m = centering(n);
  const double t = m * m;
  const std::size_t np = probes.size();
  std::vector<char> field_low(np * samples), lt_low(np * samples);
  parallel_for(samples, [&](std::size_t i) {
    auto rl = CounterRng::stream(seed ^ kLocalTimeStream, i);
    auto rs = CounterRng::stream(seed ^ kShiftedFieldStream, i);
    const auto lt = sample_local_time_field(g, cfg, t, rl);
    const auto hp = factor.sample(rs);
    for (std::size_t j = 0; j < np; ++j) {
      const double f = hp[probes[j]] + m;
      field_low[j * samples + i] = f * f <= u;
      lt_low[j * samples + i] = lt[probes[j]] <= u;
    }
  });
  std::vector<InclusionReport> out;
  const double ns = static_cast<double>(samples);
  for (std::size_t j = 0; j < np; ++j) {
    double a = 0, b = 0;
    for (std::size_t i = 0; i < samples; ++i) {
      a += field_low[j * samples + i];
      b += lt_low[j * samples + i];
    }
    a /= ns;
    b /= ns;
    out.push_back({n, t, u, probes[j], a, b, std::sqrt((a * (1 - a) + b * (1 - b)) / ns)});
  }
  return out;
}

}  // namespace latcover
