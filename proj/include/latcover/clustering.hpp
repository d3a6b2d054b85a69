#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "latcover/domain.hpp"
#include "latcover/gff.hpp"
#include "latcover/harmonic.hpp"
#include "latcover/walk.hpp"

namespace latcover {

inline constexpr double kDefaultEta0 = 0.25;
inline constexpr double kDefaultGamma = 0.2;

/// Boundary-time constants of the two phases at log-scale n.
struct PhaseTimes {
  double n = 0;
  double eta0 = kDefaultEta0;
  double gamma = kDefaultGamma;
  double sqrt_t_a = 0;
  double t_a = 0;
  double t_b = 0;
  double sqrt_t_c = 0;
  double t_c = 0;
  double r_n = 0;
  double m_n = 0;

  /// t_n(s) = t_A + t_B + s n.
  double total(double s) const { return t_a + t_b + s * n; }
  /// sqrt(t_n(s)) - sqrt(t_C) - s / (2 sqrt 2); vanishes as n grows with s fixed.
  double total_sqrt_defect(double s) const {
    return std::sqrt(total(s)) - sqrt_t_c - s / (2.0 * std::sqrt(2.0));
  }
  /// floor(n - r_n), the scale of cluster balls; clamped at 0.
  int cluster_scale() const { return std::max(0, static_cast<int>(std::floor(n - r_n))); }
};

inline void validate_scale_parameters(double eta0, double gamma) {
  if (!(eta0 > 0 && eta0 < 0.5)) throw std::invalid_argument("eta0 must lie in (0, 1/2)");
  if (!(gamma > 0 && gamma < 0.5 - eta0)) throw std::invalid_argument("gamma must lie in (0, 1/2 - eta0)");
}

inline PhaseTimes phase_times(double n, double eta0 = kDefaultEta0, double gamma = kDefaultGamma) {
  if (!(n > 0)) throw std::invalid_argument("phase_times: n must be > 0");
  validate_scale_parameters(eta0, gamma);
  PhaseTimes p;
  p.n = n;
  p.eta0 = eta0;
  p.gamma = gamma;
  const double r2 = std::sqrt(2.0);
  p.sqrt_t_a = r2 * n - 3.0 / (4.0 * r2) * std::log(n);
  p.t_a = p.sqrt_t_a * p.sqrt_t_a;
  p.t_b = 0.5 * n * std::log(n);
  p.sqrt_t_c = r2 * n - 1.0 / (2.0 * r2) * std::log(n);
  p.t_c = p.sqrt_t_c * p.sqrt_t_c;
  p.r_n = std::pow(n, 0.5 - eta0);
  p.m_n = p.sqrt_t_a;
  return p;
}

/// W_n(u) = { x in bulk : L(x) <= u }.
inline SiteSet low_set(const LatticeDomain& d, const LocalTimeField& field, double u, const SiteSet& bulk_sites) {
  SiteSet out;
  for (Point p : bulk_sites)
    if (auto i = d.index_of(p); i && field[*i] <= u) out.push_back(p);
  return out;
}

inline SiteSet low_set(const LatticeDomain& d, const LocalTimeField& field, double u) {
  return low_set(d, field, u, bulk(d));
}

// ---------------------------------------------------------------------------
// Clusters

struct Cluster {
  Point center;
  SiteSet sites;
  int log_scale = 0;
};

struct ClusterCensus {
  /// floor(n - r_n): centers live in X_scale, clusters in B(z; scale).
  int scale = 0;
  /// One entry per center whose ball meets W, in canonical center order.
  std::vector<Cluster> clusters;
  /// Centers grouped by the log-scale of their cluster.
  std::map<int, std::vector<Point>> centers_by_scale;

  std::size_t center_count() const { return clusters.size(); }

  /// W^k: union of clusters of log-scale k.
  SiteSet vertices_at_scale(int k) const {
    SiteSet out;
    for (const auto& c : clusters)
      if (c.log_scale == k) out.insert(out.end(), c.sites.begin(), c.sites.end());
    return canonical(std::move(out));
  }
};

/// Centers z in X_scale with B(z; scale) meeting `a`, canonical order.
inline std::vector<Point> meeting_centers(const SiteSet& a, int scale) {
  std::vector<Point> zs;
  const double r = scale_radius(scale);
  for (Point w : a)
    for_each_scaled_center_near(w, w, scale, [&](Point z) {
      if (within_scale(w - z, r)) zs.push_back(z);
    });
  return canonical(std::move(zs));
}

inline SiteSet ball_intersection(const SiteSet& a, Point z, int scale) {
  const double r = scale_radius(scale);
  SiteSet out;
  for (Point w : a)
    if (within_scale(w - z, r)) out.push_back(w);
  return out;
}

inline ClusterCensus cluster_census(const SiteSet& w_sites, const PhaseTimes& pt) {
  const SiteSet w = canonical(w_sites);
  ClusterCensus c;
  c.scale = pt.cluster_scale();
  for (Point z : meeting_centers(w, c.scale)) {
    Cluster cl{z, ball_intersection(w, z, c.scale), 0};
    cl.log_scale = log_scale(cl.sites);
    c.centers_by_scale[cl.log_scale].push_back(z);
    c.clusters.push_back(std::move(cl));
  }
  return c;
}

struct ClusteredReport {
  /// rho(B(z; floor(n - r_n)) ∩ A) <= r_n for every z in X_{floor(n - r_n)}.
  bool clustered = true;
  /// No pair has log d(x,y) in [floor(r_n) + 1, floor(n - r_n) - 2]; implied by `clustered`.
  bool separation_holds = true;
};

inline ClusteredReport clustered_test(const SiteSet& a_sites, const PhaseTimes& pt) {
  const SiteSet a = canonical(a_sites);
  ClusteredReport r;
  const int s = pt.cluster_scale();
  for (Point z : meeting_centers(a, s))
    if (log_scale(ball_intersection(a, z, s)) > pt.r_n) {
      r.clustered = false;
      break;
    }
  const double lo = std::floor(pt.r_n) + 1, hi = std::floor(pt.n - pt.r_n) - 2;
  for (std::size_t i = 0; i < a.size() && r.separation_holds; ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double ld = std::log(norm(a[i] - a[j]));
      if (ld >= lo && ld <= hi) {
        r.separation_holds = false;
        break;
      }
    }
  return r;
}

struct ClusteringNumber {
  int value = 0;
  /// True when `value` is certified minimal.
  bool exact = true;
  /// A cover of size `value`.
  std::vector<Point> centers;
};

namespace detail {

struct CoverProblem {
  std::vector<Point> candidates;
  /// covers[c] = indices of points covered by candidate c
  std::vector<std::vector<int>> covers;
  /// by_point[i] = candidates covering point i
  std::vector<std::vector<int>> by_point;
};

inline CoverProblem cover_problem(const SiteSet& a, int scale) {
  CoverProblem p;
  p.candidates = meeting_centers(a, scale);
  p.by_point.resize(a.size());
  const double r = scale_radius(scale);
  for (int c = 0; c < static_cast<int>(p.candidates.size()); ++c) {
    std::vector<int> cov;
    for (int i = 0; i < static_cast<int>(a.size()); ++i)
      if (within_scale(a[static_cast<std::size_t>(i)] - p.candidates[static_cast<std::size_t>(c)], r)) {
        cov.push_back(i);
        p.by_point[static_cast<std::size_t>(i)].push_back(c);
      }
    p.covers.push_back(std::move(cov));
  }
  return p;
}

inline std::vector<int> greedy_cover(const CoverProblem& p, std::size_t npoints) {
  std::vector<char> covered(npoints, 0);
  std::size_t left = npoints;
  std::vector<int> chosen;
  while (left > 0) {
    int best = -1;
    std::size_t gain = 0;
    for (int c = 0; c < static_cast<int>(p.covers.size()); ++c) {
      std::size_t g = 0;
      for (int i : p.covers[static_cast<std::size_t>(c)]) g += !covered[static_cast<std::size_t>(i)];
      if (g > gain) {
        gain = g;
        best = c;
      }
    }
    chosen.push_back(best);
    for (int i : p.covers[static_cast<std::size_t>(best)])
      if (!covered[static_cast<std::size_t>(i)]) {
        covered[static_cast<std::size_t>(i)] = 1;
        --left;
      }
  }
  return chosen;
}

/// Points pairwise sharing no candidate; its size bounds the cover from below.
inline std::size_t packing_lower_bound(const CoverProblem& p, std::size_t npoints) {
  std::vector<char> blocked(p.covers.size(), 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < npoints; ++i) {
    const auto& cs = p.by_point[i];
    if (std::any_of(cs.begin(), cs.end(), [&](int c) { return blocked[static_cast<std::size_t>(c)]; })) continue;
    ++count;
    for (int c : cs) blocked[static_cast<std::size_t>(c)] = 1;
  }
  return count;
}

/// Branch and bound over candidate balls: dominated candidates dropped, the
/// most constrained uncovered point branched first, pruned by a disjoint
/// point packing and by covered-set memoization.
class ExactCover {
 public:
  ExactCover(const CoverProblem& p, std::size_t npoints, std::vector<int> incumbent)
      : full_(npoints == 64 ? ~0ULL : ((1ULL << npoints) - 1)), best_(std::move(incumbent)) {
    std::vector<std::uint64_t> all;
    for (const auto& cov : p.covers) {
      std::uint64_t m = 0;
      for (int i : cov) m |= 1ULL << i;
      all.push_back(m);
    }
    for (std::size_t c = 0; c < all.size(); ++c) {
      bool dominated = false;
      for (std::size_t d = 0; d < all.size() && !dominated; ++d)
        dominated = d != c && (all[c] & ~all[d]) == 0 && (all[c] != all[d] || d < c);
      if (!dominated) {
        masks_.push_back(all[c]);
        ids_.push_back(static_cast<int>(c));
      }
    }
    by_point_.resize(npoints);
    for (std::size_t c = 0; c < masks_.size(); ++c)
      for (std::uint64_t m = masks_[c]; m; m &= m - 1) by_point_[static_cast<std::size_t>(std::countr_zero(m))].push_back(c);
  }

  std::vector<int> solve() {
    std::vector<int> stack;
    search(0, stack);
    return best_;
  }

 private:
  // points pairwise sharing no candidate each need their own ball
  std::size_t packing(std::uint64_t covered) {
    blocked_.assign(masks_.size(), 0);
    std::size_t count = 0;
    for (std::uint64_t left = ~covered & full_; left; left &= left - 1) {
      const auto& cs = by_point_[static_cast<std::size_t>(std::countr_zero(left))];
      if (std::any_of(cs.begin(), cs.end(), [&](std::size_t c) { return blocked_[c] != 0; })) continue;
      ++count;
      for (std::size_t c : cs) blocked_[c] = 1;
    }
    return count;
  }

  void search(std::uint64_t covered, std::vector<int>& stack) {
    if (covered == full_) {
      if (stack.size() < best_.size()) best_ = stack;
      return;
    }
    if (stack.size() + packing(covered) >= best_.size()) return;
    auto [it, fresh] = seen_.try_emplace(covered, stack.size());
    if (!fresh) {
      if (it->second <= stack.size()) return;
      it->second = stack.size();
    }
    std::size_t pick = 0, fewest = SIZE_MAX;
    for (std::uint64_t left = ~covered & full_; left; left &= left - 1) {
      const auto i = static_cast<std::size_t>(std::countr_zero(left));
      if (by_point_[i].size() < fewest) {
        fewest = by_point_[i].size();
        pick = i;
      }
    }
    for (std::size_t c : by_point_[pick]) {
      stack.push_back(ids_[c]);
      search(covered | masks_[c], stack);
      stack.pop_back();
    }
  }

  std::uint64_t full_;
  std::vector<std::uint64_t> masks_;
  std::vector<int> ids_;
  std::vector<std::vector<std::size_t>> by_point_;
  std::vector<int> best_;
  std::unordered_map<std::uint64_t, std::size_t> seen_;
  std::vector<char> blocked_;
};

}  // namespace detail

/// chi_n(A): fewest balls B(z; floor(n - r_n)), z in X_{floor(n - r_n)}, covering A.
/// Exact search up to 64 points; greedy above, certified when it meets the
/// packing lower bound. chi_n(∅) := 0.
inline ClusteringNumber clustering_number(const SiteSet& a_sites, const PhaseTimes& pt) {
  const SiteSet a = canonical(a_sites);
  if (a.empty()) return {0, true, {}};
  const auto p = detail::cover_problem(a, pt.cluster_scale());
  std::vector<int> chosen = detail::greedy_cover(p, a.size());
  bool exact = false;
  if (a.size() <= 64) {
    chosen = detail::ExactCover(p, a.size(), chosen).solve();
    exact = true;
  } else {
    exact = detail::packing_lower_bound(p, a.size()) == chosen.size();
  }
  std::sort(chosen.begin(), chosen.end());
  ClusteringNumber out{static_cast<int>(chosen.size()), exact, {}};
  for (int c : chosen) out.centers.push_back(p.candidates[static_cast<std::size_t>(c)]);
  return out;
}

/// chi_n(A) points with A covered by their r_n-balls and pairwise
/// log-distance > floor(n - r_n) - 3. Points of A are grouped by linkage at
/// distance 2 e^{r_n}; nullopt when that grouping does not yield a skeleton.
inline std::optional<std::vector<Point>> skeleton(const SiteSet& a_sites, const PhaseTimes& pt) {
  const SiteSet a = canonical(a_sites);
  if (a.empty()) return std::vector<Point>{};
  if (!clustered_test(a, pt).clustered) throw std::invalid_argument("skeleton: set is not (r_n, n - r_n)-clustered");
  const double rr = scale_radius(pt.r_n);
  const int chi = clustering_number(a, pt).value;

  // single-linkage components
  std::vector<int> parent(a.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    return i;
  };
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (norm(a[i] - a[j]) < 2 * rr) parent[static_cast<std::size_t>(find(static_cast<int>(i)))] = find(static_cast<int>(j));
  std::map<int, SiteSet> groups;
  for (std::size_t i = 0; i < a.size(); ++i) groups[find(static_cast<int>(i))].push_back(a[i]);
  if (static_cast<int>(groups.size()) != chi) return std::nullopt;

  std::vector<Point> centers;
  for (const auto& [root, g] : groups) {
    const auto [lo, hi] = bounding_box(g);
    std::optional<Point> best;
    std::int64_t best_r2 = std::numeric_limits<std::int64_t>::max();
    for (int y = lo.y; y <= hi.y; ++y)
      for (int x = lo.x; x <= hi.x; ++x) {
        std::int64_t m = 0;
        for (Point p : g) m = std::max(m, norm2(p - Point{x, y}));
        if (m < best_r2) {
          best_r2 = m;
          best = Point{x, y};
        }
      }
    if (!(std::sqrt(static_cast<double>(best_r2)) < rr)) return std::nullopt;
    centers.push_back(*best);
  }
  const double sep = static_cast<double>(pt.cluster_scale()) - 3.0;
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if (!(std::log(norm(centers[i] - centers[j])) > sep)) return std::nullopt;
  return canonical(std::move(centers));
}

// ---------------------------------------------------------------------------
// Downcrossings against harmonic averages

struct RepulsionRow {
  int k = 0;
  double inner = 0;
  double outer = 0;
  /// False when B(x; k + k^gamma) or B(x; k + 1) does not fit in the domain.
  bool admissible = false;
  double sqrt_nhat = 0;
  double sqrt_lbar = 0;

  /// |sqrt(Lbar) - sqrt(Nhat)| / sqrt(Nhat).
  double relative_gap() const {
    if (sqrt_nhat == 0) return sqrt_lbar == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(sqrt_lbar - sqrt_nhat) / sqrt_nhat;
  }
};

/// Per-scale record of sqrt(Nhat_t(x;k)) and sqrt(Lbar_t(x;k+1)). Register
/// observer() with the sampler, then read table() off the sampled field.
class RepulsionProbe {
 public:
  /// Relaxed keeps scales whose balls leave the domain; sites outside the
  /// domain then carry the boundary local time.
  RepulsionProbe(const WiredGraph& g, Point x, const std::vector<int>& ks, double gamma,
                 Containment mode = Containment::Require)
      : graph_(&g), center_(x) {
    for (int k : ks) {
      RepulsionRow row;
      row.k = k;
      if (k >= 1) std::tie(row.inner, row.outer) = gamma_scales(k, gamma);
      row.admissible = k >= 1 && (mode == Containment::Relaxed ||
                                  (closed_ball_inside(g.domain(), x, row.outer) &&
                                   closed_ball_inside(g.domain(), x, static_cast<double>(k + 1))));
      if (row.admissible) {
        bank_.counters.emplace_back(g, x, row.inner, row.outer, mode);
        averagers_.emplace_back(static_cast<double>(k + 1));
      }
      rows_.push_back(row);
    }
  }

  DowncrossingBank& observer() { return bank_; }

  std::vector<RepulsionRow> table(const LocalTimeField& f) const {
    std::vector<RepulsionRow> out = rows_;
    std::size_t j = 0;
    const auto& d = graph_->domain();
    for (auto& row : out) {
      if (!row.admissible) continue;
      row.sqrt_nhat = std::sqrt(bank_.counters[j].log().normalized());
      row.sqrt_lbar = std::sqrt(averagers_[j](
          [&](Point p) {
            const auto i = d.index_of(p);
            return i ? f[*i] : f.boundary_time;
          },
          center_));
      ++j;
    }
    return out;
  }

 private:
  const WiredGraph* graph_;
  Point center_;
  std::vector<RepulsionRow> rows_;
  DowncrossingBank bank_;
  std::vector<HarmonicAverager> averagers_;
};

/// Integer scales k in [k_min, r_n].
inline std::vector<int> profile_scales(const PhaseTimes& pt, int k_min = 1) {
  std::vector<int> ks;
  for (int k = k_min; k <= pt.r_n; ++k) ks.push_back(k);
  return ks;
}

inline std::pair<LocalTimeField, std::vector<RepulsionRow>> repulsion_profile(const WiredGraph& g,
                                                                                const WalkConfig& cfg, double t,
                                                                                Point x, const std::vector<int>& ks,
                                                                                double gamma, CounterRng& rng,
                                                                                Containment mode = Containment::Require) {
  RepulsionProbe probe(g, x, ks, gamma, mode);
  auto field = sample_local_time_field(g, cfg, t, rng, probe.observer());
  auto rows = probe.table(field);
  return {std::move(field), std::move(rows)};
}

}  // namespace latcover
