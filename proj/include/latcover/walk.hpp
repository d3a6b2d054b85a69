#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "latcover/constants.hpp"
#include "latcover/domain.hpp"
#include "latcover/rng.hpp"

namespace latcover {

// Continuous-time simple random walk on the wired graph. Every vertex v holds
// for an Exp(deg(v) * edge_rate) time and then jumps along a uniformly chosen
// edge, counting multiplicities; interior vertices have degree 4 and the
// boundary vertex has degree deg_boundary().

inline constexpr double kDefaultEdgeRate = 1.0 / (2.0 * kPi);

struct WalkConfig {
  double edge_rate = kDefaultEdgeRate;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(edge_rate > 0) || !std::isfinite(edge_rate)) throw std::invalid_argument("edge_rate must be > 0");
  }
};

/// Hooks called by the simulators. Times are real (not boundary) time.
/// Derive from this and shadow what you need.
struct NullObserver {
  void on_excursion_start(double /*boundary_time*/) {}
  void on_jump(int /*from*/, int /*to*/, double /*time*/) {}
  void on_boundary_return(double /*time*/) {}
};

inline double exponential(CounterRng& rng, double rate) { return -std::log(rng.uniform()) / rate; }

/// Uniform integer in [0, n) by multiply-shift.
inline std::uint64_t uniform_index(CounterRng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Runs one excursion from the boundary vertex, adding holding times into
/// `local_time`. Returns {entry vertex, duration}.
template <class Observer = NullObserver>
std::pair<int, double> run_excursion(const WiredGraph& g, double edge_rate, CounterRng& rng,
                                     std::span<double> local_time, double start_time = 0.0,
                                     Observer&& obs = Observer{}) {
  const int bd = g.boundary();
  const double rate = 4.0 * edge_rate;
  const auto& edges = g.boundary_edges();
  int v = edges[uniform_index(rng, edges.size())];
  const int entry = v;
  double time = start_time;
  obs.on_jump(bd, v, time);
  for (;;) {
    const double dt = exponential(rng, rate);
    local_time[static_cast<std::size_t>(v)] += dt;
    time += dt;
    const int w = g.neighbors(v)[rng() >> 62];
    obs.on_jump(v, w, time);
    if (w == bd) {
      obs.on_boundary_return(time);
      return {entry, time - start_time};
    }
    v = w;
  }
}

/// One excursion away from the boundary with its per-vertex increments.
struct ExcursionRecord {
  int entry = -1;
  double duration = 0;
  /// (vertex, local time gained), sorted by vertex.
  std::vector<std::pair<int, double>> increments;

  bool visited(int v) const {
    return std::binary_search(increments.begin(), increments.end(), std::pair<int, double>{v, 0.0},
                              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
};

template <class Observer = NullObserver>
ExcursionRecord simulate_excursion(const WiredGraph& g, const WalkConfig& cfg, CounterRng& rng,
                                   Observer&& obs = Observer{}) {
  cfg.validate();
  std::vector<double> lt(static_cast<std::size_t>(g.size()), 0.0);
  auto [entry, duration] = run_excursion(g, cfg.edge_rate, rng, lt, 0.0, obs);
  ExcursionRecord r{entry, duration, {}};
  for (int v = 0; v < g.size(); ++v)
    if (lt[static_cast<std::size_t>(v)] > 0) r.increments.emplace_back(v, lt[static_cast<std::size_t>(v)]);
  return r;
}

/// Local times at boundary time t, L_t(x) = L_{L^{-1}_t(boundary)}(x), with the
/// excursion timeline needed to invert the boundary clock.
struct LocalTimeField {
  std::vector<double> local_time;
  double boundary_time = 0;
  double real_time = 0;
  /// Boundary times at which excursions leave, nondecreasing.
  std::vector<double> excursion_starts;
  std::vector<double> excursion_durations;

  std::size_t excursions() const { return excursion_starts.size(); }
  double operator[](int v) const { return local_time[static_cast<std::size_t>(v)]; }

  /// S_t = sum over interior vertices of L_t(x).
  double interior_total() const {
    double s = 0;
    for (double l : local_time) s += l;
    return s;
  }

  double min_local_time() const { return *std::min_element(local_time.begin(), local_time.end()); }

  /// L^{-1}_s(boundary) = s + sum of durations of excursions started by boundary time s.
  /// Right-continuous in s.
  double inverse_boundary_time(double s) const {
    check_horizon(s);
    const auto n = std::upper_bound(excursion_starts.begin(), excursion_starts.end(), s) - excursion_starts.begin();
    double sum = 0;
    for (std::ptrdiff_t i = 0; i < n; ++i) sum += excursion_durations[static_cast<std::size_t>(i)];
    return s + sum;
  }

  /// Left limit L^{-1}_{s-}(boundary).
  double inverse_boundary_time_left(double s) const {
    check_horizon(s);
    const auto n = std::lower_bound(excursion_starts.begin(), excursion_starts.end(), s) - excursion_starts.begin();
    double sum = 0;
    for (std::ptrdiff_t i = 0; i < n; ++i) sum += excursion_durations[static_cast<std::size_t>(i)];
    return s + sum;
  }

 private:
  void check_horizon(double s) const {
    if (s < 0 || s > boundary_time) throw std::out_of_range("boundary time outside the simulated horizon");
  }
};

/// Exact sampler of L_t: the number of excursions by boundary time t is
/// Poisson(deg(boundary) * edge_rate * t), their start times are uniform
/// order statistics on [0, t], and the excursions are i.i.d.
template <class Observer = NullObserver>
LocalTimeField sample_local_time_field(const WiredGraph& g, const WalkConfig& cfg, double t, CounterRng& rng,
                                       Observer&& obs = Observer{}) {
  if (!(t >= 0)) throw std::invalid_argument("sample_local_time_field: t must be >= 0");
  cfg.validate();
  LocalTimeField f;
  f.local_time.assign(static_cast<std::size_t>(g.size()), 0.0);
  f.boundary_time = t;
  std::poisson_distribution<long long> count(g.deg_boundary() * cfg.edge_rate * t);
  const long long e = t > 0 ? count(rng) : 0;
  f.excursion_starts.resize(static_cast<std::size_t>(e));
  for (auto& s : f.excursion_starts) s = t * rng.uniform();
  std::sort(f.excursion_starts.begin(), f.excursion_starts.end());
  f.excursion_durations.reserve(static_cast<std::size_t>(e));
  double real = 0;
  for (double s : f.excursion_starts) {
    obs.on_excursion_start(s);
    const double d = run_excursion(g, cfg.edge_rate, rng, f.local_time, s + real, obs).second;
    f.excursion_durations.push_back(d);
    real += d;
  }
  f.real_time = t + real;
  return f;
}

/// Direct simulation of the walk from the boundary vertex with explicit
/// Exp(deg(boundary) * edge_rate) holding times there, stopped when the
/// boundary local time reaches t. Same law as sample_local_time_field.
template <class Observer = NullObserver>
LocalTimeField simulate_to_boundary_time(const WiredGraph& g, const WalkConfig& cfg, double t, CounterRng& rng,
                                         Observer&& obs = Observer{}) {
  if (!(t >= 0)) throw std::invalid_argument("simulate_to_boundary_time: t must be >= 0");
  cfg.validate();
  LocalTimeField f;
  f.local_time.assign(static_cast<std::size_t>(g.size()), 0.0);
  f.boundary_time = t;
  const double brate = g.deg_boundary() * cfg.edge_rate;
  double bt = 0, real = 0;
  for (;;) {
    const double hold = exponential(rng, brate);
    if (bt + hold > t) {
      real += t - bt;
      break;
    }
    bt += hold;
    real += hold;
    obs.on_excursion_start(bt);
    const double d = run_excursion(g, cfg.edge_rate, rng, f.local_time, real, obs).second;
    f.excursion_starts.push_back(bt);
    f.excursion_durations.push_back(d);
    real += d;
  }
  f.real_time = real;
  return f;
}

struct CoverResult {
  /// First real time at which every interior vertex has been visited.
  double real_time = 0;
  /// Cover boundary time: boundary local time at the start of the covering excursion.
  double boundary_time = 0;
  int last_vertex = -1;
  /// Excursions started up to and including the covering one.
  std::size_t excursions = 0;
  /// Real time when the covering excursion returns to the boundary.
  double return_time = 0;
  /// Smallest interior local time at return; positive by construction.
  double min_local_time = 0;
};

/// Runs the walk from the boundary vertex until every interior vertex has
/// positive local time, then finishes the current excursion. Streams events;
/// no trajectory is stored.
template <class Observer = NullObserver>
CoverResult run_to_cover(const WiredGraph& g, const WalkConfig& cfg, CounterRng& rng, Observer&& obs = Observer{}) {
  cfg.validate();
  const int bd = g.boundary();
  const double brate = g.deg_boundary() * cfg.edge_rate;
  const double rate = 4.0 * cfg.edge_rate;
  const auto& edges = g.boundary_edges();
  std::vector<double> lt(static_cast<std::size_t>(g.size()), 0.0);
  int uncovered = g.size();
  CoverResult r;
  double bt = 0, time = 0;
  bool covered = false;
  while (!covered) {
    const double hold = exponential(rng, brate);
    bt += hold;
    time += hold;
    ++r.excursions;
    obs.on_excursion_start(bt);
    int v = edges[uniform_index(rng, edges.size())];
    obs.on_jump(bd, v, time);
    for (;;) {
      double& l = lt[static_cast<std::size_t>(v)];
      if (l == 0.0 && --uncovered == 0 && !covered) {
        covered = true;
        r.real_time = time;
        r.boundary_time = bt;
        r.last_vertex = v;
      }
      const double dt = exponential(rng, rate);
      l += dt;
      time += dt;
      const int w = g.neighbors(v)[rng() >> 62];
      obs.on_jump(v, w, time);
      if (w == bd) break;
      v = w;
    }
    obs.on_boundary_return(time);
  }
  r.return_time = time;
  r.min_local_time = *std::min_element(lt.begin(), lt.end());
  return r;
}

// ---------------------------------------------------------------------------
// Downcrossings

/// Inner and outer scales (k + k^gamma / 2, k + k^gamma) of the default annulus.
inline std::pair<double, double> gamma_scales(double k, double gamma) {
  const double kg = std::pow(k, gamma);
  return {k + 0.5 * kg, k + kg};
}

struct DowncrossingLog {
  Point center;
  double inner = 0;
  double outer = 0;
  std::size_t count = 0;
  /// Entry points into B(center; inner).
  std::vector<Point> entries;
  /// Vertex ids at which the walk left B(center; outer); may be the boundary id.
  std::vector<int> exits;

  /// (outer - inner) * count.
  double normalized() const { return (outer - inner) * static_cast<double>(count); }
};

enum class Containment {
  /// closure of B(center; outer) must lie in the domain
  Require,
  /// no check; the boundary vertex is treated as outside every ball
  Relaxed,
};

/// Streaming observer counting (center; inner, outer)-downcrossings: passages
/// from outside B(center; outer) into B(center; inner). The walk starts at
/// the boundary vertex, which lies outside every ball.
class DowncrossingCounter : public NullObserver {
 public:
  DowncrossingCounter(const WiredGraph& g, Point center, double inner, double outer,
                      Containment mode = Containment::Require) {
    if (!(outer > inner) || inner < 0) throw std::invalid_argument("downcrossings: need outer > inner >= 0");
    if (mode == Containment::Require && !closed_ball_inside(g.domain(), center, outer))
      throw std::invalid_argument("downcrossings: ball not contained in domain");
    log_.center = center;
    log_.inner = inner;
    log_.outer = outer;
    const double ri = scale_radius(inner), ro = scale_radius(outer);
    in_inner_.assign(static_cast<std::size_t>(g.size()) + 1, 0);
    in_outer_.assign(static_cast<std::size_t>(g.size()) + 1, 0);
    for (int v = 0; v < g.size(); ++v) {
      in_inner_[static_cast<std::size_t>(v)] = within_scale(g.coord(v) - center, ri);
      in_outer_[static_cast<std::size_t>(v)] = within_scale(g.coord(v) - center, ro);
    }
    coords_ = &g;
  }

  void on_jump(int /*from*/, int to, double /*time*/) {
    const auto i = static_cast<std::size_t>(to);
    if (!inside_) {
      if (in_inner_[i]) {
        inside_ = true;
        ++log_.count;
        log_.entries.push_back(coords_->coord(to));
      }
    } else if (!in_outer_[i]) {
      inside_ = false;
      log_.exits.push_back(to);
    }
  }

  const DowncrossingLog& log() const { return log_; }

 private:
  DowncrossingLog log_;
  std::vector<char> in_inner_, in_outer_;
  const WiredGraph* coords_ = nullptr;
  bool inside_ = false;
};

/// Forwards events to several observers.
template <class... Observers>
struct ObserverFan : NullObserver {
  std::tuple<Observers&...> targets;
  explicit ObserverFan(Observers&... o) : targets(o...) {}
  void on_excursion_start(double t) {
    std::apply([&](auto&... o) { (o.on_excursion_start(t), ...); }, targets);
  }
  void on_jump(int from, int to, double time) {
    std::apply([&](auto&... o) { (o.on_jump(from, to, time), ...); }, targets);
  }
  void on_boundary_return(double time) {
    std::apply([&](auto&... o) { (o.on_boundary_return(time), ...); }, targets);
  }
};

/// Forwards events to a runtime list of downcrossing counters.
struct DowncrossingBank : NullObserver {
  std::vector<DowncrossingCounter> counters;
  void on_jump(int from, int to, double time) {
    for (auto& c : counters) c.on_jump(from, to, time);
  }
};

/// Samples L_t and counts (x; inner, outer)-downcrossings made by boundary time t.
inline std::pair<LocalTimeField, DowncrossingLog> count_downcrossings(const WiredGraph& g, const WalkConfig& cfg,
                                                                      double t, Point x, double inner, double outer,
                                                                      CounterRng& rng,
                                                                      Containment mode = Containment::Require) {
  DowncrossingCounter counter(g, x, inner, outer, mode);
  auto field = sample_local_time_field(g, cfg, t, rng, counter);
  return {std::move(field), counter.log()};
}

}  // namespace latcover
