#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace latcover {

/// Raised for malformed or unusable shape descriptions (bad polygon files,
/// shapes not containing the origin, unknown shape names).
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0;
  double y = 0;
};

/// A point of Z^2. Ordered row-major: by y, then by x.
struct Point {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(Point, Point) = default;
  friend constexpr std::strong_ordering operator<=>(Point a, Point b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
};

inline constexpr std::array<Point, 4> kLatticeSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

constexpr std::int64_t norm2(Point p) {
  return static_cast<std::int64_t>(p.x) * p.x + static_cast<std::int64_t>(p.y) * p.y;
}
inline double norm(Point p) { return std::sqrt(static_cast<double>(norm2(p))); }

/// Radius e^k of a ball of exponential scale k.
inline double scale_radius(double k) { return std::exp(k); }

/// ||p|| < e^k, with the square root taken so that integer distances compare exactly.
inline bool within_scale(Point p, double radius) { return norm(p) < radius; }

constexpr std::uint64_t pack(Point p) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32) |
         static_cast<std::uint32_t>(p.y);
}

/// Sorted, duplicate-free list of lattice points.
using SiteSet = std::vector<Point>;

inline SiteSet canonical(SiteSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline bool site_set_contains(const SiteSet& s, Point p) {
  return std::binary_search(s.begin(), s.end(), p);
}

inline bool is_subset(const SiteSet& a, const SiteSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// ---------------------------------------------------------------------------
// Shapes

/// Bounded open planar set containing the origin.
class PlanarShape {
 public:
  enum class Kind { Disc, Square, Polygon };

  static PlanarShape disc() { return PlanarShape(Kind::Disc, "disc", {}); }
  static PlanarShape square() { return PlanarShape(Kind::Square, "square", {}); }

  /// Simple polygon, closed implicitly. Must contain the origin.
  static PlanarShape polygon(std::vector<Vec2> vertices, std::string name = "polygon") {
    if (vertices.size() < 3) throw ShapeError("polygon needs at least 3 vertices");
    PlanarShape s(Kind::Polygon, std::move(name), std::move(vertices));
    if (!s.contains({0, 0})) throw ShapeError("polygon does not contain the origin");
    if (s.distance_to_complement({0, 0}) <= 0) throw ShapeError("origin lies on the polygon boundary");
    return s;
  }

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }

  bool contains(Vec2 p) const {
    switch (kind_) {
      case Kind::Disc: return p.x * p.x + p.y * p.y < 1.0;
      case Kind::Square: return std::abs(p.x) < 1.0 && std::abs(p.y) < 1.0;
      case Kind::Polygon: return polygon_contains(p) && polygon_edge_distance(p) > 0;
    }
    return false;
  }

  /// Euclidean distance from p to the complement; zero outside the shape.
  double distance_to_complement(Vec2 p) const {
    switch (kind_) {
      case Kind::Disc: return std::max(0.0, 1.0 - std::hypot(p.x, p.y));
      case Kind::Square: return std::max(0.0, std::min(1.0 - std::abs(p.x), 1.0 - std::abs(p.y)));
      case Kind::Polygon: return polygon_contains(p) ? polygon_edge_distance(p) : 0.0;
    }
    return 0.0;
  }

  /// d(p/N, D^c) > 1/N, evaluated in lattice units so that integer N is exact
  /// for the built-in shapes.
  bool interior_at_scale(Point p, double N) const {
    const double m = N - 1.0;
    if (!(m > 0)) return false;
    switch (kind_) {
      case Kind::Disc: return static_cast<double>(norm2(p)) < m * m;
      case Kind::Square: return std::max(std::abs(p.x), std::abs(p.y)) < m;
      case Kind::Polygon: {
        const Vec2 q{p.x / N, p.y / N};
        return polygon_contains(q) && N * polygon_edge_distance(q) > 1.0;
      }
    }
    return false;
  }

  /// Radius of a centered disc enclosing the shape.
  double enclosing_radius() const {
    switch (kind_) {
      case Kind::Disc: return 1.0;
      case Kind::Square: return std::sqrt(2.0);
      case Kind::Polygon: {
        double r = 0;
        for (const auto& v : vertices_) r = std::max(r, std::hypot(v.x, v.y));
        return r;
      }
    }
    return 0.0;
  }

 private:
  PlanarShape(Kind kind, std::string name, std::vector<Vec2> vertices)
      : kind_(kind), name_(std::move(name)), vertices_(std::move(vertices)) {}

  bool polygon_contains(Vec2 p) const {
    bool inside = false;
    const std::size_t m = vertices_.size();
    for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
      const Vec2 a = vertices_[i], b = vertices_[j];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xc = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
        if (p.x < xc) inside = !inside;
      }
    }
    return inside;
  }

  double polygon_edge_distance(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t m = vertices_.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2 a = vertices_[i], b = vertices_[(i + 1) % m];
      const double dx = b.x - a.x, dy = b.y - a.y;
      const double len2 = dx * dx + dy * dy;
      double s = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
      s = std::clamp(s, 0.0, 1.0);
      best = std::min(best, std::hypot(p.x - (a.x + s * dx), p.y - (a.y + s * dy)));
    }
    return best;
  }

  Kind kind_;
  std::string name_;
  std::vector<Vec2> vertices_;
};

/// Polygon file: one "x y" pair per line; blank lines and '#' comments ignored.
inline PlanarShape load_polygon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ShapeError("cannot open polygon file: " + path);
  std::vector<Vec2> vs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    std::istringstream ls(line);
    Vec2 v;
    if (!(ls >> v.x)) continue;
    std::string rest;
    if (!(ls >> v.y) || (ls >> rest) || !std::isfinite(v.x) || !std::isfinite(v.y))
      throw ShapeError(path + ":" + std::to_string(lineno) + ": expected \"x y\"");
    vs.push_back(v);
  }
  return PlanarShape::polygon(std::move(vs), "poly:" + path);
}

/// Parses `disc`, `square` or `poly:<path>`.
inline PlanarShape parse_shape(const std::string& spec) {
  if (spec == "disc") return PlanarShape::disc();
  if (spec == "square") return PlanarShape::square();
  if (spec.rfind("poly:", 0) == 0) return load_polygon(spec.substr(5));
  throw ShapeError("unknown shape '" + spec + "' (expected disc, square or poly:<path>)");
}

// ---------------------------------------------------------------------------
// Lattice domains

/// Finite subset of Z^2 with sites in canonical order and O(1) index lookup.
class LatticeDomain {
 public:
  LatticeDomain() = default;

  /// Domain from an explicit site set. Scale and shape are unset.
  explicit LatticeDomain(SiteSet sites) : sites_(canonical(std::move(sites))) { build_index(); }

  LatticeDomain(SiteSet sites, double scale, PlanarShape shape)
      : sites_(canonical(std::move(sites))), scale_(scale), shape_(std::move(shape)) {
    build_index();
  }

  const SiteSet& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }

  /// N, or nullopt for explicit site sets.
  std::optional<double> scale() const { return scale_; }
  /// n = log N, or nullopt for explicit site sets.
  std::optional<double> log_scale_n() const {
    return scale_ ? std::optional<double>(std::log(*scale_)) : std::nullopt;
  }
  const std::optional<PlanarShape>& shape() const { return shape_; }

  bool contains(Point p) const { return index_.count(pack(p)) != 0; }
  std::optional<int> index_of(Point p) const {
    auto it = index_.find(pack(p));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  Point site(int i) const { return sites_[static_cast<std::size_t>(i)]; }

 private:
  void build_index() {
    index_.reserve(sites_.size());
    for (std::size_t i = 0; i < sites_.size(); ++i) index_.emplace(pack(sites_[i]), static_cast<int>(i));
  }

  SiteSet sites_;
  std::optional<double> scale_;
  std::optional<PlanarShape> shape_;
  std::unordered_map<std::uint64_t, int> index_;
};

/// D_N = { x in Z^2 : d(x/N, D^c) > 1/N }. An empty result is returned as an
/// empty domain, not an error.
inline LatticeDomain discretize_at_scale(const PlanarShape& shape, double N) {
  if (!(N > 1.0) || !std::isfinite(N)) throw std::invalid_argument("discretize: scale N must be > 1");
  const int R = static_cast<int>(std::ceil(N * shape.enclosing_radius())) + 1;
  SiteSet sites;
  for (int y = -R; y <= R; ++y)
    for (int x = -R; x <= R; ++x)
      if (shape.interior_at_scale({x, y}, N)) sites.push_back({x, y});
  return LatticeDomain(std::move(sites), N, shape);
}

/// D_n := D_N with N = e^n.
inline LatticeDomain discretize(const PlanarShape& shape, double n) {
  if (!(n > 0.0)) throw std::invalid_argument("discretize: log-scale n must be > 0");
  return discretize_at_scale(shape, std::exp(n));
}

/// Vertices of Z^2 \ U sharing an edge with U.
inline SiteSet outer_boundary(const LatticeDomain& u) {
  SiteSet out;
  for (Point p : u.sites())
    for (Point s : kLatticeSteps)
      if (!u.contains(p + s)) out.push_back(p + s);
  return canonical(std::move(out));
}

/// B(x;k) = { y : ||x - y|| < e^k }.
inline SiteSet ball(Point center, double k) {
  const double r = scale_radius(k);
  const int R = static_cast<int>(std::ceil(r));
  SiteSet out;
  for (int dy = -R; dy <= R; ++dy)
    for (int dx = -R; dx <= R; ++dx)
      if (within_scale({dx, dy}, r)) out.push_back(center + Point{dx, dy});
  return out;  // already row-major
}

/// Closure B ∪ ∂B of a ball lies in the domain.
inline bool closed_ball_inside(const LatticeDomain& d, Point center, double k) {
  const LatticeDomain b(ball(center, k));
  for (Point p : b.sites())
    if (!d.contains(p)) return false;
  for (Point p : outer_boundary(b))
    if (!d.contains(p)) return false;
  return true;
}

/// Euclidean distance from each site of `u` to Z^2 \ U. The nearest
/// non-site is always in the outer boundary.
inline std::vector<double> distance_to_complement(const LatticeDomain& u) {
  const SiteSet bd = outer_boundary(u);
  std::vector<double> d(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (Point z : bd) best = std::min(best, norm2(z - u.sites()[i]));
    d[i] = std::sqrt(static_cast<double>(best));
  }
  return d;
}

/// U^r = { x : d(x, U^c) > e^r }.
inline SiteSet r_bulk(const LatticeDomain& u, double r) {
  if (u.empty()) return {};
  const double thr = std::isinf(r) && r < 0 ? 0.0 : scale_radius(r);
  const auto d = distance_to_complement(u);
  SiteSet out;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (d[i] > thr) out.push_back(u.sites()[i]);
  return out;
}

/// D_n^o = D_n^{n - 2 log n}. Requires a domain built by discretize().
inline SiteSet bulk(const LatticeDomain& d) {
  const auto n = d.log_scale_n();
  if (!n) throw std::invalid_argument("bulk: domain has no scale");
  return r_bulk(d, *n - 2.0 * std::log(*n));
}

/// Spacing floor(e^k) of the scaled lattice X_k.
inline int lattice_spacing(int k) {
  if (k < 0) throw std::invalid_argument("scaled lattice index must be nonnegative");
  return static_cast<int>(std::floor(std::exp(static_cast<double>(k))));
}

inline int floor_div(int a, int b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }
inline int ceil_div(int a, int b) { return -floor_div(-a, b); }

/// Calls f(z) for every z in X_k with ||z - p|| < e^k for some p in the box
/// [lo, hi] expanded by e^k (superset of centers whose ball meets the box).
template <class F>
void for_each_scaled_center_near(Point lo, Point hi, int k, F&& f) {
  const int s = lattice_spacing(k);
  const int R = static_cast<int>(std::ceil(scale_radius(k)));
  for (int j = ceil_div(lo.y - R, s); j <= floor_div(hi.y + R, s); ++j)
    for (int i = ceil_div(lo.x - R, s); i <= floor_div(hi.x + R, s); ++i) f(Point{i * s, j * s});
}

inline std::pair<Point, Point> bounding_box(const SiteSet& u) {
  Point lo{std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
  Point hi{std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
  for (Point p : u) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return {lo, hi};
}

/// rho(U) = min{ k in N_0 : U ⊆ B(y;k) for some y in X_k }; rho(∅) := 0.
inline int log_scale(const SiteSet& u) {
  if (u.empty()) return 0;
  const auto [lo, hi] = bounding_box(u);
  for (int k = 0;; ++k) {
    const double r = scale_radius(k);
    bool found = false;
    for_each_scaled_center_near(lo, hi, k, [&](Point y) {
      if (found) return;
      found = std::all_of(u.begin(), u.end(), [&](Point p) { return within_scale(p - y, r); });
    });
    if (found) return k;
  }
}

/// Partition of X_k into residue classes whose scale-l balls are pairwise disjoint.
class ScaledLatticePartition {
 public:
  ScaledLatticePartition(int k, int l) : k_(k), l_(l) {
    if (k < 0 || l < k) throw std::invalid_argument("partition: need l >= k >= 0");
    spacing_ = lattice_spacing(k);
    modulus_ = 2 * lattice_spacing(l) / spacing_ + 1;
  }

  int k() const { return k_; }
  int l() const { return l_; }
  int spacing() const { return spacing_; }
  int modulus() const { return modulus_; }
  /// J_{k,l} = (floor(2 floor(e^l) / floor(e^k)) + 1)^2.
  int class_count() const { return modulus_ * modulus_; }

  /// Class index in [0, class_count) of a center of X_k.
  int class_of(Point z) const {
    if (z.x % spacing_ != 0 || z.y % spacing_ != 0) throw std::invalid_argument("partition: point not in X_k");
    auto mod = [&](int a) { return ((a / spacing_) % modulus_ + modulus_) % modulus_; };
    return mod(z.y) * modulus_ + mod(z.x);
  }

 private:
  int k_, l_, spacing_ = 1, modulus_ = 1;
};

inline ScaledLatticePartition partition(int k, int l) { return ScaledLatticePartition(k, l); }

// ---------------------------------------------------------------------------
// Wired graph

/// D_N plus the contracted boundary vertex. Interior vertices are numbered in
/// canonical site order; the boundary vertex has id size().
class WiredGraph {
 public:
  explicit WiredGraph(LatticeDomain domain) : domain_(std::move(domain)) {
    if (domain_.empty()) throw std::invalid_argument("wire: nothing to wire (empty domain)");
    const int n = static_cast<int>(domain_.size());
    nbrs_.resize(domain_.size());
    bmult_.assign(domain_.size(), 0);
    for (int v = 0; v < n; ++v) {
      for (std::size_t d = 0; d < 4; ++d) {
        const auto w = domain_.index_of(domain_.site(v) + kLatticeSteps[d]);
        nbrs_[v][d] = w ? *w : n;
        if (!w) {
          ++bmult_[v];
          boundary_edges_.push_back(v);
        } else if (*w > v) {
          ++interior_edges_;
        }
      }
    }
  }

  const LatticeDomain& domain() const { return domain_; }
  int size() const { return static_cast<int>(domain_.size()); }
  int boundary() const { return size(); }
  Point coord(int v) const { return domain_.site(v); }

  /// Neighbor across each lattice step; boundary() when the step leaves the domain.
  const std::array<int, 4>& neighbors(int v) const { return nbrs_[static_cast<std::size_t>(v)]; }
  /// Edge multiplicity between v and the boundary vertex.
  int boundary_multiplicity(int v) const { return bmult_[static_cast<std::size_t>(v)]; }
  int deg_boundary() const { return static_cast<int>(boundary_edges_.size()); }
  int degree(int v) const { return v == boundary() ? deg_boundary() : 4; }
  std::size_t interior_edge_count() const { return interior_edges_; }
  /// One entry per unit of boundary multiplicity: the interior endpoint.
  const std::vector<int>& boundary_edges() const { return boundary_edges_; }

 private:
  LatticeDomain domain_;
  std::vector<std::array<int, 4>> nbrs_;
  std::vector<int> bmult_;
  std::vector<int> boundary_edges_;
  std::size_t interior_edges_ = 0;
};

inline WiredGraph wire(LatticeDomain domain) { return WiredGraph(std::move(domain)); }

}  // namespace latcover
