#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "latcover/constants.hpp"
#include "latcover/domain.hpp"

namespace latcover {

// Discrete potential theory for the walk with edge rate 1/(2 pi). In these
// units the Green function is pi/2 times the inverse of the Dirichlet
// operator I - P, where P is the simple random walk transition matrix.

/// I - (1/4) A on the interior vertices of a site set, A the Z^2 adjacency.
inline Eigen::SparseMatrix<double> dirichlet_operator(const LatticeDomain& d) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  triplets.reserve(d.size() * 5);
  for (int v = 0; v < static_cast<int>(d.size()); ++v) {
    triplets.emplace_back(v, v, 1.0);
    for (Point s : kLatticeSteps)
      if (auto w = d.index_of(d.site(v) + s)) triplets.emplace_back(v, *w, -0.25);
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

/// Dense Green matrix G_D(x, y), in units of expected local time.
class GreenOperator {
 public:
  explicit GreenOperator(Eigen::MatrixXd g) : g_(std::move(g)) {}

  double operator()(int x, int y) const { return g_(x, y); }
  const Eigen::MatrixXd& matrix() const { return g_; }
  int size() const { return static_cast<int>(g_.rows()); }

  /// max |(1/4) sum_{w~y} G(x,w) - G(x,y) + (pi/2) 1{x=y}| / (pi/2).
  double dirichlet_residual(const LatticeDomain& d) const {
    const Eigen::MatrixXd r = Eigen::MatrixXd(dirichlet_operator(d)) * g_ -
                              (kPi / 2) * Eigen::MatrixXd::Identity(g_.rows(), g_.cols());
    return r.cwiseAbs().maxCoeff() / (kPi / 2);
  }

 private:
  Eigen::MatrixXd g_;
};

/// Exact Green matrix by dense Cholesky. Throws past `cap` vertices; use
/// GreenColumnSolver for larger domains.
inline GreenOperator green(const LatticeDomain& d, std::size_t cap = kDenseSolveCap) {
  if (d.empty()) throw std::invalid_argument("green: empty domain");
  if (d.size() > cap)
    throw std::length_error("green: " + std::to_string(d.size()) + " vertices exceeds the dense-solve cap of " +
                            std::to_string(cap) + "; use GreenColumnSolver for per-column solves");
  const Eigen::MatrixXd a(dirichlet_operator(d));
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("green: Dirichlet operator not positive definite");
  Eigen::MatrixXd g = llt.solve((kPi / 2) * Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  g = 0.5 * (g + g.transpose()).eval();
  return GreenOperator(std::move(g));
}

inline GreenOperator green(const WiredGraph& g, std::size_t cap = kDenseSolveCap) { return green(g.domain(), cap); }

/// Sparse factorization for one-column-at-a-time Green solves.
class GreenColumnSolver {
 public:
  explicit GreenColumnSolver(const LatticeDomain& d) : domain_(&d) {
    if (d.empty()) throw std::invalid_argument("green: empty domain");
    ldlt_.compute(dirichlet_operator(d));
    if (ldlt_.info() != Eigen::Success) throw std::runtime_error("green: factorization failed");
  }

  /// G(., y) over all interior vertices.
  Eigen::VectorXd column(int y) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain_->size()));
    e(y) = kPi / 2;
    return ldlt_.solve(e);
  }

  /// Solve (I - P) v = rhs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return ldlt_.solve(rhs); }

 private:
  const LatticeDomain* domain_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

// ---------------------------------------------------------------------------
// Potential kernel

/// a(x) from the single-integral Fourier representation,
///   a(x1, x2) = int_0^pi [1 - cos(x1 t) z(t)^|x2|] / sqrt(b^2 - 1) dt,
/// b = 2 - cos t, z = b - sqrt(b^2 - 1). The |x2| axis is taken along the
/// larger coordinate so the integrand decays instead of oscillating.
inline double potential_kernel_exact(Point x) {
  int p = std::abs(x.x), q = std::abs(x.y);
  if (p > q) std::swap(p, q);
  if (p == 0 && q == 0) return 0.0;
  // 1 - cos(pt) z^q = -expm1(-q s) + z^q * 2 sin^2(pt/2) with z = e^{-s}, free of cancellation near t = 0
  auto integrand = [p, q](double t) {
    const double bm1 = 2.0 * std::sin(0.5 * t) * std::sin(0.5 * t);
    const double root = std::sqrt(bm1 * (bm1 + 2.0));
    const double s = std::log1p(bm1 + root);
    const double sp = std::sin(0.5 * p * t);
    return (-std::expm1(-q * s) + std::exp(-q * s) * 2.0 * sp * sp) / root;
  };
  // the integrand varies on the scale 1/q; split geometrically from there
  double total = 0, lo = 0, hi = std::min(kPi, 1.0 / q);
  for (;;) {
    double err = 0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 12, 1e-13, &err);
    if (hi >= kPi) break;
    lo = hi;
    hi = std::min(kPi, 4 * hi);
  }
  return total;
}

/// a(x): exact below the crossover radius, log||x|| + gamma* above it.
inline double potential_kernel(Point x, double crossover = kPotentialCrossover) {
  if (x.x == 0 && x.y == 0) return 0.0;
  const double r = norm(x);
  if (r > crossover) return std::log(r) + kGammaStar;
  return potential_kernel_exact(x);
}

/// Memoizing evaluator over a fixed window |x|_inf <= window; evaluations
/// outside the window fall through to potential_kernel(). Immutable after
/// construction.
class PotentialKernel {
 public:
  explicit PotentialKernel(int window = 16, double crossover = kPotentialCrossover)
      : window_(window), crossover_(crossover) {
    const int w = window_ + 1;
    table_.assign(static_cast<std::size_t>(w * w), 0.0);
    // symmetric in sign and coordinate swap; fill the first octant and mirror
    for (int i = 0; i <= window_; ++i)
      for (int j = 0; j <= i; ++j) {
        const double v = potential_kernel(Point{i, j}, crossover_);
        table_[static_cast<std::size_t>(i * w + j)] = v;
        table_[static_cast<std::size_t>(j * w + i)] = v;
      }
  }

  double operator()(Point x) const {
    const int i = std::abs(x.x), j = std::abs(x.y);
    if (i <= window_ && j <= window_) return table_[static_cast<std::size_t>(i * (window_ + 1) + j)];
    return potential_kernel(x, crossover_);
  }

  static constexpr double gamma_star() { return kGammaStar; }
  int window() const { return window_; }

 private:
  int window_;
  double crossover_;
  std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Poisson kernel and harmonic averages

/// Exit distribution on the outer boundary of U for the walk started at x.
struct PoissonKernel {
  SiteSet boundary;
  std::vector<double> prob;

  double at(Point z) const {
    auto it = std::lower_bound(boundary.begin(), boundary.end(), z);
    return it != boundary.end() && *it == z ? prob[static_cast<std::size_t>(it - boundary.begin())] : 0.0;
  }
  double total() const {
    double s = 0;
    for (double p : prob) s += p;
    return s;
  }
};

/// Pi_U(x, .) by one adjoint solve: expected visits v = (I - P)^{-1} e_x,
/// then Pi(x, z) = (1/4) sum_{y in U, y ~ z} v(y).
inline PoissonKernel poisson_kernel(const LatticeDomain& u, Point x) {
  const auto xi = u.index_of(x);
  if (!xi) throw std::invalid_argument("poisson_kernel: start point is not interior to U");
  const GreenColumnSolver solver(u);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u.size()));
  e(*xi) = 1.0;
  const Eigen::VectorXd visits = solver.solve(e);
  PoissonKernel k;
  k.boundary = outer_boundary(u);
  k.prob.assign(k.boundary.size(), 0.0);
  for (std::size_t i = 0; i < k.boundary.size(); ++i)
    for (Point s : kLatticeSteps)
      if (auto y = u.index_of(k.boundary[i] + s)) k.prob[i] += 0.25 * visits(*y);
  return k;
}

/// Pi_{B(x;k)}(x, .).
inline PoissonKernel ball_poisson_kernel(Point x, double k) {
  return poisson_kernel(LatticeDomain(ball(x, k)), x);
}

/// \bar f(x;k) = sum_z Pi_{B(x;k)}(x,z) f(z), with the kernel precomputed
/// once for a ball at the origin and translated.
class HarmonicAverager {
 public:
  explicit HarmonicAverager(double k) : k_(k), kernel_(ball_poisson_kernel({0, 0}, k)) {}

  template <class F>
  double operator()(F&& f, Point x) const {
    double s = 0;
    for (std::size_t i = 0; i < kernel_.boundary.size(); ++i) s += kernel_.prob[i] * f(x + kernel_.boundary[i]);
    return s;
  }

  double k() const { return k_; }
  /// Boundary of B(0;k); translate by x for B(x;k).
  const PoissonKernel& kernel() const { return kernel_; }

 private:
  double k_;
  PoissonKernel kernel_;
};

template <class F>
double harmonic_average(F&& f, Point x, double k) {
  return HarmonicAverager(k)(std::forward<F>(f), x);
}

/// |G_U(x,y) - sum_{z in dU} [a(z-x) - a(y-x)] Pi_U(y,z)|.
inline double relation_check(const LatticeDomain& u, const GreenOperator& g, Point x, Point y,
                             const PotentialKernel& a) {
  const auto xi = u.index_of(x), yi = u.index_of(y);
  if (!xi || !yi) throw std::invalid_argument("relation_check: points must be interior");
  const PoissonKernel pk = poisson_kernel(u, y);
  const double ayx = a(y - x);
  double s = 0;
  for (std::size_t i = 0; i < pk.boundary.size(); ++i) s += (a(pk.boundary[i] - x) - ayx) * pk.prob[i];
  return std::abs(g(*xi, *yi) - s);
}

inline double relation_check(const LatticeDomain& u, Point x, Point y) {
  const PotentialKernel a(16);
  return relation_check(u, green(u), x, y, a);
}

/// P_boundary(walk hits x before returning to the boundary) = 2 pi / (deg(boundary) G(x,x)).
inline double hitting_prob_boundary(const WiredGraph& graph, const GreenOperator& g, int x) {
  return 2 * kPi / (graph.deg_boundary() * g(x, x));
}

}  // namespace latcover
