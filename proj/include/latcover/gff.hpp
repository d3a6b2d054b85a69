#pragma once

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "latcover/domain.hpp"
#include "latcover/harmonic.hpp"
#include "latcover/rng.hpp"

namespace latcover {

// Discrete Gaussian free field with covariance E h(x) h(y) = G(x,y) / 2,
// zero outside the domain.

/// One field realization on the interior vertices, canonical order.
struct FieldSample {
  std::vector<double> values;

  double operator[](int v) const { return values[static_cast<std::size_t>(v)]; }
  std::size_t size() const { return values.size(); }
};

/// Lower-triangular L with L L^T = G / 2.
class CovarianceFactorization {
 public:
  explicit CovarianceFactorization(const GreenOperator& g) {
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * g.matrix());
    if (llt.info() != Eigen::Success) throw std::runtime_error("sample_dgff: covariance factorization failed");
    lower_ = llt.matrixL();
  }

  const Eigen::MatrixXd& lower() const { return lower_; }
  int size() const { return static_cast<int>(lower_.rows()); }

  /// max_ij |(L L^T)_ij - G_ij / 2|.
  double roundtrip_residual(const GreenOperator& g) const {
    return (lower_ * lower_.transpose() - 0.5 * g.matrix()).cwiseAbs().maxCoeff();
  }

  /// Writes one sample into `out` (size() entries).
  void sample_into(CounterRng& rng, std::span<double> out) const {
    const auto n = lower_.rows();
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    Eigen::Map<Eigen::VectorXd>(out.data(), n).noalias() = lower_.triangularView<Eigen::Lower>() * z;
  }

  FieldSample sample(CounterRng& rng) const {
    FieldSample f;
    f.values.resize(static_cast<std::size_t>(size()));
    sample_into(rng, f.values);
    return f;
  }

 private:
  Eigen::MatrixXd lower_;
};

inline FieldSample sample_dgff(const CovarianceFactorization& factor, CounterRng& rng) { return factor.sample(rng); }

/// Variance profiles on V of the three terms in h_U = phi_{U,V} + h_V.
struct BindingFieldStats {
  SiteSet v;
  std::vector<double> var_u;
  std::vector<double> var_binding;
  std::vector<double> var_v;
  /// Covariance of the binding field on V.
  Eigen::MatrixXd binding_covariance;
  double min_eigenvalue = 0;

  double max_residual() const {
    double r = 0;
    for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(var_u[i] - var_binding[i] - var_v[i]));
    return r;
  }
};

/// Binding field computed as the harmonic extension of h_U from the outer
/// boundary of V, phi(x) = sum_z Pi_V(x,z) h_U(z); its covariance follows
/// from G_U by linear algebra, with no sampling.
inline BindingFieldStats gibbs_markov_check(const LatticeDomain& u, const SiteSet& v_sites) {
  const SiteSet vs = canonical(v_sites);
  if (vs.empty()) throw std::invalid_argument("gibbs_markov_check: V is empty");
  for (Point p : vs)
    if (!u.contains(p)) throw std::invalid_argument("gibbs_markov_check: V is not a subset of U");
  const LatticeDomain v(vs);
  const GreenOperator gu = green(u), gv = green(v);

  // boundary of V inside U; points of dV outside U carry h_U = 0
  SiteSet bd;
  std::vector<int> bd_index;
  for (Point z : outer_boundary(v))
    if (auto i = u.index_of(z)) {
      bd.push_back(z);
      bd_index.push_back(*i);
    }

  const auto nv = static_cast<Eigen::Index>(v.size());
  const auto nb = static_cast<Eigen::Index>(bd.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(nv, nv);
  if (nb > 0) {
    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(nv, nb);
    for (Eigen::Index j = 0; j < nb; ++j)
      for (Point s : kLatticeSteps)
        if (auto y = v.index_of(bd[static_cast<std::size_t>(j)] + s)) step(*y, j) += 0.25;
    const Eigen::MatrixXd a(dirichlet_operator(v));
    const Eigen::MatrixXd harm = a.llt().solve(step);  // Pi_V(x, z)
    Eigen::MatrixXd sigma(nb, nb);
    for (Eigen::Index i = 0; i < nb; ++i)
      for (Eigen::Index j = 0; j < nb; ++j)
        sigma(i, j) = 0.5 * gu(bd_index[static_cast<std::size_t>(i)], bd_index[static_cast<std::size_t>(j)]);
    cov = harm * sigma * harm.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
  }

  BindingFieldStats s;
  s.v = vs;
  for (Eigen::Index i = 0; i < nv; ++i) {
    const int ui = *u.index_of(vs[static_cast<std::size_t>(i)]);
    s.var_u.push_back(0.5 * gu(ui, ui));
    s.var_binding.push_back(cov(i, i));
    s.var_v.push_back(0.5 * gv(static_cast<int>(i), static_cast<int>(i)));
  }
  s.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  s.binding_covariance = std::move(cov);
  return s;
}

/// m_n = sqrt(2) n - 3 / (4 sqrt(2)) log n.
inline double centering(double n) {
  if (!(n > 0)) throw std::invalid_argument("centering: n must be > 0");
  return std::sqrt(2.0) * n - 3.0 / (4.0 * std::sqrt(2.0)) * std::log(n);
}

/// f = h' + shift, kept unmaterialized so level sets can sweep u cheaply.
struct ShiftedField {
  const FieldSample* base = nullptr;
  double shift = 0;

  double operator[](int v) const { return (*base)[v] + shift; }
};

/// { x in region : f(x)^2 <= u }, with region a set of domain sites (typically the bulk).
inline SiteSet level_set(const LatticeDomain& d, const ShiftedField& f, double u, const SiteSet& region) {
  if (!(u >= 0)) throw std::invalid_argument("level_set: u must be >= 0");
  SiteSet out;
  for (Point p : region)
    if (auto i = d.index_of(p)) {
      const double val = f[*i];
      if (val * val <= u) out.push_back(p);
    }
  return out;
}

}  // namespace latcover
