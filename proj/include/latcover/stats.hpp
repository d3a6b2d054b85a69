#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace latcover::stats {

/// Default significance level of the acceptance checks.
inline constexpr double kLevel = 1e-3;

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  /// Degrees of freedom, where meaningful.
  int dof = 0;

  bool rejected(double level = kLevel) const { return p_value < level; }
};

struct MeanEstimate {
  double mean = 0;
  double se = 0;
};

/// Sample mean and standard error sd / sqrt(n), sd with the n - 1 denominator.
inline MeanEstimate mean_ci(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("mean_ci: need at least two samples");
  const double n = static_cast<double>(xs.size());
  double m = 0;
  for (double x : xs) m += x;
  m /= n;
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1) / n)};
}

/// Sample covariance with the standard error of the mean of centered products.
inline MeanEstimate covariance_ci(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("covariance_ci: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("covariance_ci: need at least two samples");
  const auto mx = mean_ci(xs).mean, my = mean_ci(ys).mean;
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
  auto e = mean_ci(prod);
  const double n = static_cast<double>(xs.size());
  e.mean *= n / (n - 1);
  return e;
}

/// Kolmogorov limiting tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0, sign = 1;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov: exact sup |F_a - F_b| with ties handled,
/// asymptotic p-value Q(D sqrt(n m / (n + m))).
inline TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  return {d, kolmogorov_q(d * std::sqrt(ne)), x.size(), y.size(), 0};
}

struct PoissonBin {
  /// Counts in [lo, hi]; hi < 0 means unbounded.
  long long lo = 0;
  long long hi = 0;
  double observed = 0;
  double expected = 0;
};

/// Bins for a chi-square Poisson test: consecutive values are merged from the
/// left until each bin expects at least `min_expected`; the last bin is the
/// open upper tail.
inline std::vector<PoissonBin> pool_poisson_bins(std::span<const long long> counts, double rate,
                                                 double min_expected = 5.0) {
  if (!(rate > 0)) throw std::invalid_argument("poisson_gof: rate must be > 0");
  const double n = static_cast<double>(counts.size());
  long long kmax = static_cast<long long>(rate + 40.0 * std::sqrt(rate) + 40.0);
  for (long long c : counts) {
    if (c < 0) throw std::invalid_argument("poisson_gof: negative count");
    kmax = std::max(kmax, c + 1);
  }
  std::vector<double> obs(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (long long c : counts) obs[static_cast<std::size_t>(c)] += 1;

  std::vector<PoissonBin> bins;
  PoissonBin cur{0, 0, 0, 0};
  double cdf = 0;
  for (long long k = 0; k <= kmax; ++k) {
    const double pk = std::exp(k * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0));
    cdf += pk;
    cur.hi = k;
    cur.observed += obs[static_cast<std::size_t>(k)];
    cur.expected += n * pk;
    const double tail = n * std::max(0.0, 1.0 - cdf);
    if (cur.expected >= min_expected && tail >= min_expected) {
      bins.push_back(cur);
      cur = PoissonBin{k + 1, k + 1, 0, 0};
    } else if (tail < min_expected) {
      // close out with the open tail merged into the current bin
      for (long long r = k + 1; r <= kmax; ++r) cur.observed += obs[static_cast<std::size_t>(r)];
      cur.expected += tail;
      cur.hi = -1;
      if (cur.expected < min_expected && !bins.empty()) {
        bins.back().observed += cur.observed;
        bins.back().expected += cur.expected;
        bins.back().hi = -1;
      } else {
        bins.push_back(cur);
      }
      break;
    }
  }
  return bins;
}

/// Chi-square goodness of fit of integer counts to Poisson(rate).
inline TestResult poisson_gof(std::span<const long long> counts, double rate) {
  const auto bins = pool_poisson_bins(counts, rate);
  if (bins.size() < 2) throw std::invalid_argument("poisson_gof: degenerate binning (fewer than two bins)");
  double chi2 = 0;
  for (const auto& b : bins) chi2 += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
  const int dof = static_cast<int>(bins.size()) - 1;
  const double p = boost::math::gamma_q(0.5 * dof, 0.5 * chi2);
  return {chi2, p, counts.size(), 0, dof};
}

/// Median and interquartile range by linear interpolation between order statistics.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace latcover::stats
