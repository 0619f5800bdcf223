#pragma once

// Paired and Welch t-tests with a self-contained Student-t distribution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "pvpms/error.hpp"

namespace pvpms::stats {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10'000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// Student-t cumulative distribution; df may be fractional (Welch).
inline double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("t_cdf requires df > 0");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

// Inverse of t_cdf by bisection on an expanding bracket.
inline double inv_t_cdf(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_t_cdf requires p in (0, 1)");
  if (p == 0.5) return 0.0;
  double lo = -1.0;
  double hi = 1.0;
  while (t_cdf(lo, df) > p) lo *= 2.0;
  while (t_cdf(hi, df) < p) hi *= 2.0;
  for (int k = 0; k < 300; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double c = t_cdf(mid, df);
    if (c == p) return mid;
    (c < p ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample variance, n - 1 denominator.
inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson requires equal lengths >= 2");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma;
    const double db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateSeries("pearson correlation of a constant series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct TTestResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  std::size_t n = 0;
  double pearson_r = std::numeric_limits<double>::quiet_NaN();  // NaN when either series is constant
  double t_stat = 0.0;
  double df = 0.0;
  double p_one_tail = 0.0;
  double p_two_tail = 0.0;
  double t_crit_one = 0.0;
  double t_crit_two = 0.0;
  double alpha = 0.05;

  bool significant() const { return p_two_tail < alpha; }
};

namespace detail {

inline void fill_probabilities(TTestResult& r) {
  if (std::isinf(r.t_stat)) {
    r.p_one_tail = 0.0;
  } else {
    const double c = t_cdf(r.t_stat, r.df);
    r.p_one_tail = std::min(c, 1.0 - c);
  }
  r.p_two_tail = std::min(1.0, 2.0 * r.p_one_tail);
  r.t_crit_one = inv_t_cdf(1.0 - r.alpha, r.df);
  r.t_crit_two = inv_t_cdf(1.0 - r.alpha / 2.0, r.df);
}

inline void fill_descriptive(TTestResult& r, std::span<const double> a, std::span<const double> b) {
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  r.var_a = variance(a);
  r.var_b = variance(b);
  if (a.size() == b.size() && r.var_a > 0.0 && r.var_b > 0.0) r.pearson_r = pearson(a, b);
}

}  // namespace detail

// Paired t-test on d = a - b. A zero-spread difference with nonzero mean
// reports t = +/-infinity; an all-zero difference reports t = 0.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired t-test requires equal lengths >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  TTestResult r;
  r.alpha = alpha;
  r.n = a.size();
  r.df = static_cast<double>(r.n - 1);
  detail::fill_descriptive(r, a, b);

  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  const double md = mean(d);
  const double sd = std::sqrt(variance(d));
  if (sd == 0.0) {
    r.t_stat = md == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), md);
  } else {
    r.t_stat = md / (sd / std::sqrt(static_cast<double>(r.n)));
  }
  detail::fill_probabilities(r);
  return r;
}

// Two-sample t-test assuming unequal variances, Welch-Satterthwaite df.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch t-test requires lengths >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  TTestResult r;
  r.alpha = alpha;
  r.n = a.size();
  detail::fill_descriptive(r, a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = r.var_a / na;
  const double sb = r.var_b / nb;
  const double se2 = sa + sb;
  const double diff = r.mean_a - r.mean_b;
  if (se2 == 0.0) {
    r.t_stat = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.df = na + nb - 2.0;
  } else {
    r.t_stat = diff / std::sqrt(se2);
    r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  }
  detail::fill_probabilities(r);
  return r;
}

}  // namespace pvpms::stats
