#pragma once

#include "urnlab/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace urnlab {
namespace stats {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;  // unbiased
  double sd = 0.0;
  double skew = 0.0;
  double kurt_excess = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  m.n = x.size();
  if (m.n == 0) return m;
  double s = 0.0;
  for (double v : x) s += v;
  m.mean = s / double(m.n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    double d = v - m.mean;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= double(m.n);
  m3 /= double(m.n);
  m4 /= double(m.n);
  m.var = m.n > 1 ? m2 * double(m.n) / double(m.n - 1) : 0.0;
  m.sd = std::sqrt(m.var);
  if (m2 > 0.0) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.kurt_excess = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

inline double median(std::vector<double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  double pos = q * double(x.size() - 1);
  std::size_t lo = std::size_t(pos);
  std::size_t hi = std::min(lo + 1, x.size() - 1);
  double w = pos - double(lo);
  return (1.0 - w) * x[lo] + w * x[hi];
}

// 99% quantile of chi-squared with 2 degrees of freedom.
inline constexpr double kChi2Df2At99 = 9.21034037197618;

struct NormalityTest {
  double z_skew = 0.0;
  double z_kurt = 0.0;
  double k2 = 0.0;
  bool pass_at_1pct = false;
};

// D'Agostino-Pearson omnibus test: transformed skewness and kurtosis, K2 is
// asymptotically chi-squared(2).
inline NormalityTest dagostino_k2(const std::vector<double>& x) {
  NormalityTest t;
  double n = double(x.size());
  require(x.size() >= 20, "stats.normality", "need at least 20 samples");
  Moments m = moments(x);

  double g1 = m.skew;
  double y = g1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                 ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  double delta = 1.0 / std::sqrt(std::log(std::sqrt(w2)));
  double a = std::sqrt(2.0 / (w2 - 1.0));
  t.z_skew = delta * std::log(y / a + std::sqrt((y / a) * (y / a) + 1.0));

  double b2 = m.kurt_excess + 3.0;
  double eb2 = 3.0 * (n - 1.0) / (n + 1.0);
  double vb2 = 24.0 * n * (n - 2.0) * (n - 3.0) /
               ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  double xs = (b2 - eb2) / std::sqrt(vb2);
  double sb = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
              std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  double aa = 6.0 + 8.0 / sb * (2.0 / sb + std::sqrt(1.0 + 4.0 / (sb * sb)));
  double inner = (1.0 - 2.0 / aa) / (1.0 + xs * std::sqrt(2.0 / (aa - 4.0)));
  t.z_kurt = ((1.0 - 2.0 / (9.0 * aa)) - std::cbrt(inner)) /
             std::sqrt(2.0 / (9.0 * aa));

  t.k2 = t.z_skew * t.z_skew + t.z_kurt * t.z_kurt;
  t.pass_at_1pct = t.k2 < kChi2Df2At99;
  return t;
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-14;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    int m2 = 2 * m;
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
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation; the
// symmetric split keeps the fraction in its fast-converging region.
inline double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "stats.beta", "need a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

inline double beta_cdf(double x, double a, double b) {
  return incomplete_beta(a, b, x);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// One-sample Kolmogorov-Smirnov against a continuous CDF; asymptotic
// p-value with the Stephens small-sample correction.
inline KsResult ks_test(std::vector<double> x,
                        const std::function<double(double)>& cdf) {
  require(!x.empty(), "stats.ks", "empty sample");
  std::sort(x.begin(), x.end());
  double n = double(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = cdf(x[i]);
    d = std::max(d, std::abs(f - double(i) / n));
    d = std::max(d, std::abs(double(i + 1) / n - f));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * lambda * lambda);
    p += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return {d, std::clamp(2.0 * p, 0.0, 1.0)};
}

}  // namespace stats
}  // namespace urnlab
