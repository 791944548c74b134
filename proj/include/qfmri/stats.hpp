#pragma once

// Pearson correlation, paired and Welch t-tests, Student-t p-values via the
// continued-fraction regularized incomplete beta (no external stats
// dependency).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "qfmri/errors.hpp"

namespace qfmri::stats {

namespace detail {

inline double ln_gamma(double x) { return std::lgamma(x); }

// Continued fraction for the incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0)
    throw NumericsError("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = detail::ln_gamma(a + b) - detail::ln_gamma(a) -
                          detail::ln_gamma(b) + a * std::log(x) +
                          b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// P(T <= t) for Student's t with `df` degrees of freedom.
inline double student_t_cdf(double t, double df) {
  if (df <= 0.0) throw NumericsError("student_t_cdf: df must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

// Two-sided p-value for an observed t statistic.
inline double student_t_two_tail(double t, double df) {
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson: unequal lengths");
  const std::size_t n = a.size();
  if (n < 3) throw ShapeError("pearson: need at least 3 points");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0)
    throw DegenerateError("pearson: zero variance input");
  double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

struct TTestResult {
  double t;
  double df;
  double p_one_tail;  // tail probability beyond |t|
  double p_two_tail;
  double mean_a;
  double mean_b;
  double var_a;  // sample variance (n-1 denominator)
  double var_b;
  double pearson_r;  // pair correlation (paired test only, else NaN)
};

inline TTestResult paired_ttest(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("paired_ttest: unequal lengths");
  const std::size_t n = a.size();
  if (n < 2) throw ShapeError("paired_ttest: need at least 2 pairs");
  TTestResult r{};
  double md = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.mean_a += a[i];
    r.mean_b += b[i];
    md += a[i] - b[i];
  }
  r.mean_a /= n;
  r.mean_b /= n;
  md /= n;
  double vd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - md;
    vd += d * d;
    r.var_a += (a[i] - r.mean_a) * (a[i] - r.mean_a);
    r.var_b += (b[i] - r.mean_b) * (b[i] - r.mean_b);
  }
  vd /= (n - 1);
  r.var_a /= (n - 1);
  r.var_b /= (n - 1);
  if (vd <= 0.0)
    throw DegenerateError("paired_ttest: zero variance of differences");
  r.t = md / std::sqrt(vd / n);
  r.df = static_cast<double>(n - 1);
  r.p_two_tail = student_t_two_tail(r.t, r.df);
  r.p_one_tail = 0.5 * r.p_two_tail;
  r.pearson_r = pearson(a, b);
  return r;
}

inline TTestResult welch_ttest(std::span<const double> a,
                               std::span<const double> b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na < 2 || nb < 2)
    throw ShapeError("welch_ttest: need at least 2 samples per group");
  TTestResult r{};
  r.pearson_r = std::numeric_limits<double>::quiet_NaN();
  for (double v : a) r.mean_a += v;
  for (double v : b) r.mean_b += v;
  r.mean_a /= na;
  r.mean_b /= nb;
  for (double v : a) r.var_a += (v - r.mean_a) * (v - r.mean_a);
  for (double v : b) r.var_b += (v - r.mean_b) * (v - r.mean_b);
  r.var_a /= (na - 1);
  r.var_b /= (nb - 1);
  const double sa = r.var_a / na;
  const double sb = r.var_b / nb;
  if (sa + sb <= 0.0)
    throw DegenerateError("welch_ttest: degenerate variance in both groups");
  r.t = (r.mean_a - r.mean_b) / std::sqrt(sa + sb);
  // Welch-Satterthwaite degrees of freedom
  const double denom = (na > 1 ? sa * sa / (na - 1) : 0.0) +
                       (nb > 1 ? sb * sb / (nb - 1) : 0.0);
  r.df = (sa + sb) * (sa + sb) / denom;
  r.p_two_tail = student_t_two_tail(r.t, r.df);
  r.p_one_tail = 0.5 * r.p_two_tail;
  return r;
}

}  // namespace qfmri::stats
