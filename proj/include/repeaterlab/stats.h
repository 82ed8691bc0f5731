#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace repeaterlab::stats {

double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance; 0 for fewer than two values.
double variance(std::span<const double> xs);

/// Ranks starting at 1, ties receive their average rank.
std::vector<double> ranks(std::span<const double> xs);

/// Spearman rank correlation (Pearson correlation of average ranks).
/// Returns 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct TTest {
  double t{0.0};
  double df{0.0};
  double p_two_sided{1.0};
};

/// Welch's unequal-variance two-sample t-test.
TTest welch_t_test(std::span<const double> a, std::span<const double> b);

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

struct CountInterval {
  std::uint64_t lo{0};
  std::uint64_t hi{0};

  bool contains(std::uint64_t k) const { return k >= lo && k <= hi; }
};

/// Central acceptance region of Binomial(n, p) holding at least `confidence`
/// of the mass.
CountInterval binomial_interval(std::uint64_t n, double p, double confidence);

/// One-sided upper-tail p-value P[X >= k] for X ~ Binomial(n, p).
double binomial_upper_tail(std::uint64_t n, double p, std::uint64_t k);

}  // namespace repeaterlab::stats
