#include "repeaterlab/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace repeaterlab::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) {
    return 0.0;
  }
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) {
    return 0.0;
  }
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) {
    ss += (x - m) * (x - m);
  }
  return ss / static_cast<double>(xs.size() - 1);
}

std::vector<double> ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) {
      ++j;
    }
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      r[order[k]] = avg;
    }
    i = j + 1;
  }
  return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    return 0.0;
  }
  return sxy / std::sqrt(sxx * syy);
}

double t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) {
    return 0.0;
  }
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

TTest welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch_t_test: each sample needs at least two values");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = variance(a) / na;
  const double vb = variance(b) / nb;
  const double diff = mean(a) - mean(b);
  TTest out;
  if (va + vb == 0.0) {
    out.t = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
    out.df = na + nb - 2.0;
    out.p_two_sided = diff == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = diff / std::sqrt(va + vb);
  out.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  out.p_two_sided = t_two_sided_p(out.t, out.df);
  return out;
}

CountInterval binomial_interval(std::uint64_t n, double p, double confidence) {
  if (p <= 0.0) {
    return {0, 0};
  }
  if (p >= 1.0) {
    return {n, n};
  }
  const double tail = (1.0 - confidence) / 2.0;
  const boost::math::binomial dist(static_cast<double>(n), p);
  // Widen until both tails outside the region are at most `tail`.
  std::uint64_t lo = 0;
  while (lo < n && boost::math::cdf(dist, static_cast<double>(lo)) <= tail) {
    ++lo;
  }
  std::uint64_t hi = n;
  while (hi > 0 && boost::math::cdf(boost::math::complement(dist, static_cast<double>(hi - 1))) <=
                       tail) {
    --hi;
  }
  return {lo, std::max(lo, hi)};
}

double binomial_upper_tail(std::uint64_t n, double p, std::uint64_t k) {
  if (k == 0) {
    return 1.0;
  }
  if (k > n) {
    return 0.0;
  }
  const boost::math::binomial dist(static_cast<double>(n), p);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
}

}  // namespace repeaterlab::stats
