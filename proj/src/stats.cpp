// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keymux/common.hpp"

namespace keymux::stats {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw Error(ErrorKind::Parameter, "mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw Error(ErrorKind::Parameter, "median of empty sample");
  std::sort(xs.begin(), xs.end());
  size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double percentile_nearest_rank(std::vector<double> xs, double p) {
  if (xs.empty()) throw Error(ErrorKind::Parameter, "percentile of empty sample");
  if (p <= 0.0 || p > 100.0) throw Error(ErrorKind::Parameter, "percentile out of range");
  std::sort(xs.begin(), xs.end());
  size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(xs.size())));
  if (rank == 0) rank = 1;
  return xs[rank - 1];
}

ChiSquare chi_square_gof(const std::vector<long>& counts,
                         const std::vector<double>& expected) {
  if (counts.size() != expected.size() || counts.size() < 2) {
    throw Error(ErrorKind::Parameter, "chi-square needs >= 2 matching cells");
  }
  ChiSquare result;
  result.df = static_cast<long>(counts.size()) - 1;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (expected[i] <= 0.0) throw Error(ErrorKind::Parameter, "nonpositive expected count");
    double d = static_cast<double>(counts[i]) - expected[i];
    result.statistic += d * d / expected[i];
  }
  boost::math::chi_squared dist(static_cast<double>(result.df));
  result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
  return result;
}

ChiSquare chi_square_uniform(const std::vector<long>& counts) {
  long total = std::accumulate(counts.begin(), counts.end(), 0L);
  std::vector<double> expected(counts.size(),
                               static_cast<double>(total) / static_cast<double>(counts.size()));
  return chi_square_gof(counts, expected);
}

namespace {
std::vector<double> ranks(const std::vector<double>& xs) {
  size_t n = xs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average of 1-based ranks
    for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}
}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorKind::Parameter, "spearman needs >= 2 paired samples");
  }
  return pearson(ranks(xs), ranks(ys));
}

double binomial_stderr(double p_hat, long trials) {
  if (trials < 1) throw Error(ErrorKind::Parameter, "trials < 1");
  return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(trials));
}

}  // namespace keymux::stats
