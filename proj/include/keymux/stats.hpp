// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small statistics helpers used by the analyzer and the bench harness.

#pragma once

#include <cstdint>
#include <vector>

namespace keymux::stats {

double mean(const std::vector<double>& xs);
double stddev(const std::vector<double>& xs);  // sample (n-1) form
double median(std::vector<double> xs);

// Nearest-rank percentile: value at index ceil(p/100 * n), 1-based.
// p in (0, 100]. Stated so results are reproducible across implementations.
double percentile_nearest_rank(std::vector<double> xs, double p);

struct ChiSquare {
  double statistic = 0.0;
  long df = 0;
  double p_value = 1.0;
};

// Goodness-of-fit of observed counts against a uniform distribution over
// the cells. Requires every expected cell count to be positive.
ChiSquare chi_square_uniform(const std::vector<long>& counts);

// Goodness-of-fit against arbitrary expected counts (same total).
ChiSquare chi_square_gof(const std::vector<long>& counts,
                         const std::vector<double>& expected);

// Spearman rank correlation over paired observations. Ties get average ranks.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// Standard error of a binomial proportion estimate.
double binomial_stderr(double p_hat, long trials);

}  // namespace keymux::stats
