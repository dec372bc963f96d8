// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Capacity-model and pool-anonymity analysis: closed forms for the
// adversary's recovery probability under a surveillance budget, the
// defender's balanced-allocation response, and the routing-pool trace
// bounds — plus Monte-Carlo estimators and a protocol-level pool simulator
// that drives the real proxy routing code.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "keymux/stats.hpp"

namespace keymux::analyzer {

/// Per-medium-type compromise capacities c_i in [0,1] under a total budget.
struct CapacityVector {
  std::vector<double> c;
  double budget = 0.0;
};

/// Fragments-per-medium-type assignment; counts[i] fragments of type i.
struct Allocation {
  std::vector<uint64_t> counts;

  uint64_t total() const;
  size_t types() const { return counts.size(); }
};

/// Routing-pool shape: P proxies, a of them surveilled, per-hop forwarding
/// probability q, hop cap h_max.
struct PoolParams {
  uint32_t pool_size = 0;
  uint32_t surveilled = 0;
  double q = 0.0;
  uint32_t h_max = 1;
};

/// Probability that an adversary holding capacities `c` recovers the key:
/// the product of c_i^{n_i} with 0^0 := 1.
double recovery_probability(const CapacityVector& cap, const Allocation& alloc);

struct AdversaryOptimum {
  CapacityVector c_star;
  double p_star = 0.0;
};

/// Best capacity split for a budget-B adversary against a fixed allocation:
/// interior solution c_i = B n_i / n, iteratively clamping any c_i that
/// would exceed 1 and re-solving over the remaining budget.
AdversaryOptimum adversary_optimum(double budget, const Allocation& alloc);

/// Balanced integer allocation of n fragments over d medium types — the
/// defender's minimax choice.  Requires d <= n.
Allocation minimax_allocation(uint64_t n, uint64_t d);

/// Smallest integer diversity d with (B/d)^n <= epsilon.
uint64_t required_diversity(double budget, uint64_t n, double epsilon);

/// Adversary optimum under per-type cost c^k (k >= 1), uniform allocation:
/// (B/d)^{n/k}, capped at 1.
double convex_cost_optimum(double budget, uint64_t d, uint64_t n, double k);

/// Monte-Carlo estimate of the recovery probability under both event
/// granularities: the per-type model (success iff every fragment-bearing
/// type is compromised) and the per-fragment model (every fragment
/// individually intercepted, matching the closed-form product).
struct MonteCarloResult {
  double per_type_estimate = 0.0;
  double per_type_stderr = 0.0;
  double fragment_estimate = 0.0;
  double fragment_stderr = 0.0;
  uint64_t trials = 0;
};

MonteCarloResult monte_carlo_recovery(const CapacityVector& cap, const Allocation& alloc,
                                      uint64_t trials, uint64_t seed);

/// Exact per-type success probability by enumerating all 2^d compromise
/// outcomes (the brute-force cross-check for the Monte-Carlo estimator).
double enumerated_per_type_probability(const CapacityVector& cap, const Allocation& alloc);

/// Probability that every proxy on an h-hop path lies in the surveilled
/// subset: (a/P)^h.
double pool_trace_probability(const PoolParams& p, uint32_t h);

/// Same, averaged over the truncated-geometric hop law.
double pool_full_path_probability(const PoolParams& p);

/// Probability that entry and exit both lie in the surveilled subset when
/// they are independent uniform draws: (a/P)^2.
double pool_correlation_probability(const PoolParams& p);

/// Exact mean hop count of the truncated geometric law
/// P(h=k) = q^{k-1}(1-q) for k < h_max, remainder at h_max.
double expected_hops(double q, uint32_t h_max);

/// Chi-square goodness-of-fit of observed exits against uniform over the
/// pool.  Requires at least 10 samples per pool member.
stats::ChiSquare exit_uniformity_test(const std::vector<size_t>& exit_indices, size_t pool_size);
stats::ChiSquare exit_uniformity_test(const std::vector<std::string>& exit_ids,
                                      const std::vector<std::string>& pool_ids);

// -- Protocol-level pool simulation ------------------------------------------

/// One simulated request as seen by an adversary surveilling the first
/// `surveilled` pool members.
struct PoolObservation {
  size_t entry = 0;
  size_t exit = 0;
  uint32_t hops = 1;
  bool fully_surveilled = false;      // every visited proxy surveilled
  bool entry_exit_surveilled = false;
};

struct PoolSimSummary {
  uint64_t requests = 0;
  std::vector<long> exit_counts;
  std::vector<long> entry_counts;
  double mean_hops = 0.0;
  double hops_stddev = 0.0;
  uint64_t full_path_hits = 0;
  uint64_t pair_trials = 0;  // requests with h >= 2
  uint64_t pair_hits = 0;    // ... whose entry and exit are both surveilled

  double full_path_freq() const;
  double pair_freq() const;
};

/// Runs key requests through real ProxyCore instances wired to an
/// in-process network, so the measured routing statistics come from the
/// deployed decision code rather than a re-derivation of the math.
class PoolSimulator {
 public:
  PoolSimulator(PoolParams params, uint64_t seed, bool exclude_self = false);
  ~PoolSimulator();

  PoolObservation simulate_request();
  PoolSimSummary run(uint64_t requests);

  const std::vector<std::string>& pool_ids() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace keymux::analyzer
