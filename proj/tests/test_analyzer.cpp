// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form capacity-model checks against hand-derived values, plus
// light cross-validation of the Monte-Carlo estimator against exhaustive
// enumeration.  The heavyweight statistical gates live in the acceptance
// binary.

#include <doctest.h>

#include <cmath>

#include "keymux/analyzer.hpp"
#include "keymux/rng.hpp"

using namespace keymux;
using namespace keymux::analyzer;

TEST_CASE("recovery probability is the capacity product") {
  // P = prod c_i^{n_i}; 0^0 = 1 by convention.
  CapacityVector cap{{0.5, 0.25}, 0.75};
  Allocation alloc{{2, 1}};
  CHECK(recovery_probability(cap, alloc) == doctest::Approx(0.0625).epsilon(1e-12));

  // Unused media contribute nothing even at capacity zero.
  CapacityVector with_zero{{0.5, 0.0}, 0.5};
  Allocation none_there{{3, 0}};
  CHECK(recovery_probability(with_zero, none_there) == doctest::Approx(0.125).epsilon(1e-12));

  // A zero-capacity medium that does carry fragments kills recovery.
  Allocation uses_it{{1, 1}};
  CHECK(recovery_probability(with_zero, uses_it) == doctest::Approx(0.0));

  // Full capacity everywhere recovers with certainty.
  CapacityVector all_one{{1.0, 1.0}, 2.0};
  CHECK(recovery_probability(all_one, Allocation{{4, 4}}) == doctest::Approx(1.0));

  // Exact binary arithmetic at n = 8: 0.5^8 has an exact double value.
  CapacityVector half{{0.5}, 0.5};
  CHECK(recovery_probability(half, Allocation{{8}}) == 0.00390625);
}

TEST_CASE("recovery probability rejects bad dimensions and ranges") {
  CHECK_THROWS_AS(recovery_probability({{0.5}, 1}, Allocation{{1, 2}}), Error);
  CHECK_THROWS_AS(recovery_probability({{1.5}, 2}, Allocation{{1}}), Error);
  CHECK_THROWS_AS(recovery_probability({{-0.1}, 1}, Allocation{{1}}), Error);
  CHECK_THROWS_AS(recovery_probability({{}, 0}, Allocation{{}}), Error);
}

TEST_CASE("adversary optimum: interior solution") {
  // B=1 against allocation (1,3): c* = (1/4, 3/4),
  // P* = 0.25 * 0.75^3 = 0.10546875.
  AdversaryOptimum opt = adversary_optimum(1.0, Allocation{{1, 3}});
  REQUIRE(opt.c_star.c.size() == 2);
  CHECK(opt.c_star.c[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(opt.c_star.c[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(opt.p_star == doctest::Approx(0.10546875).epsilon(1e-12));
}

TEST_CASE("adversary optimum: uniform allocation gives (B/d)^n") {
  AdversaryOptimum opt = adversary_optimum(2.0, Allocation{{2, 2, 2, 2}});
  for (double c : opt.c_star.c) CHECK(c == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(opt.p_star == doctest::Approx(0.00390625).epsilon(1e-12));  // 2^-8 exactly
  CHECK(opt.p_star == 0.00390625);
}

TEST_CASE("adversary optimum: clamping at the capacity ceiling") {
  // B=2 against (2,6): interior (0.5, 1.5) is infeasible; clamp c2 = 1,
  // re-solve with budget 1 over type 1 alone -> c = (1, 1), P* = 1.
  AdversaryOptimum opt = adversary_optimum(2.0, Allocation{{2, 6}});
  CHECK(opt.c_star.c[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(opt.c_star.c[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(opt.p_star == doctest::Approx(1.0).epsilon(1e-12));

  // Partial clamp: B=1.5 against (1,5): interior (0.25, 1.25) clamps type 2
  // to 1, leaving 0.5 for type 1 -> P* = 0.5 * 1 = 0.5.
  AdversaryOptimum part = adversary_optimum(1.5, Allocation{{1, 5}});
  CHECK(part.c_star.c[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(part.c_star.c[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(part.p_star == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("adversary optimum: zero-fragment types draw no budget") {
  AdversaryOptimum opt = adversary_optimum(1.0, Allocation{{0, 4}});
  CHECK(opt.c_star.c[0] == doctest::Approx(0.0));
  CHECK(opt.c_star.c[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(opt.p_star == doctest::Approx(1.0).epsilon(1e-12));  // all eggs, one basket

  // Budget covering every active type saturates them.
  AdversaryOptimum sat = adversary_optimum(5.0, Allocation{{3, 3}});
  CHECK(sat.p_star == doctest::Approx(1.0));

  CHECK_THROWS_AS(adversary_optimum(-0.1, Allocation{{1}}), Error);
  CHECK_THROWS_AS(adversary_optimum(0.0, Allocation{{1, 1}}), Error);
  CHECK_THROWS_AS(adversary_optimum(1.0, Allocation{{}}), Error);
  CHECK_THROWS_AS(adversary_optimum(1.0, Allocation{{0, 0}}), Error);
}

TEST_CASE("minimax allocation balances counts") {
  Allocation a = minimax_allocation(8, 4);
  CHECK(a.counts == std::vector<uint64_t>{2, 2, 2, 2});
  Allocation b = minimax_allocation(7, 3);  // 3,2,2: remainder to the front
  CHECK(b.counts == std::vector<uint64_t>{3, 2, 2});
  CHECK(minimax_allocation(5, 1).counts == std::vector<uint64_t>{5});
  CHECK(minimax_allocation(3, 3).counts == std::vector<uint64_t>{1, 1, 1});
  CHECK_THROWS_AS(minimax_allocation(2, 4), Error);  // d > n
  CHECK_THROWS_AS(minimax_allocation(2, 0), Error);

  // The balanced split beats the alternatives it must beat: at n=4, d=2,
  // B=1, the (2,2) split yields 0.0625 against 0.10546875 for (1,3) and
  // 1 for (0,4).
  double balanced = adversary_optimum(1.0, minimax_allocation(4, 2)).p_star;
  CHECK(balanced == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(balanced < adversary_optimum(1.0, Allocation{{1, 3}}).p_star);
  CHECK(balanced < adversary_optimum(1.0, Allocation{{0, 4}}).p_star);
}

TEST_CASE("required diversity reaches the epsilon target") {
  // (B/d)^n <= eps with B=1, n=8, eps=2^-16 needs exactly d = 4.
  CHECK(required_diversity(1.0, 8, std::pow(2.0, -16)) == 4);
  // One medium suffices when the budget is tiny.
  CHECK(required_diversity(0.01, 2, 0.01) == 1);
  // Verify the defining inequality and minimality on a sweep.
  for (double budget : {0.5, 1.0, 2.0, 3.0}) {
    for (uint64_t n : {1ull, 2ull, 4ull, 8ull}) {
      for (double eps : {0.1, 0.01, 1e-6}) {
        uint64_t d = required_diversity(budget, n, eps);
        CHECK(std::pow(budget / double(d), double(n)) <= eps * (1 + 1e-9));
        if (d > 1) {
          CHECK(std::pow(budget / double(d - 1), double(n)) > eps * (1 - 1e-9));
        }
      }
    }
  }
  CHECK_THROWS_AS(required_diversity(0.0, 4, 0.1), Error);
  CHECK_THROWS_AS(required_diversity(1.0, 0, 0.1), Error);
  CHECK_THROWS_AS(required_diversity(1.0, 4, 0.0), Error);
}

TEST_CASE("convex per-type costs shift the optimum") {
  // k=1 reduces to the linear model.
  CHECK(convex_cost_optimum(2.0, 4, 8, 1.0) == doctest::Approx(0.00390625).epsilon(1e-12));
  // Quadratic cost at the same point: (B/d)^{n/k} = 0.5^4.
  CHECK(convex_cost_optimum(2.0, 4, 8, 2.0) == doctest::Approx(0.0625).epsilon(1e-12));
  // Saturated budget caps at certainty.
  CHECK(convex_cost_optimum(4.0, 4, 8, 2.0) == doctest::Approx(1.0));
  CHECK(convex_cost_optimum(5.0, 4, 8, 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(convex_cost_optimum(1.0, 4, 8, 0.5), Error);  // k >= 1
}

TEST_CASE("enumeration matches the closed form where both apply") {
  // With all fragments on compromised-or-not whole types, the per-type
  // enumeration equals the fragment product exactly.
  CapacityVector cap{{0.3, 0.7, 0.5}, 1.5};
  Allocation alloc{{2, 1, 3}};
  double enumerated = enumerated_per_type_probability(cap, alloc);
  // Per-type: success iff every used type compromised = 0.3*0.7*0.5.
  CHECK(enumerated == doctest::Approx(0.3 * 0.7 * 0.5).epsilon(1e-12));

  // Unused types drop out of the per-type event.
  Allocation sparse{{2, 0, 1}};
  CHECK(enumerated_per_type_probability(cap, sparse) ==
        doctest::Approx(0.3 * 0.5).epsilon(1e-12));

  // Certainties and impossibilities are exact.
  CapacityVector certain{{1.0, 0.0}, 1.0};
  CHECK(enumerated_per_type_probability(certain, Allocation{{2, 0}}) == doctest::Approx(1.0));
  CHECK(enumerated_per_type_probability(certain, Allocation{{2, 1}}) == doctest::Approx(0.0));
}

TEST_CASE("monte carlo tracks both exact references") {
  CapacityVector cap{{0.6, 0.35}, 0.95};
  Allocation alloc{{3, 2}};
  const uint64_t trials = 200'000;
  MonteCarloResult mc = monte_carlo_recovery(cap, alloc, trials, 42);
  CHECK(mc.trials == trials);

  double exact_type = enumerated_per_type_probability(cap, alloc);  // 0.6*0.35
  double exact_frag = recovery_probability(cap, alloc);             // 0.6^3*0.35^2
  CHECK(std::abs(mc.per_type_estimate - exact_type) < 4 * mc.per_type_stderr + 1e-9);
  CHECK(std::abs(mc.fragment_estimate - exact_frag) < 4 * mc.fragment_stderr + 1e-9);
  // The fragment-level event is strictly rarer here.
  CHECK(mc.fragment_estimate < mc.per_type_estimate);

  // Seeded determinism.
  MonteCarloResult again = monte_carlo_recovery(cap, alloc, trials, 42);
  CHECK(again.per_type_estimate == mc.per_type_estimate);
  CHECK(again.fragment_estimate == mc.fragment_estimate);

  // Boundary capacities are exact, not sampled noise.
  MonteCarloResult ones = monte_carlo_recovery({{1.0, 1.0}, 2.0}, alloc, 10'000, 7);
  CHECK(ones.per_type_estimate == doctest::Approx(1.0));
  CHECK(ones.fragment_estimate == doctest::Approx(1.0));
  MonteCarloResult zero = monte_carlo_recovery({{0.0, 0.5}, 0.5}, alloc, 10'000, 7);
  CHECK(zero.per_type_estimate == doctest::Approx(0.0));
}

TEST_CASE("pool trace probabilities") {
  PoolParams p{10, 3, 0.5, 8};
  CHECK(pool_trace_probability(p, 1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pool_trace_probability(p, 3) == doctest::Approx(0.027).epsilon(1e-12));
  CHECK(pool_correlation_probability(p) == doctest::Approx(0.09).epsilon(1e-12));

  // Full-path probability composes the hop law with (a/P)^h.
  // h_max=2, q=0.5: P(h=1)=0.5 at 0.3, remainder 0.5 at 0.09.
  PoolParams p2{10, 3, 0.5, 2};
  CHECK(pool_full_path_probability(p2) ==
        doctest::Approx(0.5 * 0.3 + 0.5 * 0.09).epsilon(1e-12));
  // q=0 collapses to a single hop.
  PoolParams p0{10, 3, 0.0, 8};
  CHECK(pool_full_path_probability(p0) == doctest::Approx(0.3).epsilon(1e-12));

  CHECK_THROWS_AS(pool_trace_probability({0, 0, 0.5, 8}, 1), Error);
  CHECK_THROWS_AS(pool_trace_probability({10, 11, 0.5, 8}, 1), Error);  // a > P
}

TEST_CASE("expected hops of the truncated geometric law") {
  CHECK(expected_hops(0.0, 8) == doctest::Approx(1.0).epsilon(1e-12));
  // Long cap: E[h] -> 1/(1-q) = 2 for q = 1/2.
  CHECK(expected_hops(0.5, 64) == doctest::Approx(2.0).epsilon(1e-9));
  // Tight cap: h_max=2 gives 1*(1-q) + 2*q = 1 + q.
  CHECK(expected_hops(0.3, 2) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(expected_hops(0.5, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(expected_hops(1.0, 8), Error);
  CHECK_THROWS_AS(expected_hops(-0.1, 8), Error);
}

TEST_CASE("exit uniformity test demands enough samples") {
  std::vector<size_t> few{0, 1, 2};
  CHECK_THROWS_AS(exit_uniformity_test(few, 4), Error);  // < 10 per member

  SeededRng rng(3);
  std::vector<size_t> exits;
  for (int i = 0; i < 4000; ++i) exits.push_back(rng.below(4));
  stats::ChiSquare r = exit_uniformity_test(exits, 4);
  CHECK(r.df == 3);
  CHECK(r.p_value > 0.01);  // genuinely uniform draws

  // Heavily skewed exits are flagged.
  std::vector<size_t> skewed(4000, 0);
  for (int i = 0; i < 300; ++i) skewed[i] = i % 4;
  CHECK(exit_uniformity_test(skewed, 4).p_value < 1e-6);

  // The id-based overload agrees with the index form.
  std::vector<std::string> ids{"a", "b", "c", "d"};
  std::vector<std::string> exit_ids;
  for (size_t e : exits) exit_ids.push_back(ids[e]);
  stats::ChiSquare r2 = exit_uniformity_test(exit_ids, ids);
  CHECK(r2.statistic == doctest::Approx(r.statistic).epsilon(1e-12));
}

TEST_CASE("pool simulator smoke: statistics move with the parameters") {
  // Small but real: every request runs through actual proxy cores.
  PoolParams params{4, 2, 0.5, 4};
  PoolSimulator sim(params, 999);
  CHECK(sim.pool_ids().size() == 4);

  PoolSimSummary s = sim.run(3000);
  CHECK(s.requests == 3000);
  CHECK(s.exit_counts.size() == 4);
  long total_exits = 0;
  for (long c : s.exit_counts) total_exits += c;
  CHECK(total_exits == 3000);

  // Mean hops near the law (loose bound; the acceptance gate is strict).
  double expect = expected_hops(params.q, params.h_max);
  CHECK(std::abs(s.mean_hops - expect) < 0.15);

  // Entries are uniform draws; every node sees some.
  for (long c : s.entry_counts) CHECK(c > 0);

  // Full-path frequency close to the composed law.
  double predicted = pool_full_path_probability(params);
  CHECK(std::abs(s.full_path_freq() - predicted) < 0.1);

  // Pair statistics only cover multi-hop requests.
  CHECK(s.pair_trials <= s.requests);
  CHECK(s.pair_hits <= s.pair_trials);
}

TEST_CASE("pool simulator determinism under a fixed seed") {
  PoolParams params{5, 2, 0.4, 6};
  PoolSimulator a(params, 31), b(params, 31);
  for (int i = 0; i < 50; ++i) {
    PoolObservation oa = a.simulate_request();
    PoolObservation ob = b.simulate_request();
    CHECK(oa.entry == ob.entry);
    CHECK(oa.exit == ob.exit);
    CHECK(oa.hops == ob.hops);
    CHECK(oa.fully_surveilled == ob.fully_surveilled);
  }
}
