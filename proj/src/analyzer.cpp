// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "keymux/proxy.hpp"
#include "keymux/rng.hpp"

namespace keymux::analyzer {

namespace {

/// Integer power by repeated multiplication: keeps exact binary values
/// (e.g. 0.5^8) exact, which std::pow does not guarantee.
double ipow(double x, uint64_t e) {
  double out = 1.0;
  while (e > 0) {
    if (e & 1) out *= x;
    x *= x;
    e >>= 1;
  }
  return out;
}

void check_dimensions(const CapacityVector& cap, const Allocation& alloc) {
  if (cap.c.size() != alloc.counts.size()) {
    throw Error(ErrorKind::Parameter, "capacity and allocation dimensions differ");
  }
  if (cap.c.empty()) throw Error(ErrorKind::Parameter, "empty capacity vector");
  for (double ci : cap.c) {
    if (!(ci >= 0.0 && ci <= 1.0)) {
      throw Error(ErrorKind::Parameter, "capacity outside [0,1]");
    }
  }
}

}  // namespace

uint64_t Allocation::total() const {
  return std::accumulate(counts.begin(), counts.end(), uint64_t{0});
}

double recovery_probability(const CapacityVector& cap, const Allocation& alloc) {
  check_dimensions(cap, alloc);
  double p = 1.0;
  for (size_t i = 0; i < cap.c.size(); ++i) {
    if (alloc.counts[i] == 0) continue;  // 0^0 := 1, and 1^n too
    p *= ipow(cap.c[i], alloc.counts[i]);
  }
  return p;
}

AdversaryOptimum adversary_optimum(double budget, const Allocation& alloc) {
  if (alloc.counts.empty()) throw Error(ErrorKind::Parameter, "empty allocation");
  const uint64_t n = alloc.total();
  if (n == 0) throw Error(ErrorKind::Parameter, "allocation carries no fragments");
  if (!(budget > 0.0)) throw Error(ErrorKind::Parameter, "budget must be positive");

  const size_t d = alloc.counts.size();
  AdversaryOptimum out;
  out.c_star.budget = budget;
  out.c_star.c.assign(d, 0.0);

  // Types with no fragments never deserve budget; types clamped to 1 leave
  // the active set and their unit of budget leaves the pool.
  std::vector<size_t> active;
  for (size_t i = 0; i < d; ++i) {
    if (alloc.counts[i] > 0) active.push_back(i);
  }
  double remaining = budget;
  for (;;) {
    if (active.empty()) break;
    if (remaining >= static_cast<double>(active.size())) {
      for (size_t i : active) out.c_star.c[i] = 1.0;
      active.clear();
      break;
    }
    uint64_t weight = 0;
    for (size_t i : active) weight += alloc.counts[i];
    bool clamped = false;
    std::vector<size_t> next;
    for (size_t i : active) {
      double share = remaining * static_cast<double>(alloc.counts[i]) /
                     static_cast<double>(weight);
      if (share > 1.0) {
        out.c_star.c[i] = 1.0;
        remaining -= 1.0;
        clamped = true;
      } else {
        next.push_back(i);
      }
    }
    if (!clamped) {
      for (size_t i : next) {
        out.c_star.c[i] = remaining * static_cast<double>(alloc.counts[i]) /
                          static_cast<double>(weight);
      }
      break;
    }
    active = std::move(next);
  }

  out.p_star = recovery_probability(out.c_star, alloc);
  return out;
}

Allocation minimax_allocation(uint64_t n, uint64_t d) {
  if (d == 0) throw Error(ErrorKind::Parameter, "diversity must be >= 1");
  if (d > n) {
    throw Error(ErrorKind::Parameter, "diversity exceeds fragment count");
  }
  Allocation alloc;
  alloc.counts.assign(d, n / d);
  for (uint64_t i = 0; i < n % d; ++i) alloc.counts[i] += 1;
  return alloc;
}

uint64_t required_diversity(double budget, uint64_t n, double epsilon) {
  if (!(budget > 0.0)) throw Error(ErrorKind::Parameter, "budget must be positive");
  if (n < 1) throw Error(ErrorKind::Parameter, "fragment count must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorKind::Parameter, "epsilon must lie in (0, 1]");
  }
  double target = budget * std::exp(-std::log(epsilon) / static_cast<double>(n));
  double jitter = 1e-9 * std::max(1.0, target);
  auto d = static_cast<uint64_t>(std::max(1.0, std::ceil(target - jitter)));
  while (ipow(budget / static_cast<double>(d), n) > epsilon * (1.0 + 1e-12)) ++d;
  return d;
}

double convex_cost_optimum(double budget, uint64_t d, uint64_t n, double k) {
  if (k < 1.0) throw Error(ErrorKind::Parameter, "cost exponent must be >= 1");
  if (d == 0 || n == 0) throw Error(ErrorKind::Parameter, "need d >= 1 and n >= 1");
  if (!(budget > 0.0)) throw Error(ErrorKind::Parameter, "budget must be positive");
  double ratio = budget / static_cast<double>(d);
  if (ratio >= 1.0) return 1.0;
  double exponent = static_cast<double>(n) / k;
  if (exponent == std::floor(exponent) && exponent <= 64.0) {
    return ipow(ratio, static_cast<uint64_t>(exponent));
  }
  return std::pow(ratio, exponent);
}

MonteCarloResult monte_carlo_recovery(const CapacityVector& cap, const Allocation& alloc,
                                      uint64_t trials, uint64_t seed) {
  check_dimensions(cap, alloc);
  if (trials < 1) throw Error(ErrorKind::Parameter, "trials must be >= 1");

  const size_t d = cap.c.size();
  // Compare raw 64-bit draws against precomputed thresholds; c on the
  // closed boundary stays exact (c=1 always hits, c=0 never does).
  constexpr uint64_t kAlways = std::numeric_limits<uint64_t>::max();
  std::vector<uint64_t> threshold(d);
  std::vector<int> certain(d);  // -1 never, 0 threshold, 1 always
  for (size_t i = 0; i < d; ++i) {
    if (cap.c[i] >= 1.0) {
      certain[i] = 1;
    } else if (cap.c[i] <= 0.0) {
      certain[i] = -1;
    } else {
      threshold[i] = static_cast<uint64_t>(
          static_cast<long double>(cap.c[i]) * static_cast<long double>(kAlways));
    }
  }

  SeededRng rng(seed);
  auto event = [&](size_t i) {
    if (certain[i] != 0) return certain[i] > 0;
    return rng.next_u64() < threshold[i];
  };

  uint64_t per_type_hits = 0;
  for (uint64_t t = 0; t < trials; ++t) {
    bool success = true;
    for (size_t i = 0; i < d; ++i) {
      if (alloc.counts[i] == 0) continue;
      if (!event(i)) {
        success = false;
        break;
      }
    }
    per_type_hits += success ? 1 : 0;
  }

  uint64_t fragment_hits = 0;
  for (uint64_t t = 0; t < trials; ++t) {
    bool success = true;
    for (size_t i = 0; i < d && success; ++i) {
      for (uint64_t f = 0; f < alloc.counts[i]; ++f) {
        if (!event(i)) {
          success = false;
          break;
        }
      }
    }
    fragment_hits += success ? 1 : 0;
  }

  MonteCarloResult result;
  result.trials = trials;
  result.per_type_estimate = static_cast<double>(per_type_hits) / static_cast<double>(trials);
  result.fragment_estimate = static_cast<double>(fragment_hits) / static_cast<double>(trials);
  result.per_type_stderr =
      stats::binomial_stderr(result.per_type_estimate, static_cast<long>(trials));
  result.fragment_stderr =
      stats::binomial_stderr(result.fragment_estimate, static_cast<long>(trials));
  return result;
}

double enumerated_per_type_probability(const CapacityVector& cap, const Allocation& alloc) {
  check_dimensions(cap, alloc);
  const size_t d = cap.c.size();
  if (d > 25) throw Error(ErrorKind::Parameter, "enumeration limited to d <= 25");
  double p = 0.0;
  for (uint64_t mask = 0; mask < (uint64_t{1} << d); ++mask) {
    double p_mask = 1.0;
    bool success = true;
    for (size_t i = 0; i < d; ++i) {
      bool compromised = (mask >> i) & 1;
      p_mask *= compromised ? cap.c[i] : 1.0 - cap.c[i];
      if (!compromised && alloc.counts[i] > 0) success = false;
    }
    if (success) p += p_mask;
  }
  return p;
}

namespace {

void check_pool(const PoolParams& p) {
  if (p.pool_size == 0) throw Error(ErrorKind::Parameter, "pool must be non-empty");
  if (p.surveilled > p.pool_size) {
    throw Error(ErrorKind::Parameter, "surveilled subset exceeds the pool");
  }
  if (!(p.q >= 0.0 && p.q < 1.0)) {
    throw Error(ErrorKind::Parameter, "forwarding probability must lie in [0, 1)");
  }
  if (p.h_max < 1) throw Error(ErrorKind::Parameter, "hop cap must be >= 1");
}

}  // namespace

double pool_trace_probability(const PoolParams& p, uint32_t h) {
  check_pool(p);
  if (h < 1) throw Error(ErrorKind::Parameter, "hop count must be >= 1");
  return ipow(static_cast<double>(p.surveilled) / p.pool_size, h);
}

double pool_full_path_probability(const PoolParams& p) {
  check_pool(p);
  double ratio = static_cast<double>(p.surveilled) / p.pool_size;
  double sum = 0.0;
  for (uint32_t k = 1; k < p.h_max; ++k) {
    sum += ipow(p.q, k - 1) * (1.0 - p.q) * ipow(ratio, k);
  }
  sum += ipow(p.q, p.h_max - 1) * ipow(ratio, p.h_max);
  return sum;
}

double pool_correlation_probability(const PoolParams& p) {
  check_pool(p);
  double ratio = static_cast<double>(p.surveilled) / p.pool_size;
  return ratio * ratio;
}

double expected_hops(double q, uint32_t h_max) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw Error(ErrorKind::Parameter, "forwarding probability must lie in [0, 1)");
  }
  if (h_max < 1) throw Error(ErrorKind::Parameter, "hop cap must be >= 1");
  if (q == 0.0) return 1.0;
  return (1.0 - ipow(q, h_max)) / (1.0 - q);
}

stats::ChiSquare exit_uniformity_test(const std::vector<size_t>& exit_indices,
                                      size_t pool_size) {
  if (pool_size == 0) throw Error(ErrorKind::Parameter, "pool must be non-empty");
  if (exit_indices.size() < 10 * pool_size) {
    throw Error(ErrorKind::Parameter, "need at least 10 samples per pool member");
  }
  std::vector<long> counts(pool_size, 0);
  for (size_t idx : exit_indices) {
    if (idx >= pool_size) throw Error(ErrorKind::Parameter, "exit index outside the pool");
    counts[idx] += 1;
  }
  return stats::chi_square_uniform(counts);
}

stats::ChiSquare exit_uniformity_test(const std::vector<std::string>& exit_ids,
                                      const std::vector<std::string>& pool_ids) {
  std::vector<size_t> indices;
  indices.reserve(exit_ids.size());
  for (const auto& id : exit_ids) {
    auto it = std::find(pool_ids.begin(), pool_ids.end(), id);
    if (it == pool_ids.end()) {
      throw Error(ErrorKind::Parameter, "exit id not in the pool: " + id);
    }
    indices.push_back(static_cast<size_t>(it - pool_ids.begin()));
  }
  return exit_uniformity_test(indices, pool_ids.size());
}

// -- PoolSimulator -----------------------------------------------------------

double PoolSimSummary::full_path_freq() const {
  return requests ? static_cast<double>(full_path_hits) / static_cast<double>(requests) : 0.0;
}

double PoolSimSummary::pair_freq() const {
  return pair_trials ? static_cast<double>(pair_hits) / static_cast<double>(pair_trials) : 0.0;
}

struct PoolSimulator::Impl : proxy::ProxyNetwork {
  PoolParams params;
  SeededRng rng;
  std::vector<std::string> ids;
  std::vector<proxy::PoolPeer> peers;
  std::vector<std::unique_ptr<proxy::ProxyCore>> cores;
  uint64_t next_tag = 0;

  // Captured at the exit node's upstream delivery.
  protocol::PoolPayload delivered;
  bool have_delivery = false;

  Impl(PoolParams p, uint64_t seed, bool exclude_self) : params(p), rng(seed) {
    check_pool(params);
    for (uint32_t i = 0; i < params.pool_size; ++i) {
      ids.push_back("pool-" + std::to_string(i));
      peers.push_back({ids.back(), {"pool-host", static_cast<int>(2000 + i)}});
    }
    for (uint32_t i = 0; i < params.pool_size; ++i) {
      proxy::ProxyConfig cfg;
      cfg.id = ids[i];
      cfg.own_channels.push_back(
          {"ch-" + ids[i], channels::MediumType::LogicalPort, "pool-host",
           static_cast<int>(3000 + i), {}, false});
      cfg.qkms = {"sim-upstream", 1};
      cfg.pool = peers;
      cfg.forward_probability = params.q;
      cfg.max_hops = params.h_max;
      cfg.exclude_self_in_draws = exclude_self;
      cores.push_back(std::make_unique<proxy::ProxyCore>(std::move(cfg), *this, rng));
    }
  }

  size_t index_of(const std::string& id) const {
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return i;
    }
    throw Error(ErrorKind::Protocol, "unknown proxy id in simulation: " + id);
  }

  protocol::Ack post_key_request(const protocol::Endpoint&, const protocol::Json& body) override {
    delivered = protocol::pool_payload_from_json(body);
    have_delivery = true;
    return {protocol::Ack::Status::Dispatched, "simulated"};
  }

  protocol::Ack post_pool_forward(const protocol::Endpoint& peer,
                                  const protocol::PoolPayload& payload) override {
    for (size_t i = 0; i < peers.size(); ++i) {
      if (peers[i].endpoint == peer) return cores[i]->handle_pool_forward(payload);
    }
    throw Error(ErrorKind::Protocol, "forward to an endpoint outside the pool");
  }

  void post_pool_return(const protocol::Endpoint&, const protocol::PoolReturn&) override {}
  void post_fragment(const protocol::Endpoint&, const keycore::EncryptedFragment&) override {}
  void post_session_failed(const protocol::Endpoint&, const std::string&,
                           const std::string&) override {}
};

PoolSimulator::PoolSimulator(PoolParams params, uint64_t seed, bool exclude_self)
    : impl_(std::make_unique<Impl>(params, seed, exclude_self)) {}

PoolSimulator::~PoolSimulator() = default;

const std::vector<std::string>& PoolSimulator::pool_ids() const { return impl_->ids; }

PoolObservation PoolSimulator::simulate_request() {
  Impl& im = *impl_;
  const proxy::PoolPeer& entry = proxy::select_entry(im.peers, im.rng);
  size_t entry_idx = im.index_of(entry.id);

  protocol::KeyRequest req;
  req.tagname = "sim-" + std::to_string(im.next_tag++);
  req.key_bits = 256;
  req.num_splits = 4;
  req.party_label = "sim";

  im.have_delivery = false;
  im.cores[entry_idx]->handle_client_request(req, {"sim-client", 1});
  if (!im.have_delivery) {
    throw Error(ErrorKind::Protocol, "simulated request was never delivered upstream");
  }

  PoolObservation obs;
  obs.entry = im.index_of(im.delivered.entry_id);
  obs.exit = im.index_of(im.delivered.path.back().proxy_id);
  obs.hops = im.delivered.hop_count;
  obs.fully_surveilled = true;
  for (const auto& step : im.delivered.path) {
    if (im.index_of(step.proxy_id) >= im.params.surveilled) {
      obs.fully_surveilled = false;
      break;
    }
  }
  obs.entry_exit_surveilled =
      obs.entry < im.params.surveilled && obs.exit < im.params.surveilled;

  // Keep the cores' instrumentation from accumulating across a long run.
  for (auto& core : im.cores) core->tap().clear();
  return obs;
}

PoolSimSummary PoolSimulator::run(uint64_t requests) {
  PoolSimSummary summary;
  summary.requests = requests;
  summary.exit_counts.assign(impl_->params.pool_size, 0);
  summary.entry_counts.assign(impl_->params.pool_size, 0);
  double sum_h = 0.0, sum_h2 = 0.0;
  for (uint64_t i = 0; i < requests; ++i) {
    PoolObservation obs = simulate_request();
    summary.exit_counts[obs.exit] += 1;
    summary.entry_counts[obs.entry] += 1;
    sum_h += obs.hops;
    sum_h2 += static_cast<double>(obs.hops) * obs.hops;
    if (obs.fully_surveilled) summary.full_path_hits += 1;
    if (obs.hops >= 2) {
      summary.pair_trials += 1;
      if (obs.entry_exit_surveilled) summary.pair_hits += 1;
    }
  }
  if (requests > 0) {
    summary.mean_hops = sum_h / static_cast<double>(requests);
    if (requests > 1) {
      double var = (sum_h2 - sum_h * sum_h / static_cast<double>(requests)) /
                   static_cast<double>(requests - 1);
      summary.hops_stddev = std::sqrt(std::max(0.0, var));
    }
  }
  return summary;
}

}  // namespace keymux::analyzer
