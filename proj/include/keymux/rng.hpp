// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seedable randomness source. Every randomized operation in the protocol
// takes an Rng& so that a fixed seed makes it bit-reproducible; production
// paths plug in SystemRng, which draws from the OS CSPRNG.

#pragma once

#include <cstdint>
#include <memory>

#include "keymux/common.hpp"

namespace keymux {

class Rng {
 public:
  virtual ~Rng() = default;
  virtual uint64_t next_u64() = 0;

  virtual void fill(uint8_t* out, size_t n);
  void fill(Bytes& out) { fill(out.data(), out.size()); }

  // Unbiased integer in [0, bound); bound > 0.
  uint64_t below(uint64_t bound);

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform01();

  bool bernoulli(double p);

  // Standard normal via Box-Muller (stable across platforms).
  double normal();
};

class SeededRng final : public Rng {
 public:
  explicit SeededRng(uint64_t seed);
  uint64_t next_u64() override;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

class SystemRng final : public Rng {
 public:
  using Rng::fill;
  uint64_t next_u64() override;
  void fill(uint8_t* out, size_t n) override;
};

// Stream-splitting: derives an independent child seed from a master seed,
// so partitioned Monte-Carlo blocks get decorrelated streams.
uint64_t derive_seed(uint64_t master, uint64_t index);

}  // namespace keymux
