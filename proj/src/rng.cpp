// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/rng.hpp"

#include <openssl/rand.h>

#include <cmath>
#include <random>

namespace keymux {

void Rng::fill(uint8_t* out, size_t n) {
  size_t i = 0;
  while (i < n) {
    uint64_t v = next_u64();
    for (int b = 0; b < 8 && i < n; ++b, ++i) {
      out[i] = static_cast<uint8_t>(v >> (8 * b));
    }
  }
}

uint64_t Rng::below(uint64_t bound) {
  if (bound == 0) throw Error(ErrorKind::Parameter, "below(0)");
  // Rejection sampling over the largest multiple of bound.
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool Rng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01() < p;
}

double Rng::normal() {
  double u1, u2;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct SeededRng::State {
  std::mt19937_64 engine;
};

SeededRng::SeededRng(uint64_t seed) : state_(std::make_shared<State>()) {
  state_->engine.seed(seed);
}

uint64_t SeededRng::next_u64() { return state_->engine(); }

uint64_t SystemRng::next_u64() {
  uint64_t v;
  fill(reinterpret_cast<uint8_t*>(&v), sizeof(v));
  return v;
}

void SystemRng::fill(uint8_t* out, size_t n) {
  if (n == 0) return;
  if (RAND_bytes(out, static_cast<int>(n)) != 1) {
    throw Error(ErrorKind::Crypto, "OS randomness unavailable");
  }
}

uint64_t derive_seed(uint64_t master, uint64_t index) {
  // splitmix64 over master ^ golden-ratio-spread index
  uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace keymux
