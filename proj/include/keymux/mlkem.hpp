// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// ML-KEM-768 (FIPS 203): module-lattice KEM at security category 3.
// Parameters k=3, eta1=eta2=2, du=10, dv=4 over R_q = Z_3329[X]/(X^256+1).
// Key generation and encapsulation take their coins from the caller's rng,
// so seeded runs are reproducible; the deterministic *_internal entry
// points exist for known-answer tests.

#pragma once

#include "keymux/kem.hpp"

namespace keymux::kem {

class MlKem768 final : public KemProvider {
 public:
  static constexpr size_t kEncapKeyLen = 1184;
  static constexpr size_t kDecapKeyLen = 2400;
  static constexpr size_t kCiphertextLen = 1088;
  static constexpr size_t kSeedLen = 32;

  std::string name() const override { return "ml-kem-768"; }
  size_t encap_key_len() const override { return kEncapKeyLen; }
  size_t ciphertext_len() const override { return kCiphertextLen; }

  KemKeyPair generate_keypair(Rng& rng) override;
  Encapsulation encapsulate(BytesView encap_key, Rng& rng) override;
  SecureBytes decapsulate(BytesView decap_key, BytesView ciphertext) override;

  /// Deterministic forms (KATs): d and z are 32-byte seeds, m the 32-byte
  /// encapsulation randomness.
  static KemKeyPair keygen_internal(BytesView d, BytesView z);
  static Encapsulation encaps_internal(BytesView encap_key, BytesView m);
};

}  // namespace keymux::kem
