// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pluggable KEM surface for the post-quantum wire tunnel.  Two providers
// ship: a deterministic stub for fast protocol tests, and the standardized
// lattice KEM (ML-KEM-768) for real runs.  Both peers derive the identical
// 32-byte shared secret from one encapsulation.

#pragma once

#include <memory>
#include <string>

#include "keymux/common.hpp"
#include "keymux/rng.hpp"

namespace keymux::kem {

struct KemKeyPair {
  Bytes encap_key;        // public
  SecureBytes decap_key;  // private
};

struct Encapsulation {
  Bytes ciphertext;
  SecureBytes shared_secret;
};

class KemProvider {
 public:
  virtual ~KemProvider() = default;

  virtual std::string name() const = 0;
  virtual size_t encap_key_len() const = 0;
  virtual size_t ciphertext_len() const = 0;
  size_t shared_secret_len() const { return 32; }

  virtual KemKeyPair generate_keypair(Rng& rng) = 0;
  virtual Encapsulation encapsulate(BytesView encap_key, Rng& rng) = 0;
  virtual SecureBytes decapsulate(BytesView decap_key, BytesView ciphertext) = 0;
};

/// Deterministic test stub: not secure, but shaped like a KEM and
/// bit-reproducible under a seeded rng.
class StubKem final : public KemProvider {
 public:
  std::string name() const override { return "stub"; }
  size_t encap_key_len() const override { return 32; }
  size_t ciphertext_len() const override { return 32; }

  KemKeyPair generate_keypair(Rng& rng) override;
  Encapsulation encapsulate(BytesView encap_key, Rng& rng) override;
  SecureBytes decapsulate(BytesView decap_key, BytesView ciphertext) override;
};

/// Provider registry; names: "stub", "ml-kem-768".
std::unique_ptr<KemProvider> make_kem(const std::string& name);

}  // namespace keymux::kem
