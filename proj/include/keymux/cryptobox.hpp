// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Thin wrappers over OpenSSL EVP: RSA-OAEP, AES-256-GCM, HKDF, Ed25519,
// SHA-2/SHA-3/SHAKE. Everything the protocol needs from classical crypto
// lives behind this header so the rest of the code never touches OpenSSL.

#pragma once

#include <memory>
#include <string>

#include "keymux/common.hpp"

namespace keymux::cryptobox {

// ---------------------------------------------------------------------------
// RSA (classical per-fragment encryption and the envelope key-wrap)

class RsaPublicKey {
 public:
  RsaPublicKey() = default;
  static RsaPublicKey from_der(BytesView spki_der);
  Bytes to_der() const;

  // Largest plaintext OAEP-SHA256 accepts for this modulus.
  size_t max_plaintext() const;
  size_t modulus_bytes() const;

  // OAEP with SHA-256 and an optional label bound into the padding.
  Bytes encrypt_oaep(BytesView plaintext, BytesView label) const;

  bool valid() const { return pkey_ != nullptr; }

 private:
  friend class RsaPrivateKey;
  std::shared_ptr<void> pkey_;  // EVP_PKEY
};

class RsaPrivateKey {
 public:
  RsaPrivateKey() = default;
  static RsaPrivateKey generate(int modulus_bits = 2048);
  static RsaPrivateKey from_der(BytesView pkcs8_der);
  Bytes to_der() const;

  RsaPublicKey public_key() const;

  // Throws Error{Crypto} on padding/authentication failure.
  Bytes decrypt_oaep(BytesView ciphertext, BytesView label) const;

  bool valid() const { return pkey_ != nullptr; }

 private:
  std::shared_ptr<void> pkey_;  // EVP_PKEY
};

// ---------------------------------------------------------------------------
// AES-256-GCM

constexpr size_t kAeadKeyLen = 32;
constexpr size_t kAeadNonceLen = 12;
constexpr size_t kAeadTagLen = 16;

// ciphertext || tag
Bytes aead_seal(BytesView key, BytesView nonce, BytesView plaintext, BytesView aad);
// Throws Error{Crypto} if the tag does not verify.
Bytes aead_open(BytesView key, BytesView nonce, BytesView ciphertext, BytesView aad);

// Convenience form with a fresh random nonce; output is nonce || ciphertext || tag.
Bytes aead_seal_fresh(BytesView key, BytesView plaintext, BytesView aad);
Bytes aead_open_fresh(BytesView key, BytesView sealed, BytesView aad);

// ---------------------------------------------------------------------------
// Key derivation and hashing

Bytes hkdf_sha256(BytesView ikm, BytesView salt, BytesView info, size_t out_len);

Bytes sha256(BytesView data);
Bytes sha3_256(BytesView data);
Bytes sha3_512(BytesView data);
Bytes shake128(BytesView data, size_t out_len);
Bytes shake256(BytesView data, size_t out_len);

// ---------------------------------------------------------------------------
// Ed25519 (kiosk credential signing; deterministic by construction)

constexpr size_t kSignatureLen = 64;

class SigningKey {
 public:
  SigningKey() = default;
  static SigningKey generate();
  static SigningKey from_raw(BytesView seed32);
  Bytes to_raw() const;

  Bytes sign(BytesView message) const;
  class VerifyKey verify_key() const;

  bool valid() const { return pkey_ != nullptr; }

 private:
  std::shared_ptr<void> pkey_;
};

class VerifyKey {
 public:
  VerifyKey() = default;
  static VerifyKey from_raw(BytesView pub32);
  Bytes to_raw() const;

  bool verify(BytesView message, BytesView signature) const;

  bool valid() const { return pkey_ != nullptr; }

 private:
  friend class SigningKey;
  std::shared_ptr<void> pkey_;
};

// Constant-time byte comparison.
bool ct_equal(BytesView a, BytesView b);

}  // namespace keymux::cryptobox
