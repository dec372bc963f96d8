// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cryptographic core: session-key generation, (n,n) fragmentation, shuffle,
// per-fragment encryption, and exact reconstruction.  Shared by the key
// server, the proxy, and the client.
//
// The scheme is all-or-nothing by construction: a session key is cut into n
// contiguous chunks and every chunk is required to rebuild it.  Fragment
// position (index, total) travels inside the ciphertext, so the wire form
// leaks nothing but an opaque session tag.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "keymux/common.hpp"
#include "keymux/cryptobox.hpp"
#include "keymux/rng.hpp"

namespace keymux::keycore {

// -- Domain types -----------------------------------------------------------

/// Symmetric session key of `bits` length (bits/8 bytes of material).
struct SessionKey {
  uint32_t bits = 0;
  SecureBytes material;

  bool operator==(const SessionKey& other) const {
    return bits == other.bits && material.bytes() == other.material.bytes();
  }
};

/// One plaintext chunk of a fragmented key.
struct PlainFragment {
  uint16_t index = 0;  // position in [0, total)
  uint16_t total = 0;  // n, number of fragments in the set
  Bytes payload;

  bool operator==(const PlainFragment&) const = default;
};

/// The wire unit: session tag (the only plaintext metadata) plus an opaque
/// ciphertext carrying (index, total, payload).  channel_id is assigned at
/// dispatch time and is empty until then.
struct EncryptedFragment {
  std::string session_tag;
  Bytes ciphertext;
  std::string channel_id;
};

/// DER-encoded classical key pair (RSA-2048, OAEP-SHA256 on the wire).
struct AsymmetricKeyPair {
  Bytes public_der;
  Bytes private_der;

  static AsymmetricKeyPair generate(int modulus_bits = 2048);
};

/// Fragment encryption mode.  Direct is a single asymmetric encryption of
/// the serialized fragment; envelope wraps a symmetric data key once and
/// seals each fragment under it with an AEAD.
enum class EncryptMode : uint8_t {
  DirectAsymmetric = 0x01,
  Envelope = 0x02,
};

EncryptMode encrypt_mode_from_string(const std::string& s);
std::string to_string(EncryptMode m);

// -- Serialization ----------------------------------------------------------

/// Fragment plaintext layout, big-endian: index u16 | total u16 |
/// payload_len u32 | payload bytes.
Bytes serialize_fragment(const PlainFragment& frag);
PlainFragment deserialize_fragment(BytesView buf);

// -- Operations --------------------------------------------------------------

/// Uniform random session key.  `bits` must be in the accepted set
/// (default {128, 192, 256}) and a multiple of 8.
SessionKey generate_key(uint32_t bits, Rng& rng);
SessionKey generate_key(uint32_t bits, Rng& rng, const std::vector<uint32_t>& allowed_bits);

/// Split into n contiguous chunks with sizes differing by at most one byte;
/// the first (len mod n) chunks carry the extra byte.  Requires
/// 1 <= n <= key length in bytes (fragments are never empty).
std::vector<PlainFragment> fragment_key(const SessionKey& key, uint16_t n);

/// Uniform random permutation (Fisher-Yates).  Contents untouched.
std::vector<PlainFragment> shuffle_fragments(std::vector<PlainFragment> frags, Rng& rng);

/// Rebuild the key from a complete, unordered fragment set.  Fails loudly on
/// missing indices, conflicting duplicates, or mixed totals.
SessionKey reconstruct_key(const std::vector<PlainFragment>& frags);

// -- Fragment encryption ------------------------------------------------------

/// Per-recipient fragment sealer.  In envelope mode a single data key is
/// generated at construction, wrapped once under the recipient public key,
/// and reused for every fragment of the dispatch; decryptors unwrap it once
/// and cache it.  Direct mode performs one asymmetric operation per
/// fragment.
class FragmentEncryptor {
 public:
  FragmentEncryptor(cryptobox::RsaPublicKey recipient, std::string session_tag, EncryptMode mode);

  EncryptedFragment encrypt(const PlainFragment& frag) const;

  EncryptMode mode() const { return mode_; }
  const std::string& session_tag() const { return tag_; }

 private:
  cryptobox::RsaPublicKey recipient_;
  std::string tag_;
  EncryptMode mode_;
  SecureBytes data_key_;   // envelope mode only
  Bytes wrapped_key_;      // envelope mode only
};

/// Per-recipient fragment opener with an unwrap cache keyed by the wrapped
/// data key, so an envelope dispatch costs one asymmetric operation total.
class FragmentDecryptor {
 public:
  explicit FragmentDecryptor(cryptobox::RsaPrivateKey private_key);

  PlainFragment decrypt(const EncryptedFragment& ef);

  /// Number of asymmetric private-key operations performed so far.
  uint64_t asymmetric_ops() const { return asymmetric_ops_; }

 private:
  cryptobox::RsaPrivateKey key_;
  std::map<Bytes, SecureBytes> unwrap_cache_;
  uint64_t asymmetric_ops_ = 0;
};

/// One-shot convenience forms.  encrypt_fragment uses a fresh data key per
/// call in envelope mode; bulk dispatch paths should hold a
/// FragmentEncryptor instead.
EncryptedFragment encrypt_fragment(const PlainFragment& frag,
                                   const cryptobox::RsaPublicKey& recipient,
                                   const std::string& session_tag, EncryptMode mode);
PlainFragment decrypt_fragment(const EncryptedFragment& ef,
                               const cryptobox::RsaPrivateKey& private_key);

}  // namespace keymux::keycore
