// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/keycore.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace keymux::keycore {

namespace {

constexpr size_t kFragmentHeaderLen = 2 + 2 + 4;

Bytes tag_bytes(const std::string& tag) { return to_bytes(tag); }

}  // namespace

AsymmetricKeyPair AsymmetricKeyPair::generate(int modulus_bits) {
  auto priv = cryptobox::RsaPrivateKey::generate(modulus_bits);
  return AsymmetricKeyPair{priv.public_key().to_der(), priv.to_der()};
}

EncryptMode encrypt_mode_from_string(const std::string& s) {
  if (s == "direct" || s == "direct-asymmetric") return EncryptMode::DirectAsymmetric;
  if (s == "envelope") return EncryptMode::Envelope;
  throw Error(ErrorKind::Parameter, "unknown encryption mode: " + s);
}

std::string to_string(EncryptMode m) {
  return m == EncryptMode::DirectAsymmetric ? "direct-asymmetric" : "envelope";
}

Bytes serialize_fragment(const PlainFragment& frag) {
  Bytes out;
  out.reserve(kFragmentHeaderLen + frag.payload.size());
  put_u16_be(out, frag.index);
  put_u16_be(out, frag.total);
  put_u32_be(out, static_cast<uint32_t>(frag.payload.size()));
  out.insert(out.end(), frag.payload.begin(), frag.payload.end());
  return out;
}

PlainFragment deserialize_fragment(BytesView buf) {
  if (buf.size() < kFragmentHeaderLen) {
    throw Error(ErrorKind::Protocol, "fragment blob too short");
  }
  PlainFragment frag;
  frag.index = get_u16_be(buf, 0);
  frag.total = get_u16_be(buf, 2);
  uint32_t payload_len = get_u32_be(buf, 4);
  if (buf.size() != kFragmentHeaderLen + payload_len) {
    throw Error(ErrorKind::Protocol, "fragment payload length mismatch");
  }
  if (frag.total == 0 || frag.index >= frag.total) {
    throw Error(ErrorKind::Protocol, "fragment index out of range");
  }
  frag.payload.assign(buf.begin() + kFragmentHeaderLen, buf.end());
  return frag;
}

SessionKey generate_key(uint32_t bits, Rng& rng) {
  return generate_key(bits, rng, {128, 192, 256});
}

SessionKey generate_key(uint32_t bits, Rng& rng, const std::vector<uint32_t>& allowed_bits) {
  if (bits == 0 || bits % 8 != 0 ||
      std::find(allowed_bits.begin(), allowed_bits.end(), bits) == allowed_bits.end()) {
    throw Error(ErrorKind::Parameter, "unsupported key bit length: " + std::to_string(bits));
  }
  Bytes material(bits / 8);
  rng.fill(material);
  SessionKey key;
  key.bits = bits;
  key.material = SecureBytes(std::move(material));
  return key;
}

std::vector<PlainFragment> fragment_key(const SessionKey& key, uint16_t n) {
  const Bytes& material = key.material.bytes();
  if (n == 0 || n > material.size()) {
    throw Error(ErrorKind::Parameter,
                "split count must be in [1, key length]: n=" + std::to_string(n) +
                    ", key bytes=" + std::to_string(material.size()));
  }
  const size_t base = material.size() / n;
  const size_t extra = material.size() % n;  // first `extra` chunks get one more byte
  std::vector<PlainFragment> frags;
  frags.reserve(n);
  size_t offset = 0;
  for (uint16_t i = 0; i < n; ++i) {
    size_t len = base + (i < extra ? 1 : 0);
    PlainFragment frag;
    frag.index = i;
    frag.total = n;
    frag.payload.assign(material.begin() + static_cast<long>(offset),
                        material.begin() + static_cast<long>(offset + len));
    offset += len;
    frags.push_back(std::move(frag));
  }
  return frags;
}

std::vector<PlainFragment> shuffle_fragments(std::vector<PlainFragment> frags, Rng& rng) {
  if (frags.empty()) throw Error(ErrorKind::Parameter, "nothing to shuffle");
  // Fisher-Yates, high to low.
  for (size_t i = frags.size() - 1; i > 0; --i) {
    size_t j = static_cast<size_t>(rng.below(static_cast<uint64_t>(i) + 1));
    std::swap(frags[i], frags[j]);
  }
  return frags;
}

SessionKey reconstruct_key(const std::vector<PlainFragment>& frags) {
  if (frags.empty()) throw Error(ErrorKind::Parameter, "empty fragment set");
  const uint16_t total = frags.front().total;
  for (const auto& f : frags) {
    if (f.total != total) {
      throw Error(ErrorKind::Protocol, "fragments disagree on total count");
    }
  }
  std::map<uint16_t, const PlainFragment*> by_index;
  for (const auto& f : frags) {
    auto [it, inserted] = by_index.emplace(f.index, &f);
    if (!inserted && it->second->payload != f.payload) {
      throw Error(ErrorKind::Protocol,
                  "conflicting duplicate for fragment index " + std::to_string(f.index));
    }
  }
  if (by_index.size() != total) {
    std::ostringstream missing;
    for (uint16_t i = 0; i < total; ++i) {
      if (!by_index.count(i)) missing << (missing.tellp() > 0 ? "," : "") << i;
    }
    throw Error(ErrorKind::Protocol, "incomplete fragment set; missing indices: " + missing.str());
  }
  Bytes material;
  for (auto& [index, frag] : by_index) {
    material.insert(material.end(), frag->payload.begin(), frag->payload.end());
  }
  SessionKey key;
  key.bits = static_cast<uint32_t>(material.size() * 8);
  key.material = SecureBytes(std::move(material));
  return key;
}

// ---------------------------------------------------------------------------
// Encryption.  Ciphertext layout, first byte selects the mode:
//   0x01 | rsa_oaep(serialized fragment, label = session_tag)
//   0x02 | u16 wrapped_len | rsa_oaep(data_key, label = tag) | nonce | ct | gcm_tag
// Envelope AEAD uses the session tag as associated data, binding the
// fragment to its session on both layers.

FragmentEncryptor::FragmentEncryptor(cryptobox::RsaPublicKey recipient, std::string session_tag,
                                     EncryptMode mode)
    : recipient_(std::move(recipient)), tag_(std::move(session_tag)), mode_(mode) {
  if (mode_ == EncryptMode::Envelope) {
    Bytes key(cryptobox::kAeadKeyLen);
    SystemRng rng;
    rng.fill(key);
    wrapped_key_ = recipient_.encrypt_oaep(key, tag_bytes(tag_));
    data_key_ = SecureBytes(std::move(key));
  }
}

EncryptedFragment FragmentEncryptor::encrypt(const PlainFragment& frag) const {
  Bytes plain = serialize_fragment(frag);
  Bytes ct;
  if (mode_ == EncryptMode::DirectAsymmetric) {
    if (plain.size() > recipient_.max_plaintext()) {
      throw Error(ErrorKind::Mode,
                  "fragment too large for direct asymmetric encryption (" +
                      std::to_string(plain.size()) + " > " +
                      std::to_string(recipient_.max_plaintext()) + " bytes); use envelope mode");
    }
    ct.push_back(static_cast<uint8_t>(EncryptMode::DirectAsymmetric));
    Bytes sealed = recipient_.encrypt_oaep(plain, tag_bytes(tag_));
    ct.insert(ct.end(), sealed.begin(), sealed.end());
  } else {
    ct.push_back(static_cast<uint8_t>(EncryptMode::Envelope));
    put_u16_be(ct, static_cast<uint16_t>(wrapped_key_.size()));
    ct.insert(ct.end(), wrapped_key_.begin(), wrapped_key_.end());
    Bytes sealed = cryptobox::aead_seal_fresh(data_key_.view(), plain, tag_bytes(tag_));
    ct.insert(ct.end(), sealed.begin(), sealed.end());
  }
  EncryptedFragment ef;
  ef.session_tag = tag_;
  ef.ciphertext = std::move(ct);
  return ef;
}

FragmentDecryptor::FragmentDecryptor(cryptobox::RsaPrivateKey private_key)
    : key_(std::move(private_key)) {}

PlainFragment FragmentDecryptor::decrypt(const EncryptedFragment& ef) {
  if (ef.ciphertext.empty()) throw Error(ErrorKind::Crypto, "empty fragment ciphertext");
  const uint8_t mode = ef.ciphertext[0];
  BytesView body(ef.ciphertext.data() + 1, ef.ciphertext.size() - 1);
  if (mode == static_cast<uint8_t>(EncryptMode::DirectAsymmetric)) {
    ++asymmetric_ops_;
    Bytes plain = key_.decrypt_oaep(body, tag_bytes(ef.session_tag));
    return deserialize_fragment(plain);
  }
  if (mode == static_cast<uint8_t>(EncryptMode::Envelope)) {
    if (body.size() < 2) throw Error(ErrorKind::Crypto, "truncated envelope fragment");
    uint16_t wrapped_len = get_u16_be(body, 0);
    if (body.size() < 2u + wrapped_len) {
      throw Error(ErrorKind::Crypto, "truncated envelope key wrap");
    }
    Bytes wrapped(body.begin() + 2, body.begin() + 2 + wrapped_len);
    auto it = unwrap_cache_.find(wrapped);
    if (it == unwrap_cache_.end()) {
      ++asymmetric_ops_;
      Bytes data_key = key_.decrypt_oaep(wrapped, tag_bytes(ef.session_tag));
      if (data_key.size() != cryptobox::kAeadKeyLen) {
        throw Error(ErrorKind::Crypto, "unwrapped data key has wrong length");
      }
      it = unwrap_cache_.emplace(std::move(wrapped), SecureBytes(std::move(data_key))).first;
    }
    Bytes plain = cryptobox::aead_open_fresh(it->second.view(), body.subspan(2u + wrapped_len),
                                             tag_bytes(ef.session_tag));
    return deserialize_fragment(plain);
  }
  throw Error(ErrorKind::Crypto, "unknown fragment encryption mode byte");
}

EncryptedFragment encrypt_fragment(const PlainFragment& frag,
                                   const cryptobox::RsaPublicKey& recipient,
                                   const std::string& session_tag, EncryptMode mode) {
  FragmentEncryptor enc(recipient, session_tag, mode);
  return enc.encrypt(frag);
}

PlainFragment decrypt_fragment(const EncryptedFragment& ef,
                               const cryptobox::RsaPrivateKey& private_key) {
  FragmentDecryptor dec(private_key);
  return dec.decrypt(ef);
}

}  // namespace keymux::keycore
