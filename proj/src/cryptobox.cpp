// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/cryptobox.hpp"

#include <openssl/crypto.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include <cstring>

namespace keymux::cryptobox {

namespace {

[[noreturn]] void fail(const std::string& what) {
  unsigned long code = ERR_get_error();
  char buf[256] = {0};
  if (code != 0) ERR_error_string_n(code, buf, sizeof(buf));
  ERR_clear_error();
  throw Error(ErrorKind::Crypto, what + (code ? std::string(": ") + buf : ""));
}

std::shared_ptr<void> wrap_pkey(EVP_PKEY* p) {
  return std::shared_ptr<void>(p, [](void* q) { EVP_PKEY_free(static_cast<EVP_PKEY*>(q)); });
}

EVP_PKEY* as_pkey(const std::shared_ptr<void>& p) { return static_cast<EVP_PKEY*>(p.get()); }

using CtxPtr = std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

// OAEP label must be OPENSSL_malloc'd; ownership transfers on success.
void set_oaep(EVP_PKEY_CTX* ctx, BytesView label) {
  if (EVP_PKEY_CTX_set_rsa_padding(ctx, RSA_PKCS1_OAEP_PADDING) <= 0) fail("oaep padding");
  if (EVP_PKEY_CTX_set_rsa_oaep_md(ctx, EVP_sha256()) <= 0) fail("oaep md");
  if (EVP_PKEY_CTX_set_rsa_mgf1_md(ctx, EVP_sha256()) <= 0) fail("oaep mgf1");
  if (!label.empty()) {
    void* copy = OPENSSL_malloc(label.size());
    if (!copy) fail("label alloc");
    std::memcpy(copy, label.data(), label.size());
    if (EVP_PKEY_CTX_set0_rsa_oaep_label(ctx, copy, static_cast<int>(label.size())) <= 0) {
      OPENSSL_free(copy);
      fail("oaep label");
    }
  }
}

Bytes digest(const EVP_MD* md, BytesView data) {
  Bytes out(EVP_MD_get_size(md));
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) fail("digest");
  out.resize(len);
  return out;
}

Bytes xof(const EVP_MD* md, BytesView data, size_t out_len) {
  MdCtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1) {
    fail("xof init");
  }
  Bytes out(out_len);
  if (EVP_DigestFinalXOF(ctx.get(), out.data(), out.size()) != 1) fail("xof squeeze");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// RSA

RsaPublicKey RsaPublicKey::from_der(BytesView der) {
  const unsigned char* p = der.data();
  EVP_PKEY* pkey = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
  if (!pkey) fail("parse public key");
  if (EVP_PKEY_base_id(pkey) != EVP_PKEY_RSA) {
    EVP_PKEY_free(pkey);
    throw Error(ErrorKind::Parameter, "public key is not RSA");
  }
  RsaPublicKey key;
  key.pkey_ = wrap_pkey(pkey);
  return key;
}

Bytes RsaPublicKey::to_der() const {
  if (!valid()) throw Error(ErrorKind::State, "empty public key");
  unsigned char* buf = nullptr;
  int len = i2d_PUBKEY(as_pkey(pkey_), &buf);
  if (len <= 0) fail("encode public key");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

size_t RsaPublicKey::modulus_bytes() const {
  if (!valid()) throw Error(ErrorKind::State, "empty public key");
  return static_cast<size_t>(EVP_PKEY_get_size(as_pkey(pkey_)));
}

size_t RsaPublicKey::max_plaintext() const {
  // OAEP overhead: 2 * hash_len + 2
  return modulus_bytes() - 2 * 32 - 2;
}

Bytes RsaPublicKey::encrypt_oaep(BytesView plaintext, BytesView label) const {
  if (!valid()) throw Error(ErrorKind::State, "empty public key");
  if (plaintext.size() > max_plaintext()) {
    throw Error(ErrorKind::Parameter, "plaintext exceeds OAEP bound");
  }
  CtxPtr ctx(EVP_PKEY_CTX_new(as_pkey(pkey_), nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) <= 0) fail("encrypt init");
  set_oaep(ctx.get(), label);
  size_t out_len = 0;
  if (EVP_PKEY_encrypt(ctx.get(), nullptr, &out_len, plaintext.data(), plaintext.size()) <= 0) {
    fail("encrypt size");
  }
  Bytes out(out_len);
  if (EVP_PKEY_encrypt(ctx.get(), out.data(), &out_len, plaintext.data(), plaintext.size()) <= 0) {
    fail("encrypt");
  }
  out.resize(out_len);
  return out;
}

RsaPrivateKey RsaPrivateKey::generate(int modulus_bits) {
  CtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_RSA, nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), modulus_bits) <= 0) {
    fail("rsa keygen init");
  }
  EVP_PKEY* pkey = nullptr;
  if (EVP_PKEY_keygen(ctx.get(), &pkey) <= 0) fail("rsa keygen");
  RsaPrivateKey key;
  key.pkey_ = wrap_pkey(pkey);
  return key;
}

RsaPrivateKey RsaPrivateKey::from_der(BytesView der) {
  const unsigned char* p = der.data();
  EVP_PKEY* pkey = d2i_AutoPrivateKey(nullptr, &p, static_cast<long>(der.size()));
  if (!pkey) fail("parse private key");
  RsaPrivateKey key;
  key.pkey_ = wrap_pkey(pkey);
  return key;
}

Bytes RsaPrivateKey::to_der() const {
  if (!valid()) throw Error(ErrorKind::State, "empty private key");
  unsigned char* buf = nullptr;
  int len = i2d_PrivateKey(as_pkey(pkey_), &buf);
  if (len <= 0) fail("encode private key");
  Bytes out(buf, buf + len);
  OPENSSL_free(buf);
  return out;
}

RsaPublicKey RsaPrivateKey::public_key() const {
  if (!valid()) throw Error(ErrorKind::State, "empty private key");
  // Round-trip through SPKI to detach from the private half.
  unsigned char* buf = nullptr;
  int len = i2d_PUBKEY(as_pkey(pkey_), &buf);
  if (len <= 0) fail("extract public key");
  Bytes der(buf, buf + len);
  OPENSSL_free(buf);
  return RsaPublicKey::from_der(der);
}

Bytes RsaPrivateKey::decrypt_oaep(BytesView ciphertext, BytesView label) const {
  if (!valid()) throw Error(ErrorKind::State, "empty private key");
  CtxPtr ctx(EVP_PKEY_CTX_new(as_pkey(pkey_), nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) <= 0) fail("decrypt init");
  set_oaep(ctx.get(), label);
  size_t out_len = 0;
  if (EVP_PKEY_decrypt(ctx.get(), nullptr, &out_len, ciphertext.data(), ciphertext.size()) <= 0) {
    fail("decrypt size");
  }
  Bytes out(out_len);
  if (EVP_PKEY_decrypt(ctx.get(), out.data(), &out_len, ciphertext.data(), ciphertext.size()) <= 0) {
    fail("oaep decrypt");
  }
  out.resize(out_len);
  return out;
}

// ---------------------------------------------------------------------------
// AES-256-GCM

Bytes aead_seal(BytesView key, BytesView nonce, BytesView plaintext, BytesView aad) {
  if (key.size() != kAeadKeyLen || nonce.size() != kAeadNonceLen) {
    throw Error(ErrorKind::Parameter, "bad AEAD key/nonce length");
  }
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1) {
    fail("gcm init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("gcm aad");
  }
  Bytes out(plaintext.size() + kAeadTagLen);
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    fail("gcm encrypt");
  }
  int total = len;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1) fail("gcm final");
  total += len;
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagLen, out.data() + total) != 1) {
    fail("gcm tag");
  }
  out.resize(total + kAeadTagLen);
  return out;
}

Bytes aead_open(BytesView key, BytesView nonce, BytesView ciphertext, BytesView aad) {
  if (key.size() != kAeadKeyLen || nonce.size() != kAeadNonceLen) {
    throw Error(ErrorKind::Parameter, "bad AEAD key/nonce length");
  }
  if (ciphertext.size() < kAeadTagLen) throw Error(ErrorKind::Crypto, "AEAD ciphertext too short");
  size_t body_len = ciphertext.size() - kAeadTagLen;
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1) {
    fail("gcm init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("gcm aad");
  }
  Bytes out(body_len);
  if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(),
                        static_cast<int>(body_len)) != 1) {
    fail("gcm decrypt");
  }
  int total = len;
  Bytes tag(ciphertext.begin() + static_cast<long>(body_len), ciphertext.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagLen, tag.data()) != 1) {
    fail("gcm set tag");
  }
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + total, &len) != 1) {
    ERR_clear_error();
    throw Error(ErrorKind::Crypto, "AEAD authentication failed");
  }
  out.resize(total + len);
  return out;
}

Bytes aead_seal_fresh(BytesView key, BytesView plaintext, BytesView aad) {
  Bytes nonce(kAeadNonceLen);
  if (RAND_bytes(nonce.data(), static_cast<int>(nonce.size())) != 1) fail("nonce");
  Bytes sealed = aead_seal(key, nonce, plaintext, aad);
  Bytes out;
  out.reserve(nonce.size() + sealed.size());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), sealed.begin(), sealed.end());
  return out;
}

Bytes aead_open_fresh(BytesView key, BytesView sealed, BytesView aad) {
  if (sealed.size() < kAeadNonceLen + kAeadTagLen) {
    throw Error(ErrorKind::Crypto, "sealed blob too short");
  }
  return aead_open(key, sealed.subspan(0, kAeadNonceLen), sealed.subspan(kAeadNonceLen), aad);
}

// ---------------------------------------------------------------------------
// KDF and hashing

Bytes hkdf_sha256(BytesView ikm, BytesView salt, BytesView info, size_t out_len) {
  CtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(), static_cast<int>(ikm.size())) <= 0) {
    fail("hkdf init");
  }
  if (!salt.empty() &&
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(), static_cast<int>(salt.size())) <= 0) {
    fail("hkdf salt");
  }
  if (!info.empty() &&
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), info.data(), static_cast<int>(info.size())) <= 0) {
    fail("hkdf info");
  }
  Bytes out(out_len);
  size_t len = out_len;
  if (EVP_PKEY_derive(ctx.get(), out.data(), &len) <= 0) fail("hkdf derive");
  out.resize(len);
  return out;
}

Bytes sha256(BytesView data) { return digest(EVP_sha256(), data); }
Bytes sha3_256(BytesView data) { return digest(EVP_sha3_256(), data); }
Bytes sha3_512(BytesView data) { return digest(EVP_sha3_512(), data); }
Bytes shake128(BytesView data, size_t out_len) { return xof(EVP_shake128(), data, out_len); }
Bytes shake256(BytesView data, size_t out_len) { return xof(EVP_shake256(), data, out_len); }

// ---------------------------------------------------------------------------
// Ed25519

SigningKey SigningKey::generate() {
  CtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_ED25519, nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) <= 0) fail("ed25519 keygen init");
  EVP_PKEY* pkey = nullptr;
  if (EVP_PKEY_keygen(ctx.get(), &pkey) <= 0) fail("ed25519 keygen");
  SigningKey key;
  key.pkey_ = wrap_pkey(pkey);
  return key;
}

SigningKey SigningKey::from_raw(BytesView seed32) {
  EVP_PKEY* pkey =
      EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed32.data(), seed32.size());
  if (!pkey) fail("ed25519 raw private");
  SigningKey key;
  key.pkey_ = wrap_pkey(pkey);
  return key;
}

Bytes SigningKey::to_raw() const {
  if (!valid()) throw Error(ErrorKind::State, "empty signing key");
  size_t len = 0;
  if (EVP_PKEY_get_raw_private_key(as_pkey(pkey_), nullptr, &len) != 1) fail("raw private size");
  Bytes out(len);
  if (EVP_PKEY_get_raw_private_key(as_pkey(pkey_), out.data(), &len) != 1) fail("raw private");
  return out;
}

Bytes SigningKey::sign(BytesView message) const {
  if (!valid()) throw Error(ErrorKind::State, "empty signing key");
  MdCtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, as_pkey(pkey_)) != 1) {
    fail("sign init");
  }
  size_t len = 0;
  if (EVP_DigestSign(ctx.get(), nullptr, &len, message.data(), message.size()) != 1) {
    fail("sign size");
  }
  Bytes sig(len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1) {
    fail("sign");
  }
  sig.resize(len);
  return sig;
}

VerifyKey SigningKey::verify_key() const {
  if (!valid()) throw Error(ErrorKind::State, "empty signing key");
  size_t len = 0;
  if (EVP_PKEY_get_raw_public_key(as_pkey(pkey_), nullptr, &len) != 1) fail("raw public size");
  Bytes pub(len);
  if (EVP_PKEY_get_raw_public_key(as_pkey(pkey_), pub.data(), &len) != 1) fail("raw public");
  return VerifyKey::from_raw(pub);
}

VerifyKey VerifyKey::from_raw(BytesView pub32) {
  EVP_PKEY* pkey =
      EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub32.data(), pub32.size());
  if (!pkey) fail("ed25519 raw public");
  VerifyKey key;
  key.pkey_ = wrap_pkey(pkey);
  return key;
}

Bytes VerifyKey::to_raw() const {
  if (!valid()) throw Error(ErrorKind::State, "empty verify key");
  size_t len = 0;
  if (EVP_PKEY_get_raw_public_key(as_pkey(pkey_), nullptr, &len) != 1) fail("raw public size");
  Bytes out(len);
  if (EVP_PKEY_get_raw_public_key(as_pkey(pkey_), out.data(), &len) != 1) fail("raw public");
  return out;
}

bool VerifyKey::verify(BytesView message, BytesView signature) const {
  if (!valid()) throw Error(ErrorKind::State, "empty verify key");
  MdCtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, as_pkey(pkey_)) != 1) {
    fail("verify init");
  }
  int rc = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                            message.size());
  ERR_clear_error();
  return rc == 1;
}

bool ct_equal(BytesView a, BytesView b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace keymux::cryptobox
