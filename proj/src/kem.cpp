// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/kem.hpp"

#include "keymux/cryptobox.hpp"
#include "keymux/mlkem.hpp"

namespace keymux::kem {

namespace {

Bytes concat(BytesView a, BytesView b) {
  Bytes out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

KemKeyPair StubKem::generate_keypair(Rng& rng) {
  Bytes dk(32);
  rng.fill(dk);
  KemKeyPair kp;
  kp.encap_key = cryptobox::sha3_256(dk);
  kp.decap_key = SecureBytes(std::move(dk));
  return kp;
}

Encapsulation StubKem::encapsulate(BytesView encap_key, Rng& rng) {
  if (encap_key.size() != 32) {
    throw Error(ErrorKind::Parameter, "stub KEM expects a 32-byte encapsulation key");
  }
  Bytes m(32);
  rng.fill(m);
  Bytes pad = cryptobox::shake256(encap_key, 32);
  Encapsulation out;
  out.ciphertext.resize(32);
  for (int i = 0; i < 32; ++i) out.ciphertext[i] = m[i] ^ pad[i];
  out.shared_secret = SecureBytes(cryptobox::sha3_256(concat(m, encap_key)));
  return out;
}

SecureBytes StubKem::decapsulate(BytesView decap_key, BytesView ciphertext) {
  if (decap_key.size() != 32 || ciphertext.size() != 32) {
    throw Error(ErrorKind::Parameter, "stub KEM expects 32-byte key and ciphertext");
  }
  Bytes ek = cryptobox::sha3_256(decap_key);
  Bytes pad = cryptobox::shake256(ek, 32);
  Bytes m(32);
  for (int i = 0; i < 32; ++i) m[i] = ciphertext[i] ^ pad[i];
  return SecureBytes(cryptobox::sha3_256(concat(m, ek)));
}

std::unique_ptr<KemProvider> make_kem(const std::string& name) {
  if (name == "stub") return std::make_unique<StubKem>();
  if (name == "ml-kem-768") return std::make_unique<MlKem768>();
  throw Error(ErrorKind::Parameter, "unknown KEM provider: " + name);
}

}  // namespace keymux::kem
