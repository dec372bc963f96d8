// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/tunnel.hpp"

#include "keymux/cryptobox.hpp"

namespace keymux::tunnel {

namespace {

const std::string kSalt = "keymux/tunnel/v1";

SecureBytes derive(BytesView ss, const std::string& info) {
  return SecureBytes(
      cryptobox::hkdf_sha256(ss, to_bytes(kSalt), to_bytes(info), cryptobox::kAeadKeyLen));
}

}  // namespace

SecureBytes derive_request_key(BytesView shared_secret, const std::string& handshake_id) {
  return derive(shared_secret, "request|" + handshake_id);
}

SecureBytes derive_fragment_key(BytesView shared_secret, const std::string& tagname) {
  return derive(shared_secret, "fragments|" + tagname);
}

Bytes seal(BytesView key, BytesView plaintext, const std::string& context) {
  return cryptobox::aead_seal_fresh(key, plaintext, to_bytes(context));
}

Bytes open(BytesView key, BytesView sealed, const std::string& context) {
  return cryptobox::aead_open_fresh(key, sealed, to_bytes(context));
}

Bytes wrap_fragment(BytesView fragment_key, BytesView inner_ciphertext, const std::string& tag) {
  Bytes out;
  out.push_back(kTunnelLayerByte);
  Bytes sealed = cryptobox::aead_seal_fresh(fragment_key, inner_ciphertext, to_bytes(tag));
  out.insert(out.end(), sealed.begin(), sealed.end());
  return out;
}

Bytes unwrap_fragment(BytesView fragment_key, BytesView wire_ciphertext, const std::string& tag) {
  if (!is_tunneled(wire_ciphertext)) {
    throw Error(ErrorKind::Crypto, "fragment carries no tunnel layer");
  }
  return cryptobox::aead_open_fresh(fragment_key, wire_ciphertext.subspan(1), to_bytes(tag));
}

bool is_tunneled(BytesView ciphertext) {
  return !ciphertext.empty() && ciphertext[0] == kTunnelLayerByte;
}

}  // namespace keymux::tunnel
