// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Post-quantum wire tunnel: keys derived from the KEM shared secret protect
// the key request (keyed by handshake id) and add an outer layer over each
// already-encrypted fragment (keyed by tagname, which binds the tunnel to
// the session).  Stripping either layer alone never exposes a plaintext
// fragment.

#pragma once

#include <string>

#include "keymux/common.hpp"

namespace keymux::tunnel {

/// First byte of a fragment ciphertext that carries the tunnel layer.
inline constexpr uint8_t kTunnelLayerByte = 0x03;

/// Key protecting the request/ack exchange of one handshake.
SecureBytes derive_request_key(BytesView shared_secret, const std::string& handshake_id);

/// Key protecting fragment traffic of one session tag.
SecureBytes derive_fragment_key(BytesView shared_secret, const std::string& tagname);

/// AEAD-seal a message under a tunnel key; `context` is authenticated but
/// not encrypted.
Bytes seal(BytesView key, BytesView plaintext, const std::string& context);
Bytes open(BytesView key, BytesView sealed, const std::string& context);

/// Outer fragment layer: 0x03 || AEAD(key, inner ciphertext, aad=tag).
Bytes wrap_fragment(BytesView fragment_key, BytesView inner_ciphertext, const std::string& tag);
Bytes unwrap_fragment(BytesView fragment_key, BytesView wire_ciphertext, const std::string& tag);
bool is_tunneled(BytesView ciphertext);

}  // namespace keymux::tunnel
