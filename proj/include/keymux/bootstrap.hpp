// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Kiosk bootstrap: issuance and verification of the signed
// (proxy address, expiry) credential a client scans before any network
// exchange.  The QR payload is the credential in base64 text form; the
// badge tap is a local call.  Verification never throws on malformed
// input — it returns a rejection reason.

#pragma once

#include <cstdint>
#include <string>

#include "keymux/common.hpp"
#include "keymux/cryptobox.hpp"

namespace keymux::bootstrap {

struct Credential {
  std::string proxy_address;  // host:port
  int64_t expiry_epoch_s = 0;
  Bytes signature;            // over canonical_encoding(address, expiry)
};

enum class VerifyStatus : uint8_t { Accepted, Expired, BadSignature, Malformed };

struct VerifyResult {
  VerifyStatus status = VerifyStatus::Malformed;
  std::string reason;

  bool accepted() const { return status == VerifyStatus::Accepted; }
};

std::string to_string(VerifyStatus s);

/// Byte-stable signing input: UTF-8 address || 0x1F || expiry as 8-byte
/// big-endian epoch seconds.
Bytes canonical_encoding(const std::string& proxy_address, int64_t expiry_epoch_s);

Credential issue_credential(const std::string& proxy_address, int64_t validity_window_s,
                            const cryptobox::SigningKey& kiosk_key, int64_t now_epoch_s);

VerifyResult verify_credential(const Credential& cred, const cryptobox::VerifyKey& kiosk_public,
                               int64_t now_epoch_s);

/// QR text form: base64(canonical fields || signature).
std::string encode_credential(const Credential& cred);
/// Throws Error{Parameter} on undecodable text; field-level damage is left
/// to verify_credential, which reports it as malformed or bad-signature.
Credential decode_credential(const std::string& text);

}  // namespace keymux::bootstrap
