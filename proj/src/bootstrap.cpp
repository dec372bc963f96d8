// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/bootstrap.hpp"

#include <algorithm>

namespace keymux::bootstrap {

namespace {
constexpr uint8_t kSeparator = 0x1F;
}

std::string to_string(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Accepted: return "accepted";
    case VerifyStatus::Expired: return "expired";
    case VerifyStatus::BadSignature: return "bad-signature";
    case VerifyStatus::Malformed: return "malformed";
  }
  return "unknown";
}

Bytes canonical_encoding(const std::string& proxy_address, int64_t expiry_epoch_s) {
  Bytes out = to_bytes(proxy_address);
  out.push_back(kSeparator);
  put_u64_be(out, static_cast<uint64_t>(expiry_epoch_s));
  return out;
}

Credential issue_credential(const std::string& proxy_address, int64_t validity_window_s,
                            const cryptobox::SigningKey& kiosk_key, int64_t now_epoch_s) {
  if (validity_window_s <= 0) {
    throw Error(ErrorKind::Parameter, "validity window must be positive");
  }
  Credential cred;
  cred.proxy_address = proxy_address;
  cred.expiry_epoch_s = now_epoch_s + validity_window_s;
  cred.signature = kiosk_key.sign(canonical_encoding(cred.proxy_address, cred.expiry_epoch_s));
  return cred;
}

VerifyResult verify_credential(const Credential& cred, const cryptobox::VerifyKey& kiosk_public,
                               int64_t now_epoch_s) {
  if (cred.proxy_address.empty() || cred.signature.size() != cryptobox::kSignatureLen ||
      cred.expiry_epoch_s < 0) {
    return {VerifyStatus::Malformed, "credential fields are malformed"};
  }
  bool valid = false;
  try {
    valid = kiosk_public.verify(canonical_encoding(cred.proxy_address, cred.expiry_epoch_s),
                                cred.signature);
  } catch (const std::exception&) {
    return {VerifyStatus::Malformed, "credential is unverifiable"};
  }
  if (!valid) {
    return {VerifyStatus::BadSignature, "signature does not verify under the kiosk key"};
  }
  if (now_epoch_s > cred.expiry_epoch_s) {
    return {VerifyStatus::Expired, "credential expired"};
  }
  return {VerifyStatus::Accepted, ""};
}

std::string encode_credential(const Credential& cred) {
  Bytes blob = canonical_encoding(cred.proxy_address, cred.expiry_epoch_s);
  blob.insert(blob.end(), cred.signature.begin(), cred.signature.end());
  return base64_encode(blob);
}

Credential decode_credential(const std::string& text) {
  Bytes blob = base64_decode(text);
  // canonical = address || 0x1F || 8-byte expiry, then a 64-byte signature.
  if (blob.size() < 1 + 1 + 8 + cryptobox::kSignatureLen) {
    throw Error(ErrorKind::Parameter, "credential text too short");
  }
  size_t sig_start = blob.size() - cryptobox::kSignatureLen;
  size_t expiry_start = sig_start - 8;
  if (expiry_start < 2 || blob[expiry_start - 1] != kSeparator) {
    throw Error(ErrorKind::Parameter, "credential canonical framing is damaged");
  }
  Credential cred;
  cred.proxy_address.assign(blob.begin(), blob.begin() + static_cast<long>(expiry_start - 1));
  cred.expiry_epoch_s = static_cast<int64_t>(get_u64_be(blob, expiry_start));
  cred.signature.assign(blob.begin() + static_cast<long>(sig_start), blob.end());
  return cred;
}

}  // namespace keymux::bootstrap
