// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/common.hpp"

#include <openssl/crypto.h>

#include <algorithm>
#include <cstring>

namespace keymux {

SecureBytes& SecureBytes::operator=(SecureBytes&& other) noexcept {
  if (this != &other) {
    wipe();
    data_ = std::move(other.data_);
    other.data_.clear();
  }
  return *this;
}

void SecureBytes::wipe() {
  if (!data_.empty()) {
    OPENSSL_cleanse(data_.data(), data_.size());
    data_.clear();
    data_.shrink_to_fit();
  }
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Mode: return "mode error";
    case ErrorKind::Crypto: return "crypto error";
    case ErrorKind::Protocol: return "protocol error";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Delivery: return "delivery error";
    case ErrorKind::State: return "state error";
    case ErrorKind::Upstream: return "upstream error";
  }
  return "error";
}

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";
constexpr char kB64Digits[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace

std::string to_hex(BytesView bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0F]);
  }
  return out;
}

Bytes from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorKind::Parameter, "odd hex length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorKind::Parameter, "bad hex digit");
  };
  Bytes out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

std::string base64_encode(BytesView bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    uint32_t v = bytes[i] << 16 | bytes[i + 1] << 8 | bytes[i + 2];
    out.push_back(kB64Digits[v >> 18]);
    out.push_back(kB64Digits[(v >> 12) & 63]);
    out.push_back(kB64Digits[(v >> 6) & 63]);
    out.push_back(kB64Digits[v & 63]);
  }
  size_t rem = bytes.size() - i;
  if (rem == 1) {
    uint32_t v = bytes[i] << 16;
    out.push_back(kB64Digits[v >> 18]);
    out.push_back(kB64Digits[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    uint32_t v = bytes[i] << 16 | bytes[i + 1] << 8;
    out.push_back(kB64Digits[v >> 18]);
    out.push_back(kB64Digits[(v >> 12) & 63]);
    out.push_back(kB64Digits[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

Bytes base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(ErrorKind::Parameter, "bad base64 length");
  Bytes out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    uint32_t v = 0;
    for (size_t j = 0; j < 4; ++j) {
      char c = text[i + j];
      if (c == '=') {
        if (i + 4 != text.size() || j < 2) {
          throw Error(ErrorKind::Parameter, "bad base64 padding");
        }
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw Error(ErrorKind::Parameter, "base64 data after padding");
      int d = b64_value(c);
      if (d < 0) throw Error(ErrorKind::Parameter, "bad base64 character");
      v = v << 6 | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v));
  }
  return out;
}

bool contains_bytes(BytesView haystack, BytesView needle) {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

void put_u16_be(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32_be(Bytes& out, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

void put_u64_be(Bytes& out, uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

uint16_t get_u16_be(BytesView in, size_t offset) {
  if (offset + 2 > in.size()) throw Error(ErrorKind::Parameter, "truncated u16");
  return static_cast<uint16_t>(in[offset] << 8 | in[offset + 1]);
}

uint32_t get_u32_be(BytesView in, size_t offset) {
  if (offset + 4 > in.size()) throw Error(ErrorKind::Parameter, "truncated u32");
  uint32_t v = 0;
  for (size_t i = 0; i < 4; ++i) v = v << 8 | in[offset + i];
  return v;
}

uint64_t get_u64_be(BytesView in, size_t offset) {
  if (offset + 8 > in.size()) throw Error(ErrorKind::Parameter, "truncated u64");
  uint64_t v = 0;
  for (size_t i = 0; i < 8; ++i) v = v << 8 | in[offset + i];
  return v;
}

}  // namespace keymux
