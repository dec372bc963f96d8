// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared byte-buffer types, error taxonomy, and small encoding helpers.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace keymux {

using Bytes = std::vector<uint8_t>;
using BytesView = std::span<const uint8_t>;

// Byte buffer for key material; contents are wiped before the storage is
// released so secrets do not linger in freed heap pages.
class SecureBytes {
 public:
  SecureBytes() = default;
  explicit SecureBytes(size_t n) : data_(n, 0) {}
  explicit SecureBytes(Bytes b) : data_(std::move(b)) {}
  SecureBytes(const SecureBytes&) = default;
  SecureBytes& operator=(const SecureBytes&) = default;
  SecureBytes(SecureBytes&& other) noexcept { *this = std::move(other); }
  SecureBytes& operator=(SecureBytes&& other) noexcept;
  ~SecureBytes() { wipe(); }

  uint8_t* data() { return data_.data(); }
  const uint8_t* data() const { return data_.data(); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  uint8_t& operator[](size_t i) { return data_[i]; }
  uint8_t operator[](size_t i) const { return data_[i]; }
  BytesView view() const { return {data_.data(), data_.size()}; }
  const Bytes& bytes() const { return data_; }
  Bytes copy() const { return data_; }
  bool operator==(const SecureBytes& o) const { return data_ == o.data_; }

  // Zeroizes the contents in place and releases the storage.
  void wipe();

 private:
  Bytes data_;
};

enum class ErrorKind {
  Parameter,    // caller passed an out-of-contract value
  Mode,         // operation not valid in the selected mode
  Crypto,       // encryption/decryption/authentication failure
  Protocol,     // inconsistent or conflicting protocol state
  Config,       // bad configuration (empty channel set, bad pool, ...)
  Delivery,     // transport-level send failure
  State,        // operation called in the wrong lifecycle state
  Upstream,     // a dependent service failed or was unreachable
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

std::string to_hex(BytesView bytes);
Bytes from_hex(const std::string& hex);

std::string base64_encode(BytesView bytes);
Bytes base64_decode(const std::string& text);  // throws Error{Parameter} on bad input

// True if `needle` occurs as a contiguous byte substring of `haystack`.
bool contains_bytes(BytesView haystack, BytesView needle);

void put_u16_be(Bytes& out, uint16_t v);
void put_u32_be(Bytes& out, uint32_t v);
void put_u64_be(Bytes& out, uint64_t v);
uint16_t get_u16_be(BytesView in, size_t offset);
uint32_t get_u32_be(BytesView in, size_t offset);
uint64_t get_u64_be(BytesView in, size_t offset);

inline Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(BytesView b) { return std::string(b.begin(), b.end()); }

}  // namespace keymux
