// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Wire protocol surface: the key-request message, the fragment wire unit,
// pool routing payloads, and the KEM handshake messages, together with
// their JSON encodings.  Field names here are the protocol contract; all
// bodies are UTF-8 JSON.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "keymux/channels.hpp"
#include "keymux/common.hpp"
#include "keymux/keycore.hpp"

namespace keymux::protocol {

using Json = nlohmann::json;

// Endpoint paths.
inline constexpr const char* kGetKeyParameters = "/get-key-parameters";
inline constexpr const char* kReceiveKeyFragment = "/receive-key-fragment";
inline constexpr const char* kPoolForward = "/pool-forward";
inline constexpr const char* kPoolReturn = "/pool-return";
inline constexpr const char* kKemHandshake = "/kem-handshake";
inline constexpr const char* kSessionFailed = "/session-failed";

/// "host:port" <-> parts.
struct Endpoint {
  std::string host;
  int port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
  static Endpoint parse(const std::string& s);
  bool operator==(const Endpoint&) const = default;
};

/// The five request parameters plus the requester's public key.
struct KeyRequest {
  std::string tagname;
  uint32_t key_bits = 0;
  uint16_t num_splits = 0;
  bool shuffle = false;
  channels::ChannelSet channels;
  Bytes public_key;  // SPKI DER
  std::string party_label;
};

void validate(const KeyRequest& req);

/// Ack for a key request.
struct Ack {
  enum class Status { Waiting, Dispatched } status = Status::Waiting;
  std::string message;
};

/// One visited pool proxy and the channel list it appended.
struct PathEntry {
  std::string proxy_id;
  channels::ChannelSet channels;
};

/// Pool routing payload: the client request plus the accumulated channel
/// lists, one entry per visited proxy in visit order.
struct PoolPayload {
  KeyRequest request;
  std::string entry_id;
  uint32_t hop_count = 0;
  std::vector<PathEntry> path;
};

/// Reverse-path fragment carrier: the proxies still to traverse (nearest
/// first; empty means "this proxy is the entry node").
struct PoolReturn {
  std::vector<std::string> return_path;
  keycore::EncryptedFragment fragment;
};

/// KEM handshake: client sends its encapsulation key, server replies with
/// the KEM ciphertext.  The shared secret never travels.
struct KemHandshakeRequest {
  std::string kem;  // provider name
  std::string handshake_id;
  Bytes encap_key;
};

struct KemHandshakeResponse {
  Bytes kem_ciphertext;
};

/// A request body protected by the KEM-derived tunnel key.
struct SealedEnvelope {
  std::string handshake_id;
  Bytes sealed;
};

// -- JSON encoding (field names are the wire contract) -----------------------

Json to_json(const channels::LatencyModel& m);
channels::LatencyModel latency_from_json(const Json& j);

Json to_json(const channels::ChannelDescriptor& ch);
channels::ChannelDescriptor channel_from_json(const Json& j);

Json to_json(const channels::ChannelSet& channels);
channels::ChannelSet channel_set_from_json(const Json& j);

Json to_json(const KeyRequest& req);
KeyRequest key_request_from_json(const Json& j);

Json to_json(const keycore::EncryptedFragment& ef);
keycore::EncryptedFragment fragment_from_json(const Json& j);

Json to_json(const Ack& ack);
Ack ack_from_json(const Json& j);

Json to_json(const PoolPayload& payload);
PoolPayload pool_payload_from_json(const Json& j);

Json to_json(const PoolReturn& ret);
PoolReturn pool_return_from_json(const Json& j);

Json to_json(const KemHandshakeRequest& req);
KemHandshakeRequest kem_handshake_request_from_json(const Json& j);

Json to_json(const KemHandshakeResponse& resp);
KemHandshakeResponse kem_handshake_response_from_json(const Json& j);

Json to_json(const SealedEnvelope& env);
SealedEnvelope sealed_envelope_from_json(const Json& j);

/// Error body helper: {"error": message, "kind": kind-name}.
Json error_body(ErrorKind kind, const std::string& message);

}  // namespace keymux::protocol
