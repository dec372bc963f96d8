// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Quantum Key Management Server.  Pairs key requests by tagname, generates
// the session key once per matched pair, fragments/shuffles/encrypts per
// party, and dispatches fragments over each party's channels.  The core is
// transport-agnostic; QkmsServer adds the HTTP surface including the KEM
// handshake for the post-quantum tunnel.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "keymux/channels.hpp"
#include "keymux/kem.hpp"
#include "keymux/keycore.hpp"
#include "keymux/net_http.hpp"
#include "keymux/protocol.hpp"
#include "keymux/rng.hpp"

namespace keymux::qkms {

struct QkmsConfig {
  int64_t pairing_window_ms = 30'000;
  keycore::EncryptMode encrypt_mode = keycore::EncryptMode::DirectAsymmetric;
  std::vector<uint32_t> allowed_bits{128, 192, 256};
  // Pool sessions: dispatch on the exit node's channels (default) or the
  // entry node's.
  bool dispatch_to_entry = false;
};

/// Per-request transport context.  In pq-tunnel mode the handshake's shared
/// secret rides along so dispatch can add the outer fragment layer.
struct RequestContext {
  bool pq_tunnel = false;
  SecureBytes tunnel_secret;
};

/// Latency components of one dispatch, per side (microseconds).
struct DispatchTimings {
  double key_generation_us = 0.0;  // sampling the session key (once per session)
  double key_processing_us = 0.0;  // fragment + shuffle + encrypt + assign
  double network_us = 0.0;         // channel sends
  double wall_us = 0.0;            // whole dispatch for this party
};

struct DispatchReport {
  std::string tagname;
  std::string party_label;
  uint16_t num_fragments = 0;
  bool shuffled = false;
  bool pq_tunnel = false;
  keycore::EncryptMode encrypt_mode = keycore::EncryptMode::DirectAsymmetric;
  channels::DispatchAssignment assignment;
  DispatchTimings timings;
};

class QkmsCore {
 public:
  using FailureNotifier =
      std::function<void(const protocol::Endpoint&, const std::string& tagname,
                         const std::string& reason)>;

  QkmsCore(QkmsConfig cfg, channels::ChannelTransport& transport, Rng& rng);

  /// First matching arrival waits; the second triggers generation and both
  /// dispatches.  Throws Error{Protocol} on a third arrival for a tag,
  /// Error{Parameter} on a key_bits mismatch between the pair.
  protocol::Ack handle_key_request(const protocol::KeyRequest& req, int64_t now_ms,
                                   RequestContext ctx = RequestContext{});

  /// Pool delivery: same pairing semantics, but the party's fragments go to
  /// the channels accumulated along the pool path (exit node's by default).
  protocol::Ack handle_pool_request(const protocol::PoolPayload& payload, int64_t now_ms,
                                    RequestContext ctx = RequestContext{});

  /// Removes pending entries whose pairing window has elapsed.
  size_t purge_expired(int64_t now_ms);

  void set_failure_notifier(FailureNotifier notifier) { notifier_ = std::move(notifier); }

  // Introspection (tests, bench).
  size_t pending_count() const;
  std::vector<DispatchReport> reports() const;
  void clear_reports();
  /// Serialized image of everything the server retains between requests;
  /// the key-hygiene test scans it for session-key material.
  Bytes state_image() const;

  const QkmsConfig& config() const { return cfg_; }

 private:
  struct PartyArrival {
    protocol::KeyRequest request;
    channels::ChannelSet effective_channels;  // where this party's fragments go
    RequestContext ctx;
    int64_t arrival_ms = 0;
  };

  struct Pending {
    PartyArrival first;
    int64_t expiry_ms = 0;
  };

  protocol::Ack admit(PartyArrival arrival, int64_t now_ms);
  DispatchReport dispatch_party(const keycore::SessionKey& key, const PartyArrival& party,
                                double key_generation_us);

  QkmsConfig cfg_;
  channels::ChannelTransport& transport_;
  Rng& rng_;
  FailureNotifier notifier_;

  mutable std::mutex mu_;
  std::map<std::string, Pending> pending_;
  std::map<std::string, int64_t> completed_;  // tagname -> completion time
  std::vector<DispatchReport> reports_;
};

/// HTTP face of the QKMS: POST /get-key-parameters (plain, sealed, or pool
/// payload) and POST /kem-handshake.
class QkmsServer {
 public:
  QkmsServer(QkmsCore& core, std::vector<std::unique_ptr<kem::KemProvider>> kems, Rng& rng);
  ~QkmsServer();

  int start(const std::string& host, int port);
  void stop();
  int port() const { return server_.port(); }

 private:
  std::pair<int, protocol::Json> on_key_parameters(const protocol::Json& body);
  std::pair<int, protocol::Json> on_kem_handshake(const protocol::Json& body);

  QkmsCore& core_;
  std::map<std::string, std::unique_ptr<kem::KemProvider>> kems_;
  Rng& rng_;
  net::JsonServer server_;

  std::mutex hs_mu_;
  std::map<std::string, SecureBytes> handshakes_;  // handshake_id -> shared secret
};

/// Wall-clock milliseconds from the monotonic clock.
int64_t steady_now_ms();

}  // namespace keymux::qkms
