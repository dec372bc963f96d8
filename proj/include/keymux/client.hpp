// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Receiving party: issues the key request (optionally through the
// post-quantum tunnel), collects fragments across channels, and rebuilds
// the session key once every fragment has arrived.  Sessions move through
// requesting -> collecting -> complete | failed; a deadline bounds how long
// a session may sit incomplete.

#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "keymux/channels.hpp"
#include "keymux/keycore.hpp"
#include "keymux/net_http.hpp"
#include "keymux/protocol.hpp"
#include "keymux/rng.hpp"

namespace keymux::client {

enum class SessionPhase { Requesting, Collecting, Complete, Failed };
const char* to_string(SessionPhase phase);

struct SessionParams {
  std::string tagname;
  uint32_t key_bits = 256;
  uint16_t num_splits = 4;
  bool shuffle = true;
  channels::ChannelSet channels;   // may be empty behind a pool
  std::string party_label;
  std::string kem;                 // KEM provider name; empty = classical wire
  int64_t deadline_ms = 60'000;
};

/// Client-side latency split of one session (microseconds).  network_us is
/// what remains of the wall time after the measured components.
struct SessionTimings {
  double pq_kem_us = 0.0;
  double decryption_us = 0.0;
  double reconstruction_us = 0.0;
  double total_us = 0.0;
  double network_us = 0.0;
};

struct SessionStatus {
  SessionPhase phase = SessionPhase::Requesting;
  uint16_t fragments_held = 0;
  uint16_t fragments_expected = 0;  // 0 until the first fragment arrives
  std::string failure_reason;
};

/// Everything the client noticed and refused.  Nothing here aborts a
/// session; bad input is dropped, counted, and reconstruction waits for the
/// genuine fragments.
struct AuditCounters {
  uint64_t unknown_tag = 0;     // fragment for a tag never requested here
  uint64_t duplicates = 0;      // identical re-delivery (idempotent)
  uint64_t conflicts = 0;       // same index, different payload; kept the first
  uint64_t undecryptable = 0;   // authentication/decryption failures
  uint64_t tunnel_orphans = 0;  // tunneled fragment without a tunnel secret
};

/// Transport hook: POST a JSON body, return the response.  Production wires
/// this to HttpPoster; tests substitute failures and loopbacks.
using PostFn = std::function<net::HttpResponse(const protocol::Endpoint& to,
                                               const std::string& path,
                                               const protocol::Json& body)>;

class ClientCore {
 public:
  ClientCore(keycore::AsymmetricKeyPair keypair, Rng& rng, PostFn post);
  ~ClientCore();

  /// Fragment delivery address advertised inside proxy-bound requests.
  void set_return_endpoint(const protocol::Endpoint& ep);

  /// Issues the request for one session.  In KEM mode the handshake runs
  /// first and a handshake failure fails the session — there is no silent
  /// classical fallback.  Fragments may start arriving before this returns.
  protocol::Ack request_key(const SessionParams& params, const protocol::Endpoint& target);

  /// Fragment sink (wire or in-process).
  void receive_fragment(const keycore::EncryptedFragment& ef);

  /// Upstream failure notice for a session.
  void mark_session_failed(const std::string& tagname, const std::string& reason);

  SessionStatus status(const std::string& tagname) const;
  SessionPhase phase(const std::string& tagname) const;

  /// Blocks until the session reaches a terminal phase or `timeout_ms`
  /// passes; enforces the session deadline.  True iff Complete.
  bool wait_complete(const std::string& tagname, int64_t timeout_ms);

  /// The reconstructed key.  Throws Error{State} unless the session is
  /// Complete.
  keycore::SessionKey finalize(const std::string& tagname);

  SessionTimings timings(const std::string& tagname) const;

  /// Fails sessions whose deadline has passed; returns how many flipped.
  size_t expire_deadlines(int64_t now_ms);

  AuditCounters audit() const;
  const Bytes& public_key_der() const { return keypair_.public_der; }

 private:
  struct Session;

  void complete_locked(Session& s);
  void fail_locked(Session& s, const std::string& reason);

  keycore::AsymmetricKeyPair keypair_;
  Rng& rng_;
  PostFn post_;
  std::optional<protocol::Endpoint> return_endpoint_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  AuditCounters audit_;
};

/// HTTP receivers for one client: a fragment endpoint per channel plus an
/// optional aggregate return endpoint for proxy-forwarded fragments.  Every
/// receiver also accepts /session-failed notices.
class ClientReceivers {
 public:
  ClientReceivers(ClientCore& core, channels::ChannelStats* stats = nullptr);
  ~ClientReceivers();

  /// Binds one receiver per descriptor; descriptors with port 0 get their
  /// bound ephemeral port written back.
  void open_channels(channels::ChannelSet& channel_set);

  /// Binds the aggregate endpoint and returns it.
  protocol::Endpoint open_return(const std::string& host);

  void close();

 private:
  std::unique_ptr<net::JsonServer> make_receiver(const std::string& channel_id);

  ClientCore& core_;
  channels::ChannelStats* stats_;
  std::vector<std::unique_ptr<net::JsonServer>> servers_;
};

}  // namespace keymux::client
