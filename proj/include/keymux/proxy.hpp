// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Transparent/explicit proxy and the private proxy-pool variant.  The proxy
// forwards key requests upstream with its own channel list, relays returned
// fragments to the client bit-exactly, and — when pooled — performs per-hop
// randomized routing with a truncated-geometric hop count.  Proxies never
// hold key material; an instrumentation tap records every byte buffer a
// proxy touches so tests can prove that.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "keymux/channels.hpp"
#include "keymux/kem.hpp"
#include "keymux/net_http.hpp"
#include "keymux/protocol.hpp"
#include "keymux/rng.hpp"

namespace keymux::proxy {

struct PoolPeer {
  std::string id;
  protocol::Endpoint endpoint;
};

struct ProxyConfig {
  std::string id;
  enum class Mode { Transparent, Explicit } mode = Mode::Explicit;
  channels::ChannelSet own_channels;
  protocol::Endpoint qkms;

  // Pool routing (empty pool = plain single proxy).
  std::vector<PoolPeer> pool;        // all pool members, self included
  double forward_probability = 0.0;  // q in [0,1)
  double beta = 1.0;                 // hop-decay: q_k = q * beta^(k-1)
  uint32_t max_hops = 1;
  bool exclude_self_in_draws = false;

  int forward_retries = 3;
};

void validate(const ProxyConfig& cfg);

/// How the proxy reaches the rest of the world.  HTTP in deployment; the
/// pool simulator wires cores to each other directly.
class ProxyNetwork {
 public:
  virtual ~ProxyNetwork() = default;
  virtual protocol::Ack post_key_request(const protocol::Endpoint& to,
                                         const protocol::Json& body) = 0;
  virtual protocol::Ack post_pool_forward(const protocol::Endpoint& peer,
                                          const protocol::PoolPayload& payload) = 0;
  virtual void post_pool_return(const protocol::Endpoint& peer,
                                const protocol::PoolReturn& ret) = 0;
  virtual void post_fragment(const protocol::Endpoint& client,
                             const keycore::EncryptedFragment& ef) = 0;
  virtual void post_session_failed(const protocol::Endpoint& client, const std::string& tagname,
                                   const std::string& reason) = 0;
};

/// HTTP-backed ProxyNetwork.
class HttpProxyNetwork final : public ProxyNetwork {
 public:
  explicit HttpProxyNetwork(net::HttpPoster& poster) : poster_(poster) {}
  protocol::Ack post_key_request(const protocol::Endpoint& to,
                                 const protocol::Json& body) override;
  protocol::Ack post_pool_forward(const protocol::Endpoint& peer,
                                  const protocol::PoolPayload& payload) override;
  void post_pool_return(const protocol::Endpoint& peer, const protocol::PoolReturn& ret) override;
  void post_fragment(const protocol::Endpoint& client,
                     const keycore::EncryptedFragment& ef) override;
  void post_session_failed(const protocol::Endpoint& client, const std::string& tagname,
                           const std::string& reason) override;

 private:
  net::HttpPoster& poster_;
};

/// Records every byte buffer the proxy handles (requests in/out, fragments
/// in/out, pool payloads).  The zero-knowledge test scans this.
class BufferTap {
 public:
  void observe(BytesView bytes);
  void observe(const std::string& text);
  Bytes all() const;
  size_t entries() const;
  void clear();

 private:
  mutable std::mutex mu_;
  Bytes all_;
  size_t entries_ = 0;
};

/// Outcome of one routing decision (exposed for the pool statistics tests).
struct RouteDecision {
  bool forwarded = false;
  size_t peer_index = 0;  // into cfg.pool, when forwarded
};

class ProxyCore {
 public:
  ProxyCore(ProxyConfig cfg, ProxyNetwork& net, Rng& rng);

  /// Client-facing key request.  `client_return` is where fragments for
  /// this tag get forwarded (the explicit return field or the
  /// source-address injected by the transparent-boundary redirect).
  protocol::Ack handle_client_request(const protocol::KeyRequest& req,
                                      const protocol::Endpoint& client_return);

  /// Pool-internal: a payload forwarded by a peer lands here.
  protocol::Ack handle_pool_forward(protocol::PoolPayload payload);

  /// A fragment arriving on one of this proxy's own channels.
  void handle_channel_fragment(const keycore::EncryptedFragment& ef);

  /// Reverse-path hop for a pooled session's fragment.
  void handle_pool_return(const protocol::PoolReturn& ret);

  /// The bare routing decision: appends nothing, sends nothing.  hop_count
  /// is the number of proxies visited so far (this one included).
  RouteDecision route_decision(uint32_t hop_count);

  const ProxyConfig& config() const { return cfg_; }
  BufferTap& tap() { return tap_; }

  /// Fixes up a channel descriptor after its receiver bound an ephemeral
  /// port, so path entries and upstream requests carry the real port.
  void set_own_channel_port(const std::string& channel_id, int port);

  uint64_t fragments_forwarded() const;
  std::vector<std::string> failed_sessions() const;

 private:
  protocol::Ack route_or_deliver(protocol::PoolPayload payload);
  void forward_to_clients(const keycore::EncryptedFragment& ef);
  void send_with_retry(const protocol::Endpoint& client, const keycore::EncryptedFragment& ef);
  const protocol::Endpoint& endpoint_of(const std::string& peer_id) const;

  ProxyConfig cfg_;
  ProxyNetwork& net_;
  Rng& rng_;
  std::mutex rng_mu_;
  BufferTap tap_;

  mutable std::mutex mu_;
  std::map<std::string, std::vector<protocol::Endpoint>> client_routes_;  // tag -> clients
  std::map<std::string, std::vector<std::vector<std::string>>> return_routes_;  // tag -> paths
  uint64_t fragments_forwarded_ = 0;
  std::vector<std::string> failed_sessions_;
};

/// Uniform entry-node draw over a pool.
const PoolPeer& select_entry(const std::vector<PoolPeer>& pool, Rng& rng);

/// HTTP face: client ingress (/get-key-parameters, /kem-handshake), pool
/// endpoints (/pool-forward, /pool-return), and one fragment receiver per
/// own channel.
class ProxyServer {
 public:
  ProxyServer(ProxyCore& core, std::vector<std::unique_ptr<kem::KemProvider>> kems, Rng& rng);
  ~ProxyServer();

  /// Binds the ingress port plus one receiver per own channel (channel
  /// ports come from the descriptors).  Returns the ingress port.
  int start(const std::string& host, int ingress_port);
  void stop();
  int port() const { return ingress_.port(); }

 private:
  std::pair<int, protocol::Json> on_ingress(const protocol::Json& body);

  ProxyCore& core_;
  std::map<std::string, std::unique_ptr<kem::KemProvider>> kems_;
  Rng& rng_;
  net::JsonServer ingress_;
  std::vector<std::unique_ptr<net::JsonServer>> receivers_;

  std::mutex hs_mu_;
  std::map<std::string, SecureBytes> handshakes_;
};

}  // namespace keymux::proxy
