// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/proxy.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <thread>

#include "keymux/cryptobox.hpp"
#include "keymux/tunnel.hpp"

namespace keymux::proxy {

namespace {

ErrorKind kind_from_name(const std::string& name) {
  for (ErrorKind k : {ErrorKind::Parameter, ErrorKind::Mode, ErrorKind::Crypto,
                      ErrorKind::Protocol, ErrorKind::Config, ErrorKind::Delivery,
                      ErrorKind::State, ErrorKind::Upstream}) {
    if (name == to_string(k)) return k;
  }
  return ErrorKind::Upstream;
}

/// Re-throw an upstream JSON error body as a local Error so the client sees
/// the same status the upstream produced.
[[noreturn]] void raise_from(const net::HttpResponse& resp, const std::string& what) {
  if (resp.status == 0) {
    throw Error(ErrorKind::Upstream, what + " unreachable: " + resp.error);
  }
  std::string message = what + " returned " + std::to_string(resp.status);
  ErrorKind kind = ErrorKind::Upstream;
  if (resp.body.is_object()) {
    if (resp.body.contains("kind") && resp.body["kind"].is_string()) {
      kind = kind_from_name(resp.body["kind"].get<std::string>());
    }
    if (resp.body.contains("error") && resp.body["error"].is_string()) {
      message = resp.body["error"].get<std::string>();
    }
  }
  throw Error(kind, message);
}

}  // namespace

void validate(const ProxyConfig& cfg) {
  if (cfg.id.empty()) throw Error(ErrorKind::Config, "proxy id must not be empty");
  channels::validate_channel_set(cfg.own_channels);
  if (cfg.qkms.host.empty() || cfg.qkms.port <= 0) {
    throw Error(ErrorKind::Config, "proxy needs an upstream endpoint");
  }
  if (cfg.forward_retries < 1) {
    throw Error(ErrorKind::Config, "forward_retries must be >= 1");
  }
  if (cfg.pool.empty()) return;

  if (!(cfg.forward_probability >= 0.0 && cfg.forward_probability < 1.0)) {
    throw Error(ErrorKind::Config, "forward probability must lie in [0, 1)");
  }
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) {
    throw Error(ErrorKind::Config, "hop-decay beta must lie in (0, 1]");
  }
  if (cfg.max_hops < 1) throw Error(ErrorKind::Config, "max_hops must be >= 1");
  std::set<std::string> ids;
  for (const auto& peer : cfg.pool) {
    if (peer.id.empty()) throw Error(ErrorKind::Config, "pool peer with empty id");
    if (!ids.insert(peer.id).second) {
      throw Error(ErrorKind::Config, "duplicate pool peer id: " + peer.id);
    }
  }
  if (!ids.count(cfg.id)) {
    throw Error(ErrorKind::Config, "pool member list must include this proxy");
  }
}

// -- HttpProxyNetwork --------------------------------------------------------

protocol::Ack HttpProxyNetwork::post_key_request(const protocol::Endpoint& to,
                                                 const protocol::Json& body) {
  net::HttpResponse resp = poster_.post_json(to.host, to.port, protocol::kGetKeyParameters, body);
  if (!resp.ok()) raise_from(resp, "upstream " + to.to_string());
  return protocol::ack_from_json(resp.body);
}

protocol::Ack HttpProxyNetwork::post_pool_forward(const protocol::Endpoint& peer,
                                                  const protocol::PoolPayload& payload) {
  net::HttpResponse resp =
      poster_.post_json(peer.host, peer.port, protocol::kPoolForward, protocol::to_json(payload));
  if (!resp.ok()) raise_from(resp, "pool peer " + peer.to_string());
  return protocol::ack_from_json(resp.body);
}

void HttpProxyNetwork::post_pool_return(const protocol::Endpoint& peer,
                                        const protocol::PoolReturn& ret) {
  net::HttpResponse resp =
      poster_.post_json(peer.host, peer.port, protocol::kPoolReturn, protocol::to_json(ret));
  if (!resp.ok()) raise_from(resp, "pool peer " + peer.to_string());
}

void HttpProxyNetwork::post_fragment(const protocol::Endpoint& client,
                                     const keycore::EncryptedFragment& ef) {
  net::HttpResponse resp = poster_.post_json(client.host, client.port,
                                             protocol::kReceiveKeyFragment, protocol::to_json(ef));
  if (!resp.ok()) raise_from(resp, "client " + client.to_string());
}

void HttpProxyNetwork::post_session_failed(const protocol::Endpoint& client,
                                           const std::string& tagname,
                                           const std::string& reason) {
  protocol::Json body{{"tagname", tagname}, {"reason", reason}};
  poster_.post_json(client.host, client.port, protocol::kSessionFailed, body);  // best effort
}

// -- BufferTap ---------------------------------------------------------------

void BufferTap::observe(BytesView bytes) {
  std::lock_guard lock(mu_);
  all_.insert(all_.end(), bytes.begin(), bytes.end());
  ++entries_;
}

void BufferTap::observe(const std::string& text) {
  observe(BytesView(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

Bytes BufferTap::all() const {
  std::lock_guard lock(mu_);
  return all_;
}

size_t BufferTap::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

void BufferTap::clear() {
  std::lock_guard lock(mu_);
  all_.clear();
  entries_ = 0;
}

// -- ProxyCore ---------------------------------------------------------------

ProxyCore::ProxyCore(ProxyConfig cfg, ProxyNetwork& net, Rng& rng)
    : cfg_(std::move(cfg)), net_(net), rng_(rng) {
  validate(cfg_);
}

void ProxyCore::set_own_channel_port(const std::string& channel_id, int port) {
  std::lock_guard lock(mu_);
  for (auto& ch : cfg_.own_channels) {
    if (ch.channel_id == channel_id) {
      ch.port = port;
      return;
    }
  }
  throw Error(ErrorKind::Config, "no such channel: " + channel_id);
}

protocol::Ack ProxyCore::handle_client_request(const protocol::KeyRequest& req,
                                               const protocol::Endpoint& client_return) {
  tap_.observe(protocol::to_json(req).dump());
  {
    std::lock_guard lock(mu_);
    auto& clients = client_routes_[req.tagname];
    if (std::find(clients.begin(), clients.end(), client_return) == clients.end()) {
      clients.push_back(client_return);
    }
  }

  if (cfg_.pool.empty()) {
    // Plain proxy: substitute our channel list, keep everything else.
    protocol::KeyRequest upstream = req;
    upstream.channels = cfg_.own_channels;
    protocol::Json body = protocol::to_json(upstream);
    tap_.observe(body.dump());
    return net_.post_key_request(cfg_.qkms, body);
  }

  protocol::PoolPayload payload;
  payload.request = req;
  payload.entry_id = cfg_.id;
  payload.hop_count = 0;
  return route_or_deliver(std::move(payload));
}

protocol::Ack ProxyCore::handle_pool_forward(protocol::PoolPayload payload) {
  if (cfg_.pool.empty()) {
    throw Error(ErrorKind::Config, "proxy " + cfg_.id + " is not a pool member");
  }
  tap_.observe(protocol::to_json(payload).dump());
  return route_or_deliver(std::move(payload));
}

RouteDecision ProxyCore::route_decision(uint32_t hop_count) {
  if (cfg_.pool.empty() || hop_count >= cfg_.max_hops) return {};
  double q_k = cfg_.forward_probability;
  for (uint32_t i = 1; i < hop_count; ++i) q_k *= cfg_.beta;

  std::lock_guard lock(rng_mu_);
  if (!rng_.bernoulli(q_k)) return {};
  size_t n = cfg_.pool.size();
  if (!cfg_.exclude_self_in_draws) return {true, static_cast<size_t>(rng_.below(n))};

  if (n == 1) return {};  // nobody else to forward to
  size_t self = 0;
  for (; self < n; ++self) {
    if (cfg_.pool[self].id == cfg_.id) break;
  }
  size_t r = static_cast<size_t>(rng_.below(n - 1));
  return {true, r >= self ? r + 1 : r};
}

protocol::Ack ProxyCore::route_or_deliver(protocol::PoolPayload payload) {
  payload.path.push_back({cfg_.id, cfg_.own_channels});
  payload.hop_count += 1;

  RouteDecision decision = route_decision(payload.hop_count);
  if (decision.forwarded) {
    const PoolPeer& peer = cfg_.pool[decision.peer_index];
    try {
      return net_.post_pool_forward(peer.endpoint, payload);
    } catch (const Error&) {
      // Unreachable peer: degrade to delivering from here.
    }
  }

  // This proxy is the exit node.  Remember how fragments travel back.
  {
    std::vector<std::string> reverse;
    for (size_t i = payload.path.size() - 1; i-- > 0;) {
      reverse.push_back(payload.path[i].proxy_id);
    }
    std::lock_guard lock(mu_);
    return_routes_[payload.request.tagname].push_back(std::move(reverse));
  }
  protocol::Json body = protocol::to_json(payload);
  tap_.observe(body.dump());
  return net_.post_key_request(cfg_.qkms, body);
}

void ProxyCore::handle_channel_fragment(const keycore::EncryptedFragment& ef) {
  tap_.observe(ef.ciphertext);

  std::vector<std::vector<std::string>> routes;
  {
    std::lock_guard lock(mu_);
    if (auto it = return_routes_.find(ef.session_tag); it != return_routes_.end()) {
      routes = it->second;
    }
  }
  if (routes.empty()) {
    // Plain-proxy fragment (or entry == exit with no recorded hops).
    forward_to_clients(ef);
    return;
  }
  for (const auto& route : routes) {
    if (route.empty()) {
      forward_to_clients(ef);
      continue;
    }
    protocol::PoolReturn ret;
    ret.return_path.assign(route.begin() + 1, route.end());
    ret.fragment = ef;
    try {
      net_.post_pool_return(endpoint_of(route.front()), ret);
    } catch (const Error&) {
      std::lock_guard lock(mu_);
      failed_sessions_.push_back(ef.session_tag);
    }
  }
}

void ProxyCore::handle_pool_return(const protocol::PoolReturn& ret) {
  tap_.observe(ret.fragment.ciphertext);
  if (ret.return_path.empty()) {
    forward_to_clients(ret.fragment);
    return;
  }
  protocol::PoolReturn next;
  next.return_path.assign(ret.return_path.begin() + 1, ret.return_path.end());
  next.fragment = ret.fragment;
  try {
    net_.post_pool_return(endpoint_of(ret.return_path.front()), next);
  } catch (const Error&) {
    std::lock_guard lock(mu_);
    failed_sessions_.push_back(ret.fragment.session_tag);
  }
}

const protocol::Endpoint& ProxyCore::endpoint_of(const std::string& peer_id) const {
  for (const auto& peer : cfg_.pool) {
    if (peer.id == peer_id) return peer.endpoint;
  }
  throw Error(ErrorKind::Config, "unknown pool peer on return path: " + peer_id);
}

void ProxyCore::forward_to_clients(const keycore::EncryptedFragment& ef) {
  std::vector<protocol::Endpoint> clients;
  {
    std::lock_guard lock(mu_);
    if (auto it = client_routes_.find(ef.session_tag); it != client_routes_.end()) {
      clients = it->second;
    }
  }
  if (clients.empty()) return;  // nobody registered this tag here; drop
  protocol::Json body = protocol::to_json(ef);
  tap_.observe(body.dump());
  for (const auto& client : clients) send_with_retry(client, ef);
}

void ProxyCore::send_with_retry(const protocol::Endpoint& client,
                                const keycore::EncryptedFragment& ef) {
  for (int attempt = 0; attempt < cfg_.forward_retries; ++attempt) {
    try {
      net_.post_fragment(client, ef);
      std::lock_guard lock(mu_);
      ++fragments_forwarded_;
      return;
    } catch (const Error&) {
      if (attempt + 1 < cfg_.forward_retries) {
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
      }
    }
  }
  {
    std::lock_guard lock(mu_);
    failed_sessions_.push_back(ef.session_tag);
  }
  net_.post_session_failed(client, ef.session_tag, "fragment delivery failed");
}

uint64_t ProxyCore::fragments_forwarded() const {
  std::lock_guard lock(mu_);
  return fragments_forwarded_;
}

std::vector<std::string> ProxyCore::failed_sessions() const {
  std::lock_guard lock(mu_);
  return failed_sessions_;
}

const PoolPeer& select_entry(const std::vector<PoolPeer>& pool, Rng& rng) {
  if (pool.empty()) throw Error(ErrorKind::Config, "empty proxy pool");
  return pool[rng.below(pool.size())];
}

// -- ProxyServer -------------------------------------------------------------

ProxyServer::ProxyServer(ProxyCore& core, std::vector<std::unique_ptr<kem::KemProvider>> kems,
                         Rng& rng)
    : core_(core), rng_(rng) {
  for (auto& k : kems) {
    std::string name = k->name();
    kems_.emplace(std::move(name), std::move(k));
  }
  ingress_.route(protocol::kGetKeyParameters,
                 [this](const protocol::Json& body) { return on_ingress(body); });
  ingress_.route(protocol::kPoolForward, [this](const protocol::Json& body) {
    protocol::Ack ack = core_.handle_pool_forward(protocol::pool_payload_from_json(body));
    return std::pair<int, protocol::Json>{200, protocol::to_json(ack)};
  });
  ingress_.route(protocol::kPoolReturn, [this](const protocol::Json& body) {
    core_.handle_pool_return(protocol::pool_return_from_json(body));
    return std::pair<int, protocol::Json>{200, protocol::Json{{"status", "ok"}}};
  });
  ingress_.route(protocol::kKemHandshake, [this](const protocol::Json& body) {
    protocol::KemHandshakeRequest req = protocol::kem_handshake_request_from_json(body);
    auto it = kems_.find(req.kem);
    if (it == kems_.end()) throw Error(ErrorKind::Parameter, "unsupported KEM: " + req.kem);
    if (req.handshake_id.empty()) throw Error(ErrorKind::Protocol, "empty handshake id");
    kem::Encapsulation enc = it->second->encapsulate(req.encap_key, rng_);
    {
      std::lock_guard lock(hs_mu_);
      handshakes_[req.handshake_id] = std::move(enc.shared_secret);
    }
    return std::pair<int, protocol::Json>{
        200, protocol::to_json(protocol::KemHandshakeResponse{enc.ciphertext})};
  });
}

ProxyServer::~ProxyServer() { stop(); }

int ProxyServer::start(const std::string& host, int ingress_port) {
  // Receivers first, so channel descriptors carry live ports before any
  // request references them.
  for (const auto& ch : core_.config().own_channels) {
    auto receiver = std::make_unique<net::JsonServer>();
    receiver->route(protocol::kReceiveKeyFragment, [this](const protocol::Json& body) {
      core_.handle_channel_fragment(protocol::fragment_from_json(body));
      return std::pair<int, protocol::Json>{200, protocol::Json{{"status", "ok"}}};
    });
    int bound = receiver->start(ch.host, ch.port);
    core_.set_own_channel_port(ch.channel_id, bound);
    receivers_.push_back(std::move(receiver));
  }
  return ingress_.start(host, ingress_port);
}

void ProxyServer::stop() {
  ingress_.stop();
  for (auto& r : receivers_) r->stop();
  receivers_.clear();
}

std::pair<int, protocol::Json> ProxyServer::on_ingress(const protocol::Json& body) {
  if (!body.contains("return_endpoint") || !body["return_endpoint"].is_string()) {
    throw Error(ErrorKind::Protocol, "request carries no return endpoint");
  }
  protocol::Endpoint client_return =
      protocol::Endpoint::parse(body["return_endpoint"].get<std::string>());

  if (body.contains("sealed")) {
    // The tunnel terminates here: this proxy is the entity the client
    // addressed.  The upstream leg continues classically.
    protocol::SealedEnvelope env = protocol::sealed_envelope_from_json(body);
    SecureBytes secret;
    {
      std::lock_guard lock(hs_mu_);
      auto it = handshakes_.find(env.handshake_id);
      if (it == handshakes_.end()) {
        throw Error(ErrorKind::Protocol, "unknown handshake id: " + env.handshake_id);
      }
      secret = it->second;
    }
    SecureBytes k0 = tunnel::derive_request_key(secret.view(), env.handshake_id);
    Bytes plain = tunnel::open(k0.view(), env.sealed, "get-key-parameters");
    protocol::Json inner = protocol::Json::parse(plain.begin(), plain.end(), nullptr, false);
    if (inner.is_discarded()) throw Error(ErrorKind::Protocol, "sealed body is not JSON");
    protocol::Ack ack =
        core_.handle_client_request(protocol::key_request_from_json(inner), client_return);
    Bytes sealed_ack = tunnel::seal(k0.view(), to_bytes(protocol::to_json(ack).dump()), "ack");
    return {200, protocol::Json{{"sealed", base64_encode(sealed_ack)}}};
  }

  protocol::Ack ack =
      core_.handle_client_request(protocol::key_request_from_json(body), client_return);
  return {200, protocol::to_json(ack)};
}

}  // namespace keymux::proxy
