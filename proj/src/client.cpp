// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/client.hpp"

#include <algorithm>
#include <chrono>

#include "keymux/kem.hpp"
#include "keymux/tunnel.hpp"

namespace keymux::client {

namespace {

using Clock = std::chrono::steady_clock;

int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now().time_since_epoch())
      .count();
}

double us_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

ErrorKind kind_from_name(const std::string& name) {
  for (ErrorKind k : {ErrorKind::Parameter, ErrorKind::Mode, ErrorKind::Crypto,
                      ErrorKind::Protocol, ErrorKind::Config, ErrorKind::Delivery,
                      ErrorKind::State, ErrorKind::Upstream}) {
    if (name == to_string(k)) return k;
  }
  return ErrorKind::Upstream;
}

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

const char* to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::Requesting: return "requesting";
    case SessionPhase::Collecting: return "collecting";
    case SessionPhase::Complete: return "complete";
    case SessionPhase::Failed: return "failed";
  }
  return "?";
}

struct ClientCore::Session {
  SessionParams params;
  SessionPhase phase = SessionPhase::Requesting;
  std::string failure_reason;

  keycore::FragmentDecryptor decryptor;
  SecureBytes tunnel_secret;
  SecureBytes fragment_key;  // derived lazily from tunnel_secret

  uint16_t expected_total = 0;
  std::map<uint16_t, Bytes> payloads;
  keycore::SessionKey key;

  int64_t deadline_at_ms = 0;
  Clock::time_point started;
  SessionTimings timings;

  Session(SessionParams p, keycore::FragmentDecryptor d)
      : params(std::move(p)), decryptor(std::move(d)) {}
};

ClientCore::ClientCore(keycore::AsymmetricKeyPair keypair, Rng& rng, PostFn post)
    : keypair_(std::move(keypair)), rng_(rng), post_(std::move(post)) {
  if (!post_) throw Error(ErrorKind::Config, "client needs a transport");
  cryptobox::RsaPrivateKey::from_der(keypair_.private_der);  // fail early on a bad pair
}

ClientCore::~ClientCore() = default;

void ClientCore::set_return_endpoint(const protocol::Endpoint& ep) {
  std::lock_guard lock(mu_);
  return_endpoint_ = ep;
}

protocol::Ack ClientCore::request_key(const SessionParams& params,
                                      const protocol::Endpoint& target) {
  if (params.tagname.empty()) throw Error(ErrorKind::Parameter, "empty tagname");
  if (params.deadline_ms <= 0) throw Error(ErrorKind::Parameter, "deadline must be positive");

  Session* s = nullptr;
  {
    std::lock_guard lock(mu_);
    auto [it, inserted] = sessions_.try_emplace(
        params.tagname,
        std::make_unique<Session>(params, keycore::FragmentDecryptor(
                                              cryptobox::RsaPrivateKey::from_der(
                                                  keypair_.private_der))));
    if (!inserted) {
      throw Error(ErrorKind::State, "session already exists for tag: " + params.tagname);
    }
    s = it->second.get();
    s->started = Clock::now();
    s->deadline_at_ms = now_ms() + params.deadline_ms;
  }

  auto fail_and_rethrow = [&](const std::string& reason) {
    std::lock_guard lock(mu_);
    if (s->phase == SessionPhase::Requesting || s->phase == SessionPhase::Collecting) {
      fail_locked(*s, reason);
    }
  };

  try {
    SecureBytes request_tunnel_key;
    std::string handshake_id;

    if (!params.kem.empty()) {
      // KEM handshake first; if it cannot be completed the session fails
      // here — a classical retry would defeat the point of the tunnel.
      auto t0 = Clock::now();
      std::unique_ptr<kem::KemProvider> provider = kem::make_kem(params.kem);
      kem::KemKeyPair kk = provider->generate_keypair(rng_);
      {
        Bytes id(16);
        rng_.fill(id);
        handshake_id = to_hex(id);
      }
      protocol::KemHandshakeRequest hs{params.kem, handshake_id, kk.encap_key};
      net::HttpResponse resp =
          post_(target, protocol::kKemHandshake, protocol::to_json(hs));
      if (!resp.ok()) raise_from(resp, "KEM handshake with " + target.to_string());
      protocol::KemHandshakeResponse hr =
          protocol::kem_handshake_response_from_json(resp.body);
      SecureBytes shared = provider->decapsulate(kk.decap_key.view(), hr.kem_ciphertext);
      request_tunnel_key = tunnel::derive_request_key(shared.view(), handshake_id);
      {
        std::lock_guard lock(mu_);
        s->tunnel_secret = std::move(shared);
        s->timings.pq_kem_us = us_between(t0, Clock::now());
      }
    }

    protocol::KeyRequest req;
    req.tagname = params.tagname;
    req.key_bits = params.key_bits;
    req.num_splits = params.num_splits;
    req.shuffle = params.shuffle;
    req.channels = params.channels;
    req.public_key = keypair_.public_der;
    req.party_label = params.party_label;

    protocol::Json body;
    if (!params.kem.empty()) {
      Bytes sealed = tunnel::seal(request_tunnel_key.view(),
                                  to_bytes(protocol::to_json(req).dump()),
                                  "get-key-parameters");
      body = protocol::to_json(protocol::SealedEnvelope{handshake_id, std::move(sealed)});
    } else {
      body = protocol::to_json(req);
    }
    {
      std::lock_guard lock(mu_);
      if (return_endpoint_) body["return_endpoint"] = return_endpoint_->to_string();
    }

    net::HttpResponse resp = post_(target, protocol::kGetKeyParameters, body);
    if (!resp.ok()) raise_from(resp, "key request to " + target.to_string());

    protocol::Ack ack;
    if (!params.kem.empty()) {
      if (!resp.body.contains("sealed")) {
        throw Error(ErrorKind::Protocol, "tunnel peer answered outside the tunnel");
      }
      Bytes plain = tunnel::open(request_tunnel_key.view(),
                                 base64_decode(resp.body["sealed"].get<std::string>()), "ack");
      protocol::Json inner = protocol::Json::parse(plain.begin(), plain.end(), nullptr, false);
      if (inner.is_discarded()) throw Error(ErrorKind::Protocol, "sealed ack is not JSON");
      ack = protocol::ack_from_json(inner);
    } else {
      ack = protocol::ack_from_json(resp.body);
    }

    {
      std::lock_guard lock(mu_);
      if (s->phase == SessionPhase::Requesting) s->phase = SessionPhase::Collecting;
    }
    return ack;
  } catch (const Error& e) {
    fail_and_rethrow(e.what());
    throw;
  }
}

void ClientCore::receive_fragment(const keycore::EncryptedFragment& ef) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(ef.session_tag);
  if (it == sessions_.end()) {
    ++audit_.unknown_tag;
    return;
  }
  Session& s = *it->second;
  if (s.phase == SessionPhase::Complete || s.phase == SessionPhase::Failed) {
    ++audit_.duplicates;  // late re-delivery of a settled session
    return;
  }

  auto t0 = Clock::now();
  BytesView wire(ef.ciphertext);
  Bytes stripped;
  if (tunnel::is_tunneled(wire)) {
    if (s.tunnel_secret.empty()) {
      ++audit_.tunnel_orphans;
      return;
    }
    if (s.fragment_key.empty()) {
      s.fragment_key = tunnel::derive_fragment_key(s.tunnel_secret.view(), s.params.tagname);
    }
    try {
      stripped = tunnel::unwrap_fragment(s.fragment_key.view(), wire, s.params.tagname);
    } catch (const Error&) {
      ++audit_.undecryptable;
      return;
    }
    wire = BytesView(stripped);
  }

  keycore::PlainFragment frag;
  try {
    keycore::EncryptedFragment inner{ef.session_tag, Bytes(wire.begin(), wire.end()),
                                     ef.channel_id};
    frag = s.decryptor.decrypt(inner);
  } catch (const Error&) {
    ++audit_.undecryptable;
    return;
  }
  double decrypt_us = us_between(t0, Clock::now());

  if (frag.total < 1 || frag.index >= frag.total) {
    ++audit_.conflicts;
    return;
  }
  if (s.expected_total == 0) {
    s.expected_total = frag.total;
  } else if (frag.total != s.expected_total) {
    ++audit_.conflicts;
    return;
  }
  if (auto held = s.payloads.find(frag.index); held != s.payloads.end()) {
    if (held->second == frag.payload) {
      ++audit_.duplicates;
    } else {
      ++audit_.conflicts;  // same index, different bytes: keep the first
    }
    return;
  }
  s.timings.decryption_us += decrypt_us;
  s.payloads.emplace(frag.index, std::move(frag.payload));

  if (s.payloads.size() == s.expected_total) complete_locked(s);
}

void ClientCore::complete_locked(Session& s) {
  auto t0 = Clock::now();
  std::vector<keycore::PlainFragment> frags;
  frags.reserve(s.payloads.size());
  for (const auto& [index, payload] : s.payloads) {
    frags.push_back({index, s.expected_total, payload});
  }
  try {
    s.key = keycore::reconstruct_key(frags);
  } catch (const Error& e) {
    fail_locked(s, std::string("reconstruction failed: ") + e.what());
    return;
  }
  s.timings.reconstruction_us = us_between(t0, Clock::now());
  if (s.key.bits != s.params.key_bits) {
    fail_locked(s, "reconstructed key length disagrees with the request");
    return;
  }
  s.phase = SessionPhase::Complete;
  s.timings.total_us = us_between(s.started, Clock::now());
  double accounted =
      s.timings.pq_kem_us + s.timings.decryption_us + s.timings.reconstruction_us;
  s.timings.network_us = std::max(0.0, s.timings.total_us - accounted);
  for (auto& [index, payload] : s.payloads) {
    std::fill(payload.begin(), payload.end(), uint8_t{0});
  }
  s.payloads.clear();
  cv_.notify_all();
}

void ClientCore::fail_locked(Session& s, const std::string& reason) {
  s.phase = SessionPhase::Failed;
  s.failure_reason = reason;
  for (auto& [index, payload] : s.payloads) {
    std::fill(payload.begin(), payload.end(), uint8_t{0});
  }
  s.payloads.clear();
  cv_.notify_all();
}

void ClientCore::mark_session_failed(const std::string& tagname, const std::string& reason) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(tagname);
  if (it == sessions_.end()) return;
  Session& s = *it->second;
  if (s.phase == SessionPhase::Complete || s.phase == SessionPhase::Failed) return;
  fail_locked(s, reason);
}

SessionStatus ClientCore::status(const std::string& tagname) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(tagname);
  if (it == sessions_.end()) throw Error(ErrorKind::State, "no session for tag: " + tagname);
  const Session& s = *it->second;
  SessionStatus st;
  st.phase = s.phase;
  st.fragments_held = static_cast<uint16_t>(s.payloads.size());
  st.fragments_expected = s.expected_total;
  st.failure_reason = s.failure_reason;
  return st;
}

SessionPhase ClientCore::phase(const std::string& tagname) const {
  return status(tagname).phase;
}

bool ClientCore::wait_complete(const std::string& tagname, int64_t timeout_ms) {
  std::unique_lock lock(mu_);
  auto it = sessions_.find(tagname);
  if (it == sessions_.end()) throw Error(ErrorKind::State, "no session for tag: " + tagname);
  Session& s = *it->second;
  auto caller_deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    if (s.phase == SessionPhase::Complete) return true;
    if (s.phase == SessionPhase::Failed) return false;
    if (now_ms() >= s.deadline_at_ms) {
      fail_locked(s, "timeout: fragment set incomplete at deadline");
      return false;
    }
    if (Clock::now() >= caller_deadline) {
      return false;  // caller gave up first; the session keeps its deadline
    }
    auto session_deadline =
        Clock::now() + std::chrono::milliseconds(s.deadline_at_ms - now_ms());
    cv_.wait_until(lock, std::min(caller_deadline, session_deadline));
  }
}

keycore::SessionKey ClientCore::finalize(const std::string& tagname) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(tagname);
  if (it == sessions_.end()) throw Error(ErrorKind::State, "no session for tag: " + tagname);
  Session& s = *it->second;
  switch (s.phase) {
    case SessionPhase::Complete:
      return s.key;
    case SessionPhase::Failed:
      throw Error(ErrorKind::State, "session failed: " + s.failure_reason);
    default:
      throw Error(ErrorKind::State, "session not complete: " + std::string(to_string(s.phase)));
  }
}

SessionTimings ClientCore::timings(const std::string& tagname) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(tagname);
  if (it == sessions_.end()) throw Error(ErrorKind::State, "no session for tag: " + tagname);
  return it->second->timings;
}

size_t ClientCore::expire_deadlines(int64_t at_ms) {
  std::lock_guard lock(mu_);
  size_t flipped = 0;
  for (auto& [tag, s] : sessions_) {
    if ((s->phase == SessionPhase::Requesting || s->phase == SessionPhase::Collecting) &&
        at_ms >= s->deadline_at_ms) {
      fail_locked(*s, "timeout: fragment set incomplete at deadline");
      ++flipped;
    }
  }
  return flipped;
}

AuditCounters ClientCore::audit() const {
  std::lock_guard lock(mu_);
  return audit_;
}

// -- ClientReceivers ---------------------------------------------------------

ClientReceivers::ClientReceivers(ClientCore& core, channels::ChannelStats* stats)
    : core_(core), stats_(stats) {}

ClientReceivers::~ClientReceivers() { close(); }

std::unique_ptr<net::JsonServer> ClientReceivers::make_receiver(const std::string& channel_id) {
  auto server = std::make_unique<net::JsonServer>();
  server->route(protocol::kReceiveKeyFragment,
                [this, channel_id](const protocol::Json& body) {
                  keycore::EncryptedFragment ef = protocol::fragment_from_json(body);
                  if (ef.channel_id.empty()) ef.channel_id = channel_id;
                  if (stats_ && !ef.channel_id.empty()) stats_->on_received(ef.channel_id);
                  core_.receive_fragment(ef);
                  return std::pair<int, protocol::Json>{200, protocol::Json{{"status", "ok"}}};
                });
  server->route(protocol::kSessionFailed, [this](const protocol::Json& body) {
    std::string tag = body.value("tagname", "");
    std::string reason = body.value("reason", "upstream reported failure");
    if (!tag.empty()) core_.mark_session_failed(tag, reason);
    return std::pair<int, protocol::Json>{200, protocol::Json{{"status", "ok"}}};
  });
  return server;
}

void ClientReceivers::open_channels(channels::ChannelSet& channel_set) {
  for (auto& ch : channel_set) {
    auto server = make_receiver(ch.channel_id);
    ch.port = server->start(ch.host, ch.port);
    servers_.push_back(std::move(server));
  }
}

protocol::Endpoint ClientReceivers::open_return(const std::string& host) {
  auto server = make_receiver("");
  int port = server->start(host, 0);
  servers_.push_back(std::move(server));
  return protocol::Endpoint{host, port};
}

void ClientReceivers::close() {
  for (auto& s : servers_) s->stop();
  servers_.clear();
}

}  // namespace keymux::client
