// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/qkms.hpp"

#include <chrono>

#include "keymux/tunnel.hpp"

namespace keymux::qkms {

namespace {

using Clock = std::chrono::steady_clock;

double us_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

}  // namespace

int64_t steady_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now().time_since_epoch())
      .count();
}

QkmsCore::QkmsCore(QkmsConfig cfg, channels::ChannelTransport& transport, Rng& rng)
    : cfg_(std::move(cfg)), transport_(transport), rng_(rng) {}

protocol::Ack QkmsCore::handle_key_request(const protocol::KeyRequest& req, int64_t now_ms,
                                           RequestContext ctx) {
  protocol::validate(req);
  PartyArrival arrival{req, req.channels, std::move(ctx), now_ms};
  return admit(std::move(arrival), now_ms);
}

protocol::Ack QkmsCore::handle_pool_request(const protocol::PoolPayload& payload, int64_t now_ms,
                                            RequestContext ctx) {
  if (payload.path.empty()) {
    throw Error(ErrorKind::Protocol, "pool payload carries no visited proxies");
  }
  if (payload.hop_count != payload.path.size()) {
    throw Error(ErrorKind::Protocol, "pool hop count disagrees with path length");
  }
  if (payload.entry_id != payload.path.front().proxy_id) {
    throw Error(ErrorKind::Protocol, "pool entry id is not the first path entry");
  }
  const channels::ChannelSet& effective =
      cfg_.dispatch_to_entry ? payload.path.front().channels : payload.path.back().channels;
  channels::validate_channel_set(effective);

  protocol::KeyRequest req = payload.request;
  // The client behind a pool may present no channels of its own; everything
  // else must hold.
  if (req.tagname.empty()) throw Error(ErrorKind::Parameter, "empty tagname");
  if (req.num_splits < 1) throw Error(ErrorKind::Parameter, "num_splits must be >= 1");
  if (req.public_key.empty()) throw Error(ErrorKind::Parameter, "missing public key");
  cryptobox::RsaPublicKey::from_der(req.public_key);

  PartyArrival arrival{std::move(req), effective, std::move(ctx), now_ms};
  return admit(std::move(arrival), now_ms);
}

protocol::Ack QkmsCore::admit(PartyArrival arrival, int64_t now_ms) {
  // By value: `arrival` is moved into the pending table below.
  const std::string tag = arrival.request.tagname;
  if (std::find(cfg_.allowed_bits.begin(), cfg_.allowed_bits.end(), arrival.request.key_bits) ==
      cfg_.allowed_bits.end()) {
    throw Error(ErrorKind::Parameter,
                "key_bits not in the accepted set: " + std::to_string(arrival.request.key_bits));
  }
  if (arrival.request.num_splits > arrival.request.key_bits / 8) {
    throw Error(ErrorKind::Parameter, "num_splits exceeds key byte length");
  }

  std::optional<PartyArrival> partner;
  {
    std::lock_guard lock(mu_);
    if (auto done = completed_.find(tag); done != completed_.end()) {
      throw Error(ErrorKind::Protocol, "tagname already served two parties: " + tag);
    }
    auto it = pending_.find(tag);
    if (it != pending_.end() && it->second.expiry_ms < now_ms) {
      pending_.erase(it);  // expired entry: treat this arrival as the first
      it = pending_.end();
    }
    if (it == pending_.end()) {
      Pending p;
      p.first = std::move(arrival);
      p.expiry_ms = now_ms + cfg_.pairing_window_ms;
      pending_.emplace(tag, std::move(p));
      return {protocol::Ack::Status::Waiting, "awaiting partner for tagname"};
    }
    if (it->second.first.request.key_bits != arrival.request.key_bits) {
      throw Error(ErrorKind::Parameter,
                  "key_bits mismatch between the two parties of " + tag);
    }
    // Pairing is atomic: the tag moves to completed before the lock drops,
    // so a racing third arrival gets a duplicate error, never a second key.
    partner = std::move(it->second.first);
    pending_.erase(it);
    completed_.emplace(tag, now_ms);
  }

  auto t0 = Clock::now();
  keycore::SessionKey key = keycore::generate_key(arrival.request.key_bits, rng_, cfg_.allowed_bits);
  double keygen_us = us_between(t0, Clock::now());

  auto notify_failure = [&](const std::string& reason) {
    if (!notifier_) return;
    for (const PartyArrival* p : {&*partner, &arrival}) {
      if (p->effective_channels.empty()) continue;
      const auto& ch = p->effective_channels.front();
      notifier_(protocol::Endpoint{ch.host, ch.port}, tag, reason);
    }
  };

  DispatchReport first_report, second_report;
  try {
    first_report = dispatch_party(key, *partner, keygen_us);
    second_report = dispatch_party(key, arrival, keygen_us);
  } catch (const Error& e) {
    notify_failure(e.what());
    throw;  // the session key dies with this scope
  }

  {
    std::lock_guard lock(mu_);
    reports_.push_back(std::move(first_report));
    reports_.push_back(std::move(second_report));
  }
  return {protocol::Ack::Status::Dispatched, "fragments dispatched to both parties"};
}

DispatchReport QkmsCore::dispatch_party(const keycore::SessionKey& key, const PartyArrival& party,
                                        double key_generation_us) {
  auto t0 = Clock::now();
  DispatchReport report;
  report.tagname = party.request.tagname;
  report.party_label = party.request.party_label;
  report.shuffled = party.request.shuffle;
  report.pq_tunnel = party.ctx.pq_tunnel;
  report.encrypt_mode = cfg_.encrypt_mode;
  report.timings.key_generation_us = key_generation_us;

  auto proc0 = Clock::now();
  std::vector<keycore::PlainFragment> frags =
      keycore::fragment_key(key, party.request.num_splits);
  if (party.request.shuffle) frags = keycore::shuffle_fragments(std::move(frags), rng_);

  auto recipient = cryptobox::RsaPublicKey::from_der(party.request.public_key);
  keycore::FragmentEncryptor encryptor(recipient, party.request.tagname, cfg_.encrypt_mode);
  SecureBytes fragment_layer_key;
  if (party.ctx.pq_tunnel) {
    fragment_layer_key =
        tunnel::derive_fragment_key(party.ctx.tunnel_secret.view(), party.request.tagname);
  }
  std::vector<keycore::EncryptedFragment> encrypted;
  encrypted.reserve(frags.size());
  for (const auto& f : frags) {
    keycore::EncryptedFragment ef = encryptor.encrypt(f);
    if (party.ctx.pq_tunnel) {
      ef.ciphertext = tunnel::wrap_fragment(fragment_layer_key.view(), ef.ciphertext,
                                            party.request.tagname);
    }
    encrypted.push_back(std::move(ef));
  }
  report.assignment =
      channels::assign_channels(static_cast<uint16_t>(encrypted.size()),
                                party.effective_channels, rng_);
  report.num_fragments = static_cast<uint16_t>(encrypted.size());
  auto proc1 = Clock::now();
  report.timings.key_processing_us = us_between(proc0, proc1);

  for (size_t i = 0; i < encrypted.size(); ++i) {
    const auto& channel =
        channels::find_channel(party.effective_channels, report.assignment.channel_ids[i]);
    transport_.send_fragment(encrypted[i], channel);  // throws Error{Delivery} on failure
  }
  auto t1 = Clock::now();
  report.timings.network_us = us_between(proc1, t1);
  report.timings.wall_us = us_between(t0, t1);
  return report;
}

size_t QkmsCore::purge_expired(int64_t now_ms) {
  std::lock_guard lock(mu_);
  size_t purged = 0;
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (it->second.expiry_ms < now_ms) {
      it = pending_.erase(it);
      ++purged;
    } else {
      ++it;
    }
  }
  // Completed tags age out after ten pairing windows; they only exist to
  // catch late duplicate arrivals.
  for (auto it = completed_.begin(); it != completed_.end();) {
    if (it->second + 10 * cfg_.pairing_window_ms < now_ms) {
      it = completed_.erase(it);
    } else {
      ++it;
    }
  }
  return purged;
}

size_t QkmsCore::pending_count() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

std::vector<DispatchReport> QkmsCore::reports() const {
  std::lock_guard lock(mu_);
  return reports_;
}

void QkmsCore::clear_reports() {
  std::lock_guard lock(mu_);
  reports_.clear();
}

Bytes QkmsCore::state_image() const {
  std::lock_guard lock(mu_);
  Bytes image;
  auto put = [&image](const std::string& s) {
    image.insert(image.end(), s.begin(), s.end());
    image.push_back(0);
  };
  for (const auto& [tag, pending] : pending_) {
    put(tag);
    put(pending.first.request.party_label);
    const Bytes& pk = pending.first.request.public_key;
    image.insert(image.end(), pk.begin(), pk.end());
    for (const auto& ch : pending.first.effective_channels) put(ch.channel_id);
    const Bytes& ts = pending.first.ctx.tunnel_secret.bytes();
    image.insert(image.end(), ts.begin(), ts.end());
  }
  for (const auto& [tag, when] : completed_) {
    put(tag + "@" + std::to_string(when));
  }
  for (const auto& r : reports_) {
    put(r.tagname);
    put(r.party_label);
    for (const auto& id : r.assignment.channel_ids) put(id);
  }
  return image;
}

// ---------------------------------------------------------------------------

QkmsServer::QkmsServer(QkmsCore& core, std::vector<std::unique_ptr<kem::KemProvider>> kems,
                       Rng& rng)
    : core_(core), rng_(rng) {
  for (auto& k : kems) {
    std::string name = k->name();
    kems_.emplace(std::move(name), std::move(k));
  }
  server_.route(protocol::kGetKeyParameters,
                [this](const protocol::Json& body) { return on_key_parameters(body); });
  server_.route(protocol::kKemHandshake,
                [this](const protocol::Json& body) { return on_kem_handshake(body); });
}

QkmsServer::~QkmsServer() { stop(); }

int QkmsServer::start(const std::string& host, int port) { return server_.start(host, port); }

void QkmsServer::stop() { server_.stop(); }

std::pair<int, protocol::Json> QkmsServer::on_key_parameters(const protocol::Json& body) {
  int64_t now = steady_now_ms();

  if (body.contains("sealed")) {
    // Tunnel-protected request: unseal under the handshake's request key.
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
    if (inner.is_discarded()) {
      throw Error(ErrorKind::Protocol, "sealed body is not JSON");
    }
    protocol::KeyRequest req = protocol::key_request_from_json(inner);
    RequestContext ctx;
    ctx.pq_tunnel = true;
    ctx.tunnel_secret = std::move(secret);
    protocol::Ack ack = core_.handle_key_request(req, now, std::move(ctx));
    Bytes sealed_ack =
        tunnel::seal(k0.view(), to_bytes(protocol::to_json(ack).dump()), "ack");
    return {200, protocol::Json{{"sealed", base64_encode(sealed_ack)}}};
  }

  if (body.contains("path")) {
    protocol::PoolPayload payload = protocol::pool_payload_from_json(body);
    protocol::Ack ack = core_.handle_pool_request(payload, now);
    return {200, protocol::to_json(ack)};
  }

  protocol::KeyRequest req = protocol::key_request_from_json(body);
  protocol::Ack ack = core_.handle_key_request(req, now);
  return {200, protocol::to_json(ack)};
}

std::pair<int, protocol::Json> QkmsServer::on_kem_handshake(const protocol::Json& body) {
  protocol::KemHandshakeRequest req = protocol::kem_handshake_request_from_json(body);
  auto it = kems_.find(req.kem);
  if (it == kems_.end()) {
    throw Error(ErrorKind::Parameter, "unsupported KEM: " + req.kem);
  }
  if (req.handshake_id.empty()) {
    throw Error(ErrorKind::Protocol, "empty handshake id");
  }
  kem::Encapsulation enc = it->second->encapsulate(req.encap_key, rng_);
  {
    std::lock_guard lock(hs_mu_);
    handshakes_[req.handshake_id] = std::move(enc.shared_secret);
  }
  return {200, protocol::to_json(protocol::KemHandshakeResponse{enc.ciphertext})};
}

}  // namespace keymux::qkms
