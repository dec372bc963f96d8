// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/protocol.hpp"

namespace keymux::protocol {

namespace {

// json.get<T> with a protocol error instead of a nlohmann exception.
template <typename T>
T field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorKind::Protocol, std::string("missing field: ") + name);
  }
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorKind::Protocol, std::string("malformed field: ") + name);
  }
}

}  // namespace

Endpoint Endpoint::parse(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= s.size()) {
    throw Error(ErrorKind::Parameter, "endpoint must be host:port, got: " + s);
  }
  Endpoint ep;
  ep.host = s.substr(0, colon);
  try {
    ep.port = std::stoi(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parameter, "bad port in endpoint: " + s);
  }
  if (ep.port <= 0 || ep.port > 65535) {
    throw Error(ErrorKind::Parameter, "port out of range in endpoint: " + s);
  }
  return ep;
}

void validate(const KeyRequest& req) {
  if (req.tagname.empty()) throw Error(ErrorKind::Parameter, "empty tagname");
  if (req.num_splits < 1) throw Error(ErrorKind::Parameter, "num_splits must be >= 1");
  if (req.key_bits == 0 || req.key_bits % 8 != 0) {
    throw Error(ErrorKind::Parameter, "key_bits must be a positive multiple of 8");
  }
  if (req.channels.empty()) throw Error(ErrorKind::Parameter, "request has no channels");
  channels::validate_channel_set(req.channels);
  if (req.public_key.empty()) throw Error(ErrorKind::Parameter, "missing public key");
  cryptobox::RsaPublicKey::from_der(req.public_key);  // throws if unparseable
}

Json to_json(const channels::LatencyModel& m) {
  using Kind = channels::LatencyModel::Kind;
  switch (m.kind) {
    case Kind::Constant:
      return {{"kind", "constant"}, {"delay_ms", m.a}};
    case Kind::Uniform:
      return {{"kind", "uniform"}, {"low_ms", m.a}, {"high_ms", m.b}};
    case Kind::Lognormal:
      return {{"kind", "lognormal"}, {"mu", m.a}, {"sigma", m.b}};
  }
  throw Error(ErrorKind::Parameter, "bad latency model");
}

channels::LatencyModel latency_from_json(const Json& j) {
  auto kind = field<std::string>(j, "kind");
  if (kind == "constant") return channels::LatencyModel::constant(field<double>(j, "delay_ms"));
  if (kind == "uniform") {
    return channels::LatencyModel::uniform(field<double>(j, "low_ms"), field<double>(j, "high_ms"));
  }
  if (kind == "lognormal") {
    return channels::LatencyModel::lognormal(field<double>(j, "mu"), field<double>(j, "sigma"));
  }
  throw Error(ErrorKind::Protocol, "unknown latency model kind: " + kind);
}

Json to_json(const channels::ChannelDescriptor& ch) {
  return {{"channel_id", ch.channel_id}, {"medium", channels::to_string(ch.medium)},
          {"host", ch.host},             {"port", ch.port},
          {"latency_model", to_json(ch.latency)},  {"tapped", ch.tapped}};
}

channels::ChannelDescriptor channel_from_json(const Json& j) {
  channels::ChannelDescriptor ch;
  ch.channel_id = field<std::string>(j, "channel_id");
  ch.medium = channels::medium_from_string(field<std::string>(j, "medium"));
  ch.host = field<std::string>(j, "host");
  ch.port = field<int>(j, "port");
  if (j.contains("latency_model")) ch.latency = latency_from_json(j.at("latency_model"));
  if (j.contains("tapped")) ch.tapped = field<bool>(j, "tapped");
  return ch;
}

Json to_json(const channels::ChannelSet& channels) {
  Json arr = Json::array();
  for (const auto& ch : channels) arr.push_back(to_json(ch));
  return arr;
}

channels::ChannelSet channel_set_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Protocol, "channels must be an array");
  channels::ChannelSet set;
  for (const auto& item : j) set.push_back(channel_from_json(item));
  return set;
}

Json to_json(const KeyRequest& req) {
  return {{"tagname", req.tagname},
          {"key_bits", req.key_bits},
          {"num_splits", req.num_splits},
          {"shuffle", req.shuffle},
          {"channels", to_json(req.channels)},
          {"public_key", base64_encode(req.public_key)},
          {"party_label", req.party_label}};
}

KeyRequest key_request_from_json(const Json& j) {
  KeyRequest req;
  req.tagname = field<std::string>(j, "tagname");
  req.key_bits = field<uint32_t>(j, "key_bits");
  req.num_splits = field<uint16_t>(j, "num_splits");
  req.shuffle = field<bool>(j, "shuffle");
  req.channels = channel_set_from_json(j.contains("channels") ? j.at("channels") : Json());
  req.public_key = base64_decode(field<std::string>(j, "public_key"));
  req.party_label = field<std::string>(j, "party_label");
  return req;
}

Json to_json(const keycore::EncryptedFragment& ef) {
  return {{"session_tag", ef.session_tag}, {"ciphertext", base64_encode(ef.ciphertext)}};
}

keycore::EncryptedFragment fragment_from_json(const Json& j) {
  keycore::EncryptedFragment ef;
  ef.session_tag = field<std::string>(j, "session_tag");
  ef.ciphertext = base64_decode(field<std::string>(j, "ciphertext"));
  return ef;
}

Json to_json(const Ack& ack) {
  return {{"status", ack.status == Ack::Status::Waiting ? "waiting" : "dispatched"},
          {"message", ack.message}};
}

Ack ack_from_json(const Json& j) {
  Ack ack;
  auto status = field<std::string>(j, "status");
  if (status == "waiting") {
    ack.status = Ack::Status::Waiting;
  } else if (status == "dispatched") {
    ack.status = Ack::Status::Dispatched;
  } else {
    throw Error(ErrorKind::Protocol, "unknown ack status: " + status);
  }
  if (j.contains("message")) ack.message = field<std::string>(j, "message");
  return ack;
}

Json to_json(const PoolPayload& payload) {
  Json path = Json::array();
  for (const auto& entry : payload.path) {
    path.push_back({{"proxy_id", entry.proxy_id}, {"channels", to_json(entry.channels)}});
  }
  return {{"request", to_json(payload.request)},
          {"entry_id", payload.entry_id},
          {"hop_count", payload.hop_count},
          {"path", path}};
}

PoolPayload pool_payload_from_json(const Json& j) {
  PoolPayload payload;
  payload.request = key_request_from_json(field<Json>(j, "request"));
  payload.entry_id = field<std::string>(j, "entry_id");
  payload.hop_count = field<uint32_t>(j, "hop_count");
  const Json& path = j.contains("path") ? j.at("path") : Json::array();
  for (const auto& item : path) {
    PathEntry entry;
    entry.proxy_id = field<std::string>(item, "proxy_id");
    entry.channels = channel_set_from_json(item.contains("channels") ? item.at("channels") : Json());
    payload.path.push_back(std::move(entry));
  }
  return payload;
}

Json to_json(const PoolReturn& ret) {
  return {{"return_path", ret.return_path}, {"fragment", to_json(ret.fragment)}};
}

PoolReturn pool_return_from_json(const Json& j) {
  PoolReturn ret;
  ret.return_path = field<std::vector<std::string>>(j, "return_path");
  ret.fragment = fragment_from_json(field<Json>(j, "fragment"));
  return ret;
}

Json to_json(const KemHandshakeRequest& req) {
  return {{"kem", req.kem},
          {"handshake_id", req.handshake_id},
          {"encap_key", base64_encode(req.encap_key)}};
}

KemHandshakeRequest kem_handshake_request_from_json(const Json& j) {
  KemHandshakeRequest req;
  req.kem = field<std::string>(j, "kem");
  req.handshake_id = field<std::string>(j, "handshake_id");
  req.encap_key = base64_decode(field<std::string>(j, "encap_key"));
  return req;
}

Json to_json(const KemHandshakeResponse& resp) {
  return {{"kem_ciphertext", base64_encode(resp.kem_ciphertext)}};
}

KemHandshakeResponse kem_handshake_response_from_json(const Json& j) {
  KemHandshakeResponse resp;
  resp.kem_ciphertext = base64_decode(field<std::string>(j, "kem_ciphertext"));
  return resp;
}

Json to_json(const SealedEnvelope& env) {
  return {{"handshake_id", env.handshake_id}, {"sealed", base64_encode(env.sealed)}};
}

SealedEnvelope sealed_envelope_from_json(const Json& j) {
  SealedEnvelope env;
  env.handshake_id = field<std::string>(j, "handshake_id");
  env.sealed = base64_decode(field<std::string>(j, "sealed"));
  return env;
}

Json error_body(ErrorKind kind, const std::string& message) {
  return {{"error", message}, {"kind", to_string(kind)}};
}

}  // namespace keymux::protocol
