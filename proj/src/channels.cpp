// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/channels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

namespace keymux::channels {

namespace {
constexpr const char* kMediumNames[] = {"WiFi", "Bluetooth", "NFC",
                                        "Cellular", "Ethernet", "LogicalPort"};
}

int medium_index(MediumType m) { return static_cast<int>(m); }

std::string to_string(MediumType m) { return kMediumNames[static_cast<int>(m)]; }

MediumType medium_from_string(const std::string& s) {
  for (int i = 0; i < 6; ++i) {
    if (s == kMediumNames[i]) return static_cast<MediumType>(i);
  }
  throw Error(ErrorKind::Parameter, "unknown medium type: " + s);
}

LatencyModel LatencyModel::uniform(double low_ms, double high_ms) {
  if (low_ms < 0 || high_ms < low_ms) {
    throw Error(ErrorKind::Parameter, "bad uniform latency bounds");
  }
  return {Kind::Uniform, low_ms, high_ms};
}

LatencyModel LatencyModel::lognormal(double mu, double sigma) {
  if (sigma < 0) throw Error(ErrorKind::Parameter, "negative lognormal sigma");
  return {Kind::Lognormal, mu, sigma};
}

double LatencyModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Constant:
      return a;
    case Kind::Uniform:
      return a + (b - a) * rng.uniform01();
    case Kind::Lognormal:
      return std::exp(a + b * rng.normal());
  }
  return 0.0;
}

void validate_channel_set(const ChannelSet& channels) {
  if (channels.empty()) {
    throw Error(ErrorKind::Config, "channel set is empty");
  }
  std::set<std::string> ids;
  for (const auto& ch : channels) {
    if (ch.channel_id.empty()) throw Error(ErrorKind::Config, "channel with empty id");
    if (!ids.insert(ch.channel_id).second) {
      throw Error(ErrorKind::Config, "duplicate channel id: " + ch.channel_id);
    }
    if (ch.latency.a < 0) throw Error(ErrorKind::Config, "negative latency parameter");
  }
}

const ChannelDescriptor& find_channel(const ChannelSet& channels, const std::string& channel_id) {
  auto it = std::find_if(channels.begin(), channels.end(),
                         [&](const ChannelDescriptor& ch) { return ch.channel_id == channel_id; });
  if (it == channels.end()) {
    throw Error(ErrorKind::Config, "unknown channel id: " + channel_id);
  }
  return *it;
}

void CaptureLog::append(CaptureEntry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<CaptureEntry> CaptureLog::snapshot() const {
  std::lock_guard lock(mu_);
  return entries_;
}

size_t CaptureLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void CaptureLog::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

void ChannelStats::on_sent(const std::string& channel_id) {
  std::lock_guard lock(mu_);
  ++counters_[channel_id].sent;
}

void ChannelStats::on_received(const std::string& channel_id) {
  std::lock_guard lock(mu_);
  ++counters_[channel_id].received;
}

void ChannelStats::on_error(const std::string& channel_id) {
  std::lock_guard lock(mu_);
  ++counters_[channel_id].errors;
}

std::map<std::string, ChannelStats::Counters> ChannelStats::snapshot() const {
  std::lock_guard lock(mu_);
  return counters_;
}

DispatchAssignment assign_channels(uint16_t num_fragments, const ChannelSet& channels, Rng& rng) {
  validate_channel_set(channels);
  if (num_fragments == 0) throw Error(ErrorKind::Parameter, "no fragments to assign");
  DispatchAssignment assignment;
  assignment.channel_ids.reserve(num_fragments);
  for (uint16_t i = 0; i < num_fragments; ++i) {
    size_t pick = static_cast<size_t>(rng.below(channels.size()));
    assignment.channel_ids.push_back(channels[pick].channel_id);
  }
  return assignment;
}

void DirectCarrier::deliver(const keycore::EncryptedFragment& ef,
                            const ChannelDescriptor& channel) {
  sink_(ef, channel);
}

ChannelTransport::ChannelTransport(FragmentCarrier& carrier, Rng& latency_rng, CaptureLog* taps,
                                   ChannelStats* stats, TransportOptions options)
    : carrier_(carrier), rng_(latency_rng), taps_(taps), stats_(stats), options_(options) {}

DeliveryReceipt ChannelTransport::send_fragment(const keycore::EncryptedFragment& ef,
                                                const ChannelDescriptor& channel) {
  double delay_ms = channel.latency.sample(rng_);
  if (options_.realtime_delays && delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
  }
  if (channel.tapped && taps_) {
    taps_->append({channel.channel_id, channel.medium, ef.session_tag, ef.ciphertext});
  }
  auto t0 = std::chrono::steady_clock::now();
  try {
    keycore::EncryptedFragment routed = ef;
    routed.channel_id = channel.channel_id;
    carrier_.deliver(routed, channel);
  } catch (const std::exception& e) {
    if (stats_) stats_->on_error(channel.channel_id);
    throw Error(ErrorKind::Delivery,
                "fragment delivery failed on " + channel.channel_id + ": " + e.what());
  }
  auto t1 = std::chrono::steady_clock::now();
  if (stats_) stats_->on_sent(channel.channel_id);
  DeliveryReceipt receipt;
  receipt.channel_id = channel.channel_id;
  receipt.transit_ms =
      delay_ms + std::chrono::duration<double, std::milli>(t1 - t0).count();
  receipt.delivered = true;
  return receipt;
}

}  // namespace keymux::channels
