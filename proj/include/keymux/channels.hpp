// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Heterogeneous-medium channel abstraction.  Media are simulated: each
// channel is a local HTTP endpoint tagged with a medium type, an optional
// latency model, and an adversary-tap flag used by the security tests.
// Fragment-to-channel assignment is uniform i.i.d. per fragment.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "keymux/common.hpp"
#include "keymux/keycore.hpp"
#include "keymux/rng.hpp"

namespace keymux::channels {

// -- Domain types -----------------------------------------------------------

enum class MediumType : uint8_t { WiFi, Bluetooth, NFC, Cellular, Ethernet, LogicalPort };

/// Stable ordinal of a medium (its index in the capacity model).
int medium_index(MediumType m);
std::string to_string(MediumType m);
MediumType medium_from_string(const std::string& s);

/// Simulated transit-delay distribution.
struct LatencyModel {
  enum class Kind : uint8_t { Constant, Uniform, Lognormal } kind = Kind::Constant;
  // Constant: a = delay_ms. Uniform: [a, b] ms. Lognormal: a = mu, b = sigma
  // of the underlying normal, sampled value in ms.
  double a = 0.0;
  double b = 0.0;

  static LatencyModel constant(double delay_ms) { return {Kind::Constant, delay_ms, 0.0}; }
  static LatencyModel uniform(double low_ms, double high_ms);
  static LatencyModel lognormal(double mu, double sigma);

  double sample(Rng& rng) const;  // milliseconds, >= 0
};

struct ChannelDescriptor {
  std::string channel_id;
  MediumType medium = MediumType::LogicalPort;
  std::string host = "127.0.0.1";
  int port = 0;
  LatencyModel latency;
  bool tapped = false;
};

/// Ordered channel list; channel_ids must be unique.
using ChannelSet = std::vector<ChannelDescriptor>;

void validate_channel_set(const ChannelSet& channels);
const ChannelDescriptor& find_channel(const ChannelSet& channels, const std::string& channel_id);

/// channel_ids[i] is the channel carrying fragment index i.
struct DispatchAssignment {
  std::vector<std::string> channel_ids;
};

struct DeliveryReceipt {
  std::string channel_id;
  double transit_ms = 0.0;
  bool delivered = false;
  std::string error;
};

// -- Adversary instrumentation ----------------------------------------------

/// One tapped wire observation: the ciphertext bytes actually transmitted,
/// never any plaintext.
struct CaptureEntry {
  std::string channel_id;
  MediumType medium = MediumType::LogicalPort;
  std::string session_tag;
  Bytes ciphertext;
};

class CaptureLog {
 public:
  void append(CaptureEntry entry);
  std::vector<CaptureEntry> snapshot() const;
  size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<CaptureEntry> entries_;
};

/// Per-channel send/receive/error counters (conservation checks).
class ChannelStats {
 public:
  struct Counters {
    uint64_t sent = 0;
    uint64_t received = 0;
    uint64_t errors = 0;
  };

  void on_sent(const std::string& channel_id);
  void on_received(const std::string& channel_id);
  void on_error(const std::string& channel_id);
  std::map<std::string, Counters> snapshot() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Counters> counters_;
};

// -- Operations --------------------------------------------------------------

/// Uniform i.i.d. channel per fragment; no load balancing by design.
DispatchAssignment assign_channels(uint16_t num_fragments, const ChannelSet& channels, Rng& rng);

/// Delivery backend: HTTP in deployment, a direct callback in in-process
/// harnesses.  Implementations must never inspect the fragment beyond
/// serializing it.
class FragmentCarrier {
 public:
  virtual ~FragmentCarrier() = default;
  virtual void deliver(const keycore::EncryptedFragment& ef, const ChannelDescriptor& channel) = 0;
};

/// Direct in-process delivery to a sink function.
class DirectCarrier final : public FragmentCarrier {
 public:
  using Sink = std::function<void(const keycore::EncryptedFragment&, const ChannelDescriptor&)>;
  explicit DirectCarrier(Sink sink) : sink_(std::move(sink)) {}
  void deliver(const keycore::EncryptedFragment& ef, const ChannelDescriptor& channel) override;

 private:
  Sink sink_;
};

struct TransportOptions {
  bool realtime_delays = false;  // sleep the sampled delay instead of only reporting it
};

/// Sends fragments over channels: samples the latency model, feeds the
/// adversary tap, updates counters, and hands the bytes to the carrier.
class ChannelTransport {
 public:
  ChannelTransport(FragmentCarrier& carrier, Rng& latency_rng, CaptureLog* taps = nullptr,
                   ChannelStats* stats = nullptr, TransportOptions options = {});

  /// Throws Error{Delivery} on carrier failure (after recording the error).
  DeliveryReceipt send_fragment(const keycore::EncryptedFragment& ef,
                                const ChannelDescriptor& channel);

 private:
  FragmentCarrier& carrier_;
  Rng& rng_;
  CaptureLog* taps_;
  ChannelStats* stats_;
  TransportOptions options_;
};

}  // namespace keymux::channels
