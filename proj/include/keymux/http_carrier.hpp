// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// HTTP delivery backend for the channel transport: each fragment is POSTed
// to the receiver bound at the channel's host:port.

#pragma once

#include "keymux/channels.hpp"
#include "keymux/net_http.hpp"

namespace keymux::net {

class HttpFragmentCarrier final : public channels::FragmentCarrier {
 public:
  explicit HttpFragmentCarrier(HttpPoster& poster) : poster_(poster) {}

  /// Throws Error{Delivery} when the receiver is unreachable or rejects.
  void deliver(const keycore::EncryptedFragment& ef,
               const channels::ChannelDescriptor& channel) override;

 private:
  HttpPoster& poster_;
};

}  // namespace keymux::net
