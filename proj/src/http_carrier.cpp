// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/http_carrier.hpp"

#include "keymux/protocol.hpp"

namespace keymux::net {

void HttpFragmentCarrier::deliver(const keycore::EncryptedFragment& ef,
                                  const channels::ChannelDescriptor& channel) {
  HttpResponse resp = poster_.post_json(channel.host, channel.port,
                                        protocol::kReceiveKeyFragment, protocol::to_json(ef));
  if (!resp.ok()) {
    throw Error(ErrorKind::Delivery, "channel " + channel.channel_id + " -> " + channel.host +
                                         ":" + std::to_string(channel.port) + " failed (" +
                                         (resp.status ? std::to_string(resp.status) : resp.error) +
                                         ")");
  }
}

}  // namespace keymux::net
