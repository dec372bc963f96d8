// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/net_http.hpp"

#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

namespace keymux::net {

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter:
    case ErrorKind::Protocol:
    case ErrorKind::Mode:
    case ErrorKind::Config:
      return 400;
    case ErrorKind::Crypto:
      return 400;
    case ErrorKind::State:
      return 409;
    case ErrorKind::Delivery:
    case ErrorKind::Upstream:
      return 502;
  }
  return 500;
}

// ---------------------------------------------------------------------------

namespace {

void configure(httplib::Client& cli) {
  cli.set_connection_timeout(5, 0);
  cli.set_read_timeout(30, 0);
  cli.set_keep_alive(true);
  // Small request/response pairs on loopback: without TCP_NODELAY every
  // roundtrip eats a Nagle / delayed-ACK stall (~40ms).
  cli.set_tcp_nodelay(true);
}

}  // namespace

struct HttpPoster::Impl {
  // One cached connection per endpoint, each with its own lock.  Posts never
  // wait on a busy connection: a roundtrip can trigger nested posts through
  // the same poster (a proxied request fans out fragments while the request
  // leg is still in flight), so waiting here could cycle.  Contended posts
  // fall back to a one-shot client instead.
  struct Entry {
    std::mutex mu;
    httplib::Client client;
    Entry(const std::string& host, int port) : client(host, port) { configure(client); }
  };

  std::mutex map_mu;  // guards the map only, never spans a roundtrip
  std::map<std::string, std::unique_ptr<Entry>> entries;

  Entry& entry_for(const std::string& host, int port) {
    std::string key = host + ":" + std::to_string(port);
    std::lock_guard lock(map_mu);
    auto it = entries.find(key);
    if (it == entries.end()) {
      it = entries.emplace(key, std::make_unique<Entry>(host, port)).first;
    }
    return *it->second;
  }
};

HttpPoster::HttpPoster() : impl_(std::make_unique<Impl>()) {}
HttpPoster::~HttpPoster() = default;

HttpResponse HttpPoster::post_json(const std::string& host, int port, const std::string& path,
                                   const Json& body) {
  HttpResponse out;
  std::string payload = body.dump();
  httplib::Result res = [&] {
    Impl::Entry& entry = impl_->entry_for(host, port);
    std::unique_lock lock(entry.mu, std::try_to_lock);
    if (lock.owns_lock()) {
      return entry.client.Post(path, payload, "application/json");
    }
    httplib::Client fresh(host, port);
    configure(fresh);
    return fresh.Post(path, payload, "application/json");
  }();
  if (!res) {
    out.error = "transport failure: " + httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  if (!res->body.empty()) {
    out.body = Json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (out.body.is_discarded()) {
      out.status = 0;
      out.error = "response body is not JSON";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct JsonServer::Impl {
  httplib::Server server;
  std::thread worker;
  int bound_port = 0;
  bool started = false;
};

JsonServer::JsonServer() : impl_(std::make_unique<Impl>()) {}

JsonServer::~JsonServer() { stop(); }

void JsonServer::route(const std::string& path, Handler handler) {
  impl_->server.Post(path, [handler = std::move(handler)](const httplib::Request& req,
                                                          httplib::Response& res) {
    Json body;
    if (!req.body.empty()) {
      body = Json::parse(req.body, nullptr, /*allow_exceptions=*/false);
      if (body.is_discarded()) {
        res.status = 400;
        res.set_content(Json({{"error", "body is not JSON"}, {"kind", "protocol"}}).dump(),
                        "application/json");
        return;
      }
    }
    try {
      auto [status, reply] = handler(body);
      res.status = status;
      res.set_content(reply.dump(), "application/json");
    } catch (const Error& e) {
      res.status = status_for(e.kind());
      res.set_content(Json({{"error", e.what()}, {"kind", to_string(e.kind())}}).dump(),
                      "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(Json({{"error", e.what()}, {"kind", "internal"}}).dump(),
                      "application/json");
    }
  });
}

int JsonServer::start(const std::string& host, int port) {
  if (impl_->started) throw Error(ErrorKind::State, "server already started");
  impl_->server.set_tcp_nodelay(true);
  if (port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(host);
    if (impl_->bound_port <= 0) throw Error(ErrorKind::Config, "failed to bind ephemeral port");
  } else {
    if (!impl_->server.bind_to_port(host, port)) {
      throw Error(ErrorKind::Config, "failed to bind " + host + ":" + std::to_string(port));
    }
    impl_->bound_port = port;
  }
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->started = true;
  return impl_->bound_port;
}

void JsonServer::stop() {
  if (!impl_->started) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
  impl_->started = false;
}

int JsonServer::port() const { return impl_->bound_port; }

bool JsonServer::running() const { return impl_->started && impl_->server.is_running(); }

}  // namespace keymux::net
