// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal JSON-over-HTTP plumbing: a threaded server with per-path handlers
// and a connection-caching poster.  The HTTP library is confined to the
// implementation file; everything above this layer speaks JSON values.

#pragma once

#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "keymux/common.hpp"

namespace keymux::net {

using Json = nlohmann::json;

struct HttpResponse {
  int status = 0;       // 0 means transport failure (see error)
  Json body;
  std::string error;

  bool ok() const { return status >= 200 && status < 300; }
};

/// POSTs JSON bodies; keeps one connection per endpoint alive.
class HttpPoster {
 public:
  HttpPoster();
  ~HttpPoster();

  HttpResponse post_json(const std::string& host, int port, const std::string& path,
                         const Json& body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP server mapping POST paths to JSON handlers.  A handler returns
/// (status, body); throwing Error maps to a 4xx/5xx JSON error body.
class JsonServer {
 public:
  using Handler = std::function<std::pair<int, Json>(const Json& body)>;

  JsonServer();
  ~JsonServer();
  JsonServer(const JsonServer&) = delete;
  JsonServer& operator=(const JsonServer&) = delete;

  void route(const std::string& path, Handler handler);

  /// Binds and serves on a background thread; port 0 picks an ephemeral
  /// port.  Returns the bound port.  Throws Error{Config} if the bind fails.
  int start(const std::string& host, int port);
  void stop();

  int port() const;
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for an ErrorKind (parameter/protocol -> 400, state -> 409,
/// upstream -> 502, ...).
int status_for(ErrorKind kind);

}  // namespace keymux::net
