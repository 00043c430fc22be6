#pragma once

#include <memory>
#include <string>

#include "nbrag/config.hpp"
#include "nbrag/engine.hpp"

namespace httplib {
class Server;
}

namespace nbrag {

/// HTTP/1.1 front end over a ChatEngine:
///   POST /api/session       {competition_id} -> 201 {session_id}
///   POST /api/chat          ChatRequest -> text/event-stream
///   GET  /api/competitions  -> [{competition_id, title, ...}]
class HttpService {
 public:
  HttpService(ChatEngine& engine, ServiceOptions options, SearchSettings defaults = {});
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind();
  /// Serves until stop(); call after bind().
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  ChatEngine& engine_;
  ServiceOptions options_;
  SearchSettings defaults_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace nbrag
