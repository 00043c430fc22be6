#include "nbrag/http_service.hpp"

#include "httplib.h"

#include "nbrag/error.hpp"
#include "nbrag/wire.hpp"

namespace nbrag {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view message) {
  send_json(res, status, {{"error", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSettings:
    case ErrorCode::kEmptyText:
      return 400;
    case ErrorCode::kUnknownCompetition:
    case ErrorCode::kUnknownSession:
      return 404;
    default:
      return 500;
  }
}

// Formats engine events as server-sent events onto an httplib sink.
class SseSink final : public ChatEventSink {
 public:
  explicit SseSink(httplib::DataSink& out) : out_(out) {}

  void on_token(std::string_view fragment) override {
    write(wire::sse_event("token", {{"text", fragment}}));
  }
  void on_sources(const std::vector<RetrievedSource>& sources) override {
    write(wire::sse_event("sources", wire::to_json(sources)));
  }
  void on_error(std::string_view message) override {
    write(wire::sse_event("error", {{"message", message}}));
  }
  void on_done(FinishReason reason) override {
    write(wire::sse_event("done", {{"finish_reason", to_string(reason)}}));
  }

 private:
  void write(const std::string& event) {
    if (open_) open_ = out_.write(event.data(), event.size());
  }

  httplib::DataSink& out_;
  bool open_ = true;
};

}  // namespace

HttpService::HttpService(ChatEngine& engine, ServiceOptions options, SearchSettings defaults)
    : engine_(engine),
      options_(std::move(options)),
      defaults_(defaults),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::install_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  srv.Get("/api/competitions", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& c : engine_.competitions()) out.push_back(wire::to_json(c));
    send_json(res, 200, out);
  });

  srv.Post("/api/session", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("competition_id") ||
        !body["competition_id"].is_string()) {
      send_error(res, 400, "competition_id is required");
      return;
    }
    try {
      auto id = engine_.create_session(body["competition_id"].get<std::string>());
      send_json(res, 201, {{"session_id", id}});
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e.what());
    }
  });

  srv.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      send_error(res, 400, "request body is not valid JSON");
      return;
    }
    ChatRequest request;
    try {
      request = wire::parse_chat_request(body, defaults_);
      engine_.validate(request);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e.what());
      return;
    }

    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, request](std::size_t, httplib::DataSink& out) {
          SseSink sink(out);
          try {
            engine_.chat(request, sink);
          } catch (const Error& e) {
            sink.on_error(e.what());
            sink.on_done(FinishReason::kError);
          }
          out.done();
          return true;
        });
  });

  if (!options_.static_dir.empty()) srv.set_mount_point("/", options_.static_dir.string());
}

int HttpService::bind() {
  if (options_.port == 0) return server_->bind_to_any_port(options_.host);
  if (!server_->bind_to_port(options_.host, options_.port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + options_.host + ":" +
                                    std::to_string(options_.port));
  }
  return options_.port;
}

void HttpService::run() { server_->listen_after_bind(); }

void HttpService::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpService::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace nbrag
