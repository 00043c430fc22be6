#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nbrag/engine.hpp"
#include "nbrag/wire.hpp"

namespace nbrag::testing {

struct Event {
  std::string name;
  nlohmann::json data;
};

/// Collects engine callbacks as the same events the HTTP stream carries.
class RecordingSink final : public ChatEventSink {
 public:
  void on_token(std::string_view fragment) override {
    events.push_back({"token", {{"text", fragment}}});
  }
  void on_sources(const std::vector<RetrievedSource>& sources) override {
    events.push_back({"sources", wire::to_json(sources)});
  }
  void on_error(std::string_view message) override {
    events.push_back({"error", {{"message", message}}});
  }
  void on_done(FinishReason reason) override {
    events.push_back({"done", {{"finish_reason", to_string(reason)}}});
  }

  std::vector<Event> events;
};

/// Splits a text/event-stream body into events.
inline std::vector<Event> parse_sse(const std::string& body) {
  std::vector<Event> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find("\n\n", pos);
    if (end == std::string::npos) end = body.size();
    std::string block = body.substr(pos, end - pos);
    pos = end + 2;
    Event ev;
    std::string data;
    std::size_t line_start = 0;
    while (line_start < block.size()) {
      auto nl = block.find('\n', line_start);
      if (nl == std::string::npos) nl = block.size();
      std::string line = block.substr(line_start, nl - line_start);
      line_start = nl + 1;
      if (line.rfind("event: ", 0) == 0) ev.name = line.substr(7);
      if (line.rfind("data: ", 0) == 0) data += line.substr(6);
    }
    if (ev.name.empty()) continue;
    ev.data = nlohmann::json::parse(data);
    out.push_back(std::move(ev));
  }
  return out;
}

inline std::vector<std::string> names(const std::vector<Event>& events) {
  std::vector<std::string> out;
  for (const auto& e : events) out.push_back(e.name);
  return out;
}

inline std::string token_text(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    if (e.name == "token") out += e.data.at("text").get<std::string>();
  }
  return out;
}

}  // namespace nbrag::testing
