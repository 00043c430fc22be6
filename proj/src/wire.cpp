#include "nbrag/wire.hpp"

#include "nbrag/error.hpp"

namespace nbrag::wire {

using nlohmann::json;

json to_json(const NotebookMeta& m) {
  return {{"notebook_id", m.notebook_id},
          {"url", m.url},
          {"title", m.title},
          {"author_name", m.author_name},
          {"author_avatar_url", m.author_avatar_url},
          {"vote_count", m.vote_count},
          {"view_count", m.view_count},
          {"comment_count", m.comment_count},
          {"publish_date", m.publish_date},
          {"competition_id", m.competition_id}};
}

json to_json(const RetrievedSource& s) {
  return {{"rank_position", s.rank_position},
          {"chunk_id", s.chunk.chunk_id},
          {"notebook_id", s.chunk.notebook_id},
          {"chunk_ordinal", s.chunk.chunk_ordinal},
          {"relevance_score", s.relevance_score},
          {"mmr_score", s.mmr_score},
          {"rendered_text", s.chunk.rendered_text},
          {"meta", to_json(s.meta)}};
}

json to_json(const std::vector<RetrievedSource>& sources) {
  json out = json::array();
  for (const auto& s : sources) out.push_back(to_json(s));
  return out;
}

json to_json(const CompetitionSummary& c) {
  return {{"competition_id", c.competition_id},
          {"title", c.title},
          {"description", c.description},
          {"notebook_count", c.notebook_count},
          {"chunk_count", c.chunk_count}};
}

namespace {

const json* find_field(const json& body, const char* key) {
  if (auto s = body.find("settings"); s != body.end() && s->is_object()) {
    if (auto it = s->find(key); it != s->end()) return &*it;
  }
  if (auto it = body.find(key); it != body.end()) return &*it;
  return nullptr;
}

[[noreturn]] void invalid(const std::string& why) {
  throw Error(ErrorCode::kInvalidSettings, why);
}

}  // namespace

ChatRequest parse_chat_request(const json& body, const SearchSettings& defaults) {
  if (!body.is_object()) invalid("request body must be a JSON object");
  ChatRequest req;
  req.settings = defaults;

  auto string_field = [&](const char* key) -> std::string {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) invalid(std::string(key) + " must be a string");
    return it->get<std::string>();
  };
  req.session_id = string_field("session_id");
  req.message = string_field("message");

  if (auto it = body.find("mode"); it != body.end()) {
    if (!it->is_string()) invalid("mode must be a string");
    req.mode = parse_condition_mode(it->get<std::string>());
  }
  if (auto f = find_field(body, "ranking_mode")) {
    if (!f->is_string()) invalid("ranking_mode must be a string");
    req.settings.ranking_mode = parse_ranking_mode(f->get<std::string>());
  }
  if (auto f = find_field(body, "n_sources")) {
    if (!f->is_number_integer()) invalid("n_sources must be an integer");
    req.settings.n_sources = f->get<int>();
  }
  if (auto f = find_field(body, "mmr_lambda")) {
    if (!f->is_number()) invalid("mmr_lambda must be a number");
    req.settings.mmr_lambda = f->get<double>();
  }
  if (auto f = find_field(body, "fetch_k")) {
    if (!f->is_number_integer()) invalid("fetch_k must be an integer");
    req.settings.fetch_k = f->get<int>();
  }
  if (auto f = find_field(body, "dedup_notebooks")) {
    if (!f->is_boolean()) invalid("dedup_notebooks must be a boolean");
    req.settings.dedup_notebooks = f->get<bool>();
  }
  return req;
}

std::string sse_event(std::string_view name, const json& data) {
  std::string out = "event: ";
  out += name;
  out += "\ndata: ";
  out += data.dump();
  out += "\n\n";
  return out;
}

}  // namespace nbrag::wire
