#include "nbrag/generation.hpp"

#include <algorithm>

#include "httplib.h"
#include "json.hpp"

#include "http_util.hpp"
#include "nbrag/error.hpp"

namespace nbrag {

const std::string_view kPromptTemplate =
    "Task: You are an expert in data science. Your goal is to assist a user in dealing with a "
    "task related to a Kaggle competition: {title of competition}. Whenever possible, provide "
    "answers in the form of code snippets that directly address the user's needs.\n"
    "\n"
    "Information Provided:\n"
    "1. Competition Description: {One sentence description of the competition}\n"
    "2. Context: {context}\n"
    "\n"
    "*Note:* The context includes other people's code, which contains information necessary "
    "for answering the user's question. Please rely solely on the provided context to craft "
    "your response. Assume all questions pertain specifically to this competition. If the "
    "context is empty, state \"There is no relevant information in previous notebooks\" and "
    "then proceed to answer the question based on your expertise.\n"
    "\n"
    "User Query: {question}\n"
    "\n"
    "Expected Output: Please provide your response as a string, including code snippets where "
    "applicable.\n";

const std::string_view kNoContextNotice = "There is no relevant information in previous notebooks";

std::string_view to_string(Role role) { return role == Role::kUser ? "user" : "assistant"; }

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

std::string_view to_string(LlmKind kind) { return kind == LlmKind::kMock ? "mock" : "remote"; }

LlmKind parse_llm_kind(std::string_view text) {
  if (text == "mock") return LlmKind::kMock;
  if (text == "remote") return LlmKind::kRemote;
  throw Error(ErrorCode::kConfig, "unknown llm kind: " + std::string(text));
}

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

// Substitutes slots in one pass; slot-like text inside values is left alone.
std::string fill_template(std::string_view tmpl,
                          std::span<const std::pair<std::string_view, std::string_view>> slots) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool replaced = false;
    if (tmpl[pos] == '{') {
      for (const auto& [name, value] : slots) {
        if (tmpl.substr(pos + 1, name.size()) == name &&
            tmpl.substr(pos + 1 + name.size(), 1) == "}") {
          out += value;
          pos += name.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[pos++];
  }
  return out;
}

std::string strip_trailing_newlines(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

std::string truncate_chars(std::string_view text, std::size_t budget) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(text[i]))) continue;
    if (chars == budget) return std::string(text.substr(0, i)) + "\xE2\x80\xA6[truncated]";
    ++chars;
  }
  return std::string(text);
}

AssembledPrompt assemble_prompt(std::string_view query, std::span<const RetrievedSource> sources,
                                std::string_view competition_title,
                                std::string_view competition_description,
                                std::span<const ChatTurn> history,
                                const PromptOptions& options) {
  AssembledPrompt p;
  p.current_user_text = std::string(query);

  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    const int k = s.rank_position > 0 ? s.rank_position : static_cast<int>(i) + 1;
    p.context += "\n--- Source " + std::to_string(k) + " ---\n";
    p.context += strip_trailing_newlines(
        truncate_chars(s.chunk.rendered_text, options.source_char_budget));
    p.source_ids.push_back(s.chunk.chunk_id);
  }

  const std::pair<std::string_view, std::string_view> slots[] = {
      {"title of competition", competition_title},
      {"One sentence description of the competition", competition_description},
      {"context", p.context},
      {"question", query},
  };
  p.system_text = fill_template(kPromptTemplate, slots);

  const std::size_t keep = std::min(history.size(), options.history_turns);
  p.history.assign(history.end() - static_cast<std::ptrdiff_t>(keep), history.end());
  return p;
}

// ---------------------------------------------------------------------------

std::vector<std::string> split_fragments(std::string_view text, std::size_t max_bytes) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = std::min(text.size(), pos + max_bytes);
    while (end < text.size() && end > pos && is_continuation(static_cast<unsigned char>(text[end]))) {
      --end;
    }
    if (end == pos) end = std::min(text.size(), pos + max_bytes);
    out.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

std::string MockLlm::answer_text(const AssembledPrompt& prompt) {
  std::string text = "MOCK-ANSWER\nquery: " + prompt.current_user_text + "\nsources:";
  if (prompt.source_ids.empty()) text += " (none)";
  for (const auto& id : prompt.source_ids) text += " " + id;
  text += "\ncontext_chars: " + std::to_string(prompt.context.size());
  text += "\nhistory_turns: " + std::to_string(prompt.history.size()) + "\n";
  return text;
}

GenerationResult MockLlm::generate(const AssembledPrompt& prompt, const TokenSink& sink) const {
  GenerationResult result;
  result.text = answer_text(prompt);
  result.token_events = split_fragments(result.text, kFragmentBytes);
  for (const auto& f : result.token_events) {
    if (sink) sink(f);
  }
  result.finish_reason = FinishReason::kStop;
  return result;
}

// ---------------------------------------------------------------------------

RemoteLlm::RemoteLlm(LlmSpec spec) : spec_(std::move(spec)) {
  if (spec_.endpoint_url.empty()) {
    throw Error(ErrorCode::kConfig, "remote llm requires llm.endpoint_url");
  }
  detail::split_url(spec_.endpoint_url);
}

GenerationResult RemoteLlm::generate(const AssembledPrompt& prompt, const TokenSink& sink) const {
  GenerationResult result;
  auto emit = [&](std::string fragment) {
    if (fragment.empty()) return;
    if (sink) sink(fragment);
    result.text += fragment;
    result.token_events.push_back(std::move(fragment));
  };
  auto fail = [&](const std::string& why) {
    result.finish_reason = FinishReason::kError;
    result.error = why;
    emit("\n[error: " + why + "]");
    return result;
  };

  const auto target = detail::split_url(spec_.endpoint_url);
  std::string key;
  try {
    key = detail::key_from_env(spec_.api_key_env);
  } catch (const Error& e) {
    return fail(e.what());
  }

  nlohmann::json messages = nlohmann::json::array();
  for (const auto& turn : prompt.history) {
    messages.push_back({{"role", to_string(turn.role)}, {"content", turn.text}});
  }
  messages.push_back({{"role", "user"}, {"content", prompt.system_text}});
  nlohmann::json body = {{"model", spec_.model_name},
                         {"messages", messages},
                         {"temperature", spec_.temperature},
                         {"stream", true}};

  httplib::Client client(target.base);
  const auto secs = std::max<std::chrono::seconds>(
      std::chrono::seconds{1}, std::chrono::duration_cast<std::chrono::seconds>(spec_.timeout));
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);

  httplib::Request req;
  req.method = "POST";
  req.path = target.path;
  req.body = body.dump();
  req.set_header("Content-Type", "application/json");
  req.set_header("Accept", "text/event-stream");
  if (!key.empty()) req.set_header("Authorization", "Bearer " + key);

  const auto deadline = std::chrono::steady_clock::now() + spec_.timeout;
  bool timed_out = false;
  int status = 0;
  std::string buffer;
  std::string error_body;
  std::string finish = "stop";
  req.response_handler = [&](const httplib::Response& res) {
    status = res.status;
    return true;
  };
  req.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
    if (std::chrono::steady_clock::now() > deadline) {
      timed_out = true;
      return false;
    }
    if (status != 200) {
      error_body.append(data, n);
      return true;
    }
    buffer.append(data, n);
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.rfind("data:", 0) != 0) continue;
      std::string_view payload = std::string_view(line).substr(5);
      while (!payload.empty() && payload.front() == ' ') payload.remove_prefix(1);
      if (payload == "[DONE]") continue;
      auto chunk = nlohmann::json::parse(payload, nullptr, false);
      if (chunk.is_discarded() || !chunk.contains("choices") || chunk["choices"].empty()) continue;
      const auto& choice = chunk["choices"][0];
      if (choice.contains("delta") && choice["delta"].contains("content") &&
          choice["delta"]["content"].is_string()) {
        emit(choice["delta"]["content"].get<std::string>());
      }
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        finish = choice["finish_reason"].get<std::string>();
      }
    }
    return true;
  };

  auto res = client.send(req);
  if (timed_out) return fail("timeout after " + std::to_string(spec_.timeout.count()) + " ms");
  if (!res) return fail("transport error: " + httplib::to_string(res.error()));
  if (status != 200) return fail("HTTP " + std::to_string(status));
  result.finish_reason = finish == "length" ? FinishReason::kLength : FinishReason::kStop;
  return result;
}

std::unique_ptr<LlmProvider> make_llm(const LlmSpec& spec) {
  if (spec.kind == LlmKind::kMock) return std::make_unique<MockLlm>();
  return std::make_unique<RemoteLlm>(spec);
}

GenerationResult generate(const AssembledPrompt& prompt, const LlmSpec& spec,
                          const TokenSink& sink) {
  return make_llm(spec)->generate(prompt, sink);
}

}  // namespace nbrag
