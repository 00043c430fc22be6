#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbrag/retrieval.hpp"

namespace nbrag {

enum class Role { kUser, kAssistant };

std::string_view to_string(Role role);

struct ChatTurn {
  Role role = Role::kUser;
  std::string text;

  bool operator==(const ChatTurn&) const = default;
};

/// The answer-generation template. Slots: {title of competition},
/// {One sentence description of the competition}, {context}, {question}.
extern const std::string_view kPromptTemplate;

/// Sentence the model is told to state when no context is supplied.
extern const std::string_view kNoContextNotice;

struct PromptOptions {
  std::size_t source_char_budget = 6000;  // code points per source
  std::size_t history_turns = 6;
};

struct AssembledPrompt {
  std::string system_text;  // the instantiated template
  std::vector<ChatTurn> history;
  std::string current_user_text;
  std::string context;
  std::vector<std::string> source_ids;  // chunk ids in ranked order
};

/// Fills the template. Context is one "--- Source k ---" block per source in
/// the given order (k = rank_position); empty when there are no sources.
AssembledPrompt assemble_prompt(std::string_view query, std::span<const RetrievedSource> sources,
                                std::string_view competition_title,
                                std::string_view competition_description,
                                std::span<const ChatTurn> history,
                                const PromptOptions& options = {});

/// Truncates to `budget` UTF-8 code points, appending "…[truncated]" when
/// anything was cut.
std::string truncate_chars(std::string_view text, std::size_t budget);

enum class FinishReason { kStop, kLength, kError };

std::string_view to_string(FinishReason reason);

struct GenerationResult {
  std::string text;
  std::vector<std::string> token_events;
  FinishReason finish_reason = FinishReason::kStop;
  std::string error;  // set when finish_reason is kError
};

using TokenSink = std::function<void(std::string_view fragment)>;

enum class LlmKind { kRemote, kMock };

std::string_view to_string(LlmKind kind);
LlmKind parse_llm_kind(std::string_view text);

struct LlmSpec {
  LlmKind kind = LlmKind::kMock;
  std::string model_name = "gpt-4o";
  std::string endpoint_url;
  std::string api_key_env;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;

  /// Streams fragments to `sink` in order. Provider failures do not throw:
  /// an error marker fragment is emitted and finish_reason is kError.
  virtual GenerationResult generate(const AssembledPrompt& prompt, const TokenSink& sink) const = 0;
};

/// Deterministic echo provider: "MOCK-ANSWER", the query, the ranked source
/// ids, the context size and the history length, in fragments of at most
/// eight bytes cut on code point boundaries.
class MockLlm final : public LlmProvider {
 public:
  static constexpr std::size_t kFragmentBytes = 8;

  GenerationResult generate(const AssembledPrompt& prompt, const TokenSink& sink) const override;

  static std::string answer_text(const AssembledPrompt& prompt);
};

/// Chat-completions style endpoint with server-sent streaming
/// (choices[0].delta.content).
class RemoteLlm final : public LlmProvider {
 public:
  explicit RemoteLlm(LlmSpec spec);

  GenerationResult generate(const AssembledPrompt& prompt, const TokenSink& sink) const override;

 private:
  LlmSpec spec_;
};

std::unique_ptr<LlmProvider> make_llm(const LlmSpec& spec);

GenerationResult generate(const AssembledPrompt& prompt, const LlmSpec& spec,
                          const TokenSink& sink);

/// Splits text into pieces of at most `max_bytes`, never inside a UTF-8
/// sequence.
std::vector<std::string> split_fragments(std::string_view text, std::size_t max_bytes);

}  // namespace nbrag
