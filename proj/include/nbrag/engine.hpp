#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nbrag/config.hpp"
#include "nbrag/generation.hpp"
#include "nbrag/index_store.hpp"
#include "nbrag/retrieval.hpp"

namespace nbrag {

/// Server behavior per assistance condition.
///   community   retrieval on, sources sent to the client
///   rag_hidden  retrieval on, sources withheld from the client
///   plain       no retrieval, empty context
enum class ConditionMode { kCommunity, kRagHidden, kPlain };

std::string_view to_string(ConditionMode mode);
/// Throws kInvalidSettings.
ConditionMode parse_condition_mode(std::string_view text);

struct Session {
  std::string session_id;
  std::string competition_id;
  std::vector<ChatTurn> turns;  // alternates user/assistant, starting with user
  std::chrono::system_clock::time_point created_at;

  std::mutex mu;  // serializes requests within the session
};

/// In-memory sessions, optionally mirrored to one JSON file per session.
class SessionStore {
 public:
  explicit SessionStore(std::size_t max_turns = 50, std::filesystem::path persist_dir = {});

  std::shared_ptr<Session> create(const std::string& competition_id);
  /// Throws kUnknownSession.
  std::shared_ptr<Session> get(const std::string& session_id) const;

  /// Appends a user/assistant pair and trims to the newest max_turns turns.
  /// Caller holds session.mu.
  void append_exchange(Session& session, std::string user_text, std::string assistant_text);

  std::size_t size() const;

 private:
  void persist(const Session& session) const;
  void load_persisted();

  std::size_t max_turns_;
  std::filesystem::path persist_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

struct ChatRequest {
  std::string session_id;
  std::string message;
  SearchSettings settings;
  ConditionMode mode = ConditionMode::kCommunity;
};

/// Receives the events of one chat turn, in stream order.
class ChatEventSink {
 public:
  virtual ~ChatEventSink() = default;
  virtual void on_token(std::string_view fragment) = 0;
  virtual void on_sources(const std::vector<RetrievedSource>& sources) = 0;
  virtual void on_error(std::string_view message) = 0;
  virtual void on_done(FinishReason reason) = 0;
};

struct ChatOutcome {
  AssembledPrompt prompt;
  GenerationResult generation;
  std::vector<RetrievedSource> retrieved;  // computed even when withheld
  bool sources_sent = false;
};

struct CompetitionSummary {
  std::string competition_id;
  std::string title;
  std::string description;
  std::size_t notebook_count = 0;
  std::size_t chunk_count = 0;
};

struct EngineOptions {
  PromptOptions prompt;
  bool sources_first = false;
  std::size_t max_session_turns = 50;
  std::filesystem::path session_dir;
};

class ChatEngine {
 public:
  ChatEngine(std::unique_ptr<LlmProvider> llm, EngineOptions options = {});

  /// Registers or atomically replaces the index for its competition. The
  /// embedder is built from the index's own spec unless one is given.
  void add_index(std::shared_ptr<const CompetitionIndex> index,
                 std::shared_ptr<const Embedder> embedder = nullptr);

  std::vector<CompetitionSummary> competitions() const;
  bool has_competition(const std::string& competition_id) const;

  /// Throws kUnknownCompetition.
  std::string create_session(const std::string& competition_id);

  /// Throws kInvalidSettings (empty message, bad settings) or
  /// kUnknownSession; nothing has been streamed when these are thrown.
  void validate(const ChatRequest& request) const;

  /// Runs one turn: retrieval (unless plain), prompt assembly, streamed
  /// generation. Validation errors throw before any event; later failures
  /// surface as on_error followed by on_done(kError).
  ChatOutcome chat(const ChatRequest& request, ChatEventSink& sink);

  const SessionStore& sessions() const { return sessions_; }
  const EngineOptions& options() const { return options_; }

 private:
  struct Loaded {
    std::shared_ptr<const CompetitionIndex> index;
    std::shared_ptr<const Embedder> embedder;
  };
  Loaded lookup(const std::string& competition_id) const;

  std::unique_ptr<LlmProvider> llm_;
  EngineOptions options_;
  SessionStore sessions_;
  mutable std::shared_mutex indexes_mu_;
  std::map<std::string, Loaded> indexes_;
};

}  // namespace nbrag
