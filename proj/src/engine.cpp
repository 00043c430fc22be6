#include "nbrag/engine.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include "json.hpp"

#include "nbrag/error.hpp"

namespace nbrag {

using nlohmann::json;

std::string_view to_string(ConditionMode mode) {
  switch (mode) {
    case ConditionMode::kCommunity: return "community";
    case ConditionMode::kRagHidden: return "rag_hidden";
    case ConditionMode::kPlain: return "plain";
  }
  return "community";
}

ConditionMode parse_condition_mode(std::string_view text) {
  if (text == "community") return ConditionMode::kCommunity;
  if (text == "rag_hidden") return ConditionMode::kRagHidden;
  if (text == "plain") return ConditionMode::kPlain;
  throw Error(ErrorCode::kInvalidSettings, "unknown condition mode: " + std::string(text));
}

// ---------------------------------------------------------------------------

namespace {

std::string random_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (int word = 0; word < 2; ++word) {
    auto v = rng();
    for (int i = 0; i < 16; ++i, v >>= 4) out += kHex[v & 0xF];
  }
  return out;
}

}  // namespace

SessionStore::SessionStore(std::size_t max_turns, std::filesystem::path persist_dir)
    : max_turns_(std::max<std::size_t>(max_turns, 2)), persist_dir_(std::move(persist_dir)) {
  if (!persist_dir_.empty()) load_persisted();
}

std::shared_ptr<Session> SessionStore::create(const std::string& competition_id) {
  auto s = std::make_shared<Session>();
  s->competition_id = competition_id;
  s->created_at = std::chrono::system_clock::now();
  {
    std::lock_guard lock(mu_);
    do {
      s->session_id = random_id();
    } while (sessions_.count(s->session_id) != 0);
    sessions_.emplace(s->session_id, s);
  }
  persist(*s);
  return s;
}

std::shared_ptr<Session> SessionStore::get(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kUnknownSession, "unknown session: " + session_id);
  }
  return it->second;
}

void SessionStore::append_exchange(Session& session, std::string user_text,
                                   std::string assistant_text) {
  session.turns.push_back(ChatTurn{Role::kUser, std::move(user_text)});
  session.turns.push_back(ChatTurn{Role::kAssistant, std::move(assistant_text)});
  while (session.turns.size() > max_turns_) {
    // Drops whole exchanges; history always starts with a user turn.
    session.turns.erase(session.turns.begin(), session.turns.begin() + 2);
  }
  persist(session);
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void SessionStore::persist(const Session& session) const {
  if (persist_dir_.empty()) return;
  json turns = json::array();
  for (const auto& t : session.turns) {
    turns.push_back({{"role", to_string(t.role)}, {"text", t.text}});
  }
  json doc = {{"session_id", session.session_id},
              {"competition_id", session.competition_id},
              {"created_at", std::chrono::duration_cast<std::chrono::seconds>(
                                 session.created_at.time_since_epoch())
                                 .count()},
              {"turns", turns}};
  std::filesystem::create_directories(persist_dir_);
  std::ofstream out(persist_dir_ / (session.session_id + ".json"), std::ios::trunc);
  out << doc.dump() << '\n';
}

void SessionStore::load_persisted() {
  namespace fs = std::filesystem;
  if (!fs::is_directory(persist_dir_)) return;
  for (const auto& entry : fs::directory_iterator(persist_dir_)) {
    if (entry.path().extension() != ".json") continue;
    auto doc = json::parse(read_file(entry.path()), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) continue;
    try {
      auto s = std::make_shared<Session>();
      s->session_id = doc.at("session_id").get<std::string>();
      s->competition_id = doc.at("competition_id").get<std::string>();
      s->created_at = std::chrono::system_clock::time_point(
          std::chrono::seconds(doc.at("created_at").get<std::int64_t>()));
      for (const auto& t : doc.at("turns")) {
        s->turns.push_back(ChatTurn{t.at("role") == "user" ? Role::kUser : Role::kAssistant,
                                    t.at("text").get<std::string>()});
      }
      sessions_.emplace(s->session_id, std::move(s));
    } catch (const json::exception&) {
      continue;
    }
  }
}

// ---------------------------------------------------------------------------

ChatEngine::ChatEngine(std::unique_ptr<LlmProvider> llm, EngineOptions options)
    : llm_(std::move(llm)),
      options_(std::move(options)),
      sessions_(options_.max_session_turns, options_.session_dir) {}

void ChatEngine::add_index(std::shared_ptr<const CompetitionIndex> index,
                           std::shared_ptr<const Embedder> embedder) {
  if (!embedder) embedder = make_embedder(index->embedder);
  if (embedder->spec().dim > 0 && embedder->spec().dim != index->index.dim()) {
    throw Error(ErrorCode::kDimMismatch, "embedder dim does not match index for " +
                                             index->competition_id);
  }
  const std::string id = index->competition_id;
  std::unique_lock lock(indexes_mu_);
  indexes_[id] = Loaded{std::move(index), std::move(embedder)};
}

std::vector<CompetitionSummary> ChatEngine::competitions() const {
  std::shared_lock lock(indexes_mu_);
  std::vector<CompetitionSummary> out;
  for (const auto& [id, loaded] : indexes_) {
    const auto& idx = *loaded.index;
    out.push_back(CompetitionSummary{id, idx.competition_title, idx.competition_description,
                                     idx.notebook_count(), idx.chunk_count()});
  }
  return out;
}

bool ChatEngine::has_competition(const std::string& competition_id) const {
  std::shared_lock lock(indexes_mu_);
  return indexes_.count(competition_id) != 0;
}

ChatEngine::Loaded ChatEngine::lookup(const std::string& competition_id) const {
  std::shared_lock lock(indexes_mu_);
  auto it = indexes_.find(competition_id);
  if (it == indexes_.end()) {
    throw Error(ErrorCode::kUnknownCompetition, "unknown competition: " + competition_id);
  }
  return it->second;
}

std::string ChatEngine::create_session(const std::string& competition_id) {
  lookup(competition_id);
  return sessions_.create(competition_id)->session_id;
}

void ChatEngine::validate(const ChatRequest& request) const {
  const bool blank = std::all_of(request.message.begin(), request.message.end(),
                                 [](unsigned char c) { return std::isspace(c) != 0; });
  if (blank) throw Error(ErrorCode::kInvalidSettings, "message must not be empty");
  request.settings.validate();
  sessions_.get(request.session_id);
}

ChatOutcome ChatEngine::chat(const ChatRequest& request, ChatEventSink& sink) {
  validate(request);
  auto session = sessions_.get(request.session_id);
  std::lock_guard session_lock(session->mu);

  ChatOutcome outcome;
  const bool show_sources = request.mode == ConditionMode::kCommunity;
  auto send_sources = [&] {
    if (show_sources && !outcome.sources_sent) {
      sink.on_sources(outcome.retrieved);
      outcome.sources_sent = true;
    }
  };

  try {
    const auto loaded = lookup(session->competition_id);
    if (request.mode != ConditionMode::kPlain) {
      try {
        outcome.retrieved =
            retrieve(loaded.index->index, request.message, request.settings, *loaded.embedder);
      } catch (const Error& e) {
        // A query with no indexable tokens retrieves nothing.
        if (e.code() != ErrorCode::kEmptyText) throw;
      }
    }
    outcome.prompt = assemble_prompt(request.message, outcome.retrieved,
                                     loaded.index->competition_title,
                                     loaded.index->competition_description, session->turns,
                                     options_.prompt);
  } catch (const Error& e) {
    send_sources();
    sink.on_error(e.what());
    sink.on_done(FinishReason::kError);
    outcome.generation.finish_reason = FinishReason::kError;
    outcome.generation.error = e.what();
    return outcome;
  }

  if (options_.sources_first) send_sources();
  outcome.generation =
      llm_->generate(outcome.prompt, [&](std::string_view fragment) { sink.on_token(fragment); });
  send_sources();

  if (outcome.generation.finish_reason == FinishReason::kError) {
    sink.on_error(outcome.generation.error);
  } else {
    sessions_.append_exchange(*session, request.message, outcome.generation.text);
  }
  sink.on_done(outcome.generation.finish_reason);
  return outcome;
}

}  // namespace nbrag
