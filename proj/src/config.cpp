#include "nbrag/config.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "nbrag/error.hpp"

namespace nbrag {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::kConfig, "config line " + std::to_string(line_no) + ": " + why);
}

std::string parse_value(std::string_view raw, std::size_t line_no) {
  raw = trim(raw);
  if (raw.empty()) bad(line_no, "missing value");
  if (raw.front() != '"') {
    auto hash = raw.find('#');
    return std::string(trim(raw.substr(0, hash)));
  }
  std::string out;
  std::size_t i = 1;
  for (; i < raw.size(); ++i) {
    char c = raw[i];
    if (c == '"') break;
    if (c == '\\' && i + 1 < raw.size()) {
      char e = raw[++i];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: bad(line_no, std::string("unknown escape \\") + e);
      }
      continue;
    }
    out += c;
  }
  if (i >= raw.size()) bad(line_no, "unterminated string");
  auto rest = trim(raw.substr(i + 1));
  if (!rest.empty() && rest.front() != '#') bad(line_no, "trailing text after string");
  return out;
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text) {
  KeyValueFile kv;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw_line;
  std::size_t line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    auto line = trim(raw_line);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string_view::npos) bad(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, close - 1)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) bad(line_no, "expected key = value");
    auto key = std::string(trim(line.substr(0, eq)));
    if (key.empty()) bad(line_no, "empty key");
    kv.entries_[section.empty() ? key : section + "." + key] =
        parse_value(line.substr(eq + 1), line_no);
  }
  return kv;
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueFile::get_or(const std::string& key, std::string fallback) const {
  return get(key).value_or(std::move(fallback));
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  int out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw Error(ErrorCode::kConfig, key + ": expected an integer, got '" + *v + "'");
  }
  return out;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double out = std::stod(*v, &used);
    if (used == v->size()) return out;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfig, key + ": expected a number, got '" + *v + "'");
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  throw Error(ErrorCode::kConfig, key + ": expected true or false, got '" + *v + "'");
}

std::map<std::string, std::string> KeyValueFile::section(const std::string& prefix) const {
  std::map<std::string, std::string> out;
  const std::string p = prefix + ".";
  for (auto it = entries_.lower_bound(p); it != entries_.end() && it->first.rfind(p, 0) == 0;
       ++it) {
    out.emplace(it->first.substr(p.size()), it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------

EngineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const auto kv = KeyValueFile::parse(text);
  auto path = [&](const std::string& key) -> std::filesystem::path {
    auto v = kv.get(key);
    if (!v || v->empty()) return {};
    std::filesystem::path p(*v);
    return p.is_absolute() ? p : base_dir / p;
  };

  EngineConfig c;
  c.competition_id = kv.get_or("corpus.competition_id", "");
  c.competition_title = kv.get_or("corpus.competition_title", c.competition_id);
  c.competition_description = kv.get_or("corpus.competition_description", "");
  c.notebooks_dir = path("corpus.notebooks_dir");
  if (auto m = path("corpus.notebook_manifest"); !m.empty()) c.notebook_manifest = m;
  c.metadata_path = path("metadata.path");
  c.metadata_format = kv.get_or("metadata.format",
                                c.metadata_path.extension() == ".jsonl" ? "jsonl" : "csv");
  if (c.metadata_format != "csv" && c.metadata_format != "jsonl") {
    throw Error(ErrorCode::kConfig, "metadata.format must be csv or jsonl");
  }
  c.columns = kv.section("metadata.columns");

  c.embedder.kind = parse_embedder_kind(kv.get_or("embedder.kind", "local_hash"));
  c.embedder.dim = kv.get_int("embedder.dim", c.embedder.kind == EmbedderKind::kLocalHash ? 256 : 0);
  c.embedder.model_name = kv.get_or("embedder.model_name", c.embedder.model_name);
  c.embedder.endpoint_url = kv.get_or("embedder.endpoint_url", "");
  c.embedder.api_key_env = kv.get_or("embedder.api_key_env", "");
  c.embedder.max_retries = kv.get_int("embedder.max_retries", c.embedder.max_retries);
  c.embedder.max_in_flight = kv.get_int("embedder.max_in_flight", c.embedder.max_in_flight);
  if (c.embedder.kind == EmbedderKind::kLocalHash && c.embedder.dim <= 0) {
    throw Error(ErrorCode::kConfig, "embedder.dim must be positive");
  }
  if (c.embedder.kind == EmbedderKind::kRemote && c.embedder.endpoint_url.empty()) {
    throw Error(ErrorCode::kConfig, "remote embedder requires embedder.endpoint_url");
  }

  c.llm.kind = parse_llm_kind(kv.get_or("llm.kind", "mock"));
  c.llm.model_name = kv.get_or("llm.model_name", c.llm.model_name);
  c.llm.endpoint_url = kv.get_or("llm.endpoint_url", "");
  c.llm.api_key_env = kv.get_or("llm.api_key_env", "");
  c.llm.temperature = kv.get_double("llm.temperature", 0.0);
  c.llm.timeout = std::chrono::milliseconds(kv.get_int("llm.timeout_ms", 60000));
  if (c.llm.temperature < 0.0) throw Error(ErrorCode::kConfig, "llm.temperature must be >= 0");
  if (c.llm.kind == LlmKind::kRemote && c.llm.endpoint_url.empty()) {
    throw Error(ErrorCode::kConfig, "remote llm requires llm.endpoint_url");
  }

  c.index_dir = path("index.dir");

  c.search.ranking_mode = parse_ranking_mode(kv.get_or("retrieval.ranking_mode", "relevance"));
  c.search.n_sources = kv.get_int("retrieval.n_sources", c.search.n_sources);
  c.search.mmr_lambda = kv.get_double("retrieval.lambda", c.search.mmr_lambda);
  c.search.fetch_k = kv.get_int("retrieval.fetch_k", c.search.fetch_k);
  c.search.dedup_notebooks = kv.get_bool("retrieval.dedup_notebooks", false);
  try {
    c.search.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("retrieval: ") + e.what());
  }

  c.prompt.source_char_budget = static_cast<std::size_t>(
      kv.get_int("generation.source_char_budget", static_cast<int>(c.prompt.source_char_budget)));
  c.prompt.history_turns = static_cast<std::size_t>(
      kv.get_int("generation.history_turns", static_cast<int>(c.prompt.history_turns)));

  c.service.host = kv.get_or("service.host", c.service.host);
  c.service.port = kv.get_int("service.port", c.service.port);
  c.service.sources_first = kv.get_bool("service.sources_first", false);
  c.service.max_session_turns = static_cast<std::size_t>(
      kv.get_int("service.max_session_turns", static_cast<int>(c.service.max_session_turns)));
  c.service.session_dir = path("service.session_dir");
  c.service.static_dir = path("service.static_dir");
  return c;
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kConfig, "cannot read config file " + path.string());
  }
  return parse_config(text, path.parent_path());
}

}  // namespace nbrag
