#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "nbrag/corpus.hpp"
#include "nbrag/embedder.hpp"
#include "nbrag/generation.hpp"
#include "nbrag/retrieval.hpp"

namespace nbrag {

/// Flat view of a TOML-style file: "[section]" headers and "key = value"
/// lines become "section.key" entries. Values may be quoted strings or bare
/// words; '#' starts a comment outside quotes.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Entries under "prefix." with the prefix removed.
  std::map<std::string, std::string> section(const std::string& prefix) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  bool sources_first = false;
  std::size_t max_session_turns = 50;
  std::filesystem::path session_dir;  // empty: sessions live in memory only
  std::filesystem::path static_dir;   // empty: no static file mount
};

struct EngineConfig {
  std::string competition_id;
  std::string competition_title;
  std::string competition_description;

  std::filesystem::path notebooks_dir;
  std::optional<std::filesystem::path> notebook_manifest;
  std::filesystem::path metadata_path;
  std::string metadata_format;  // "csv" or "jsonl"
  ColumnMapping columns;

  EmbedderSpec embedder;
  LlmSpec llm;
  std::filesystem::path index_dir;
  SearchSettings search;
  PromptOptions prompt;
  ServiceOptions service;
};

/// Relative paths resolve against `base_dir`. Throws kConfig.
EngineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);

EngineConfig load_config(const std::filesystem::path& path);

}  // namespace nbrag
