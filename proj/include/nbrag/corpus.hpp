#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbrag {

enum class CellKind { kMarkdown, kCode };

std::string_view to_string(CellKind kind);

struct Cell {
  CellKind kind = CellKind::kCode;
  std::string source;
  int ordinal = 0;

  bool operator==(const Cell&) const = default;
};

// Community metadata for one notebook post. Strings are kept exactly as
// ingested.
struct NotebookMeta {
  std::string notebook_id;
  std::string url;
  std::string title;
  std::string author_name;
  std::string author_avatar_url;
  std::int64_t vote_count = 0;
  std::int64_t view_count = 0;
  std::int64_t comment_count = 0;
  std::string publish_date;  // ISO-8601, validated on load
  std::string competition_id;

  bool operator==(const NotebookMeta&) const = default;
};

struct Notebook {
  std::string notebook_id;
  std::vector<Cell> cells;
  std::string language;

  bool operator==(const Notebook&) const = default;
};

struct Corpus {
  std::string competition_id;
  std::string competition_title;
  std::string competition_description;
  std::vector<Notebook> notebooks;  // sorted by notebook_id
  std::map<std::string, NotebookMeta> metadata;

  bool operator==(const Corpus&) const = default;
};

/// Parses an nbformat-4 notebook. Only markdown and code cells survive;
/// whitespace-only cells are dropped and ordinals follow file order.
///
/// Throws Error with kMalformedDocument, kEmptyNotebook or
/// kUnsupportedLanguage.
Notebook parse_notebook(std::string_view raw, std::string notebook_id);

// ---------------------------------------------------------------------------
// Metadata

/// A tabular record: column name to raw cell text.
using Record = std::map<std::string, std::string>;

/// Maps NotebookMeta field names ("notebook_id", "vote_count", ...) to the
/// source column holding each one.
using ColumnMapping = std::map<std::string, std::string>;

/// Header-row CSV (RFC 4180 quoting, quoted newlines allowed).
std::vector<Record> read_csv_records(std::string_view text);

/// One JSON object per line; non-string scalars are stringified.
std::vector<Record> read_jsonl_records(std::string_view text);

struct MetadataLoad {
  std::vector<NotebookMeta> metas;  // first-seen order, duplicates resolved
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
  std::vector<std::string> warnings;
};

/// Throws Error(kMissingMapping) when a required field has no column.
/// Invalid rows are skipped and counted; a repeated notebook_id keeps the
/// last row.
MetadataLoad load_metadata(const std::vector<Record>& rows,
                           const ColumnMapping& mapping);

bool is_iso_date(std::string_view text);

// ---------------------------------------------------------------------------
// Corpus assembly

struct CorpusReport {
  std::size_t admitted = 0;
  std::size_t rejected_missing_metadata = 0;
  std::size_t rejected_other_competition = 0;
  std::size_t markdown_cells = 0;
  std::size_t code_cells = 0;
  std::vector<std::string> diagnostics;

  std::size_t rejected() const {
    return rejected_missing_metadata + rejected_other_competition;
  }
};

struct CorpusBuild {
  Corpus corpus;
  CorpusReport report;
};

CorpusBuild build_corpus(std::vector<Notebook> notebooks,
                         const std::vector<NotebookMeta>& metas,
                         const std::string& competition_id,
                         const std::string& competition_title,
                         const std::string& competition_description);

// ---------------------------------------------------------------------------
// Filesystem ingestion

struct ParseFailures {
  std::size_t files_seen = 0;
  std::size_t malformed = 0;
  std::size_t empty = 0;
  std::size_t unsupported_language = 0;
  std::vector<std::string> diagnostics;

  std::size_t total() const { return malformed + empty + unsupported_language; }
};

struct NotebookScan {
  std::vector<Notebook> notebooks;
  ParseFailures failures;
};

/// Reads every *.ipynb under `dir`. The file stem is the notebook id unless
/// `manifest` (CSV with columns notebook_id,file) overrides it.
NotebookScan scan_notebooks(const std::filesystem::path& dir,
                            const std::optional<std::filesystem::path>& manifest);

std::string read_file(const std::filesystem::path& path);

}  // namespace nbrag
