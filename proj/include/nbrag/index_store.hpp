#pragma once

#include <filesystem>
#include <string>

#include "nbrag/embedder.hpp"
#include "nbrag/retrieval.hpp"

namespace nbrag {

/// A per-competition index plus what is needed to query and describe it.
struct CompetitionIndex {
  std::string competition_id;
  std::string competition_title;
  std::string competition_description;
  EmbedderSpec embedder;
  VectorIndex index{1};

  std::size_t notebook_count() const { return index.notebook_count(); }
  std::size_t chunk_count() const { return index.size(); }
};

/// Embeds every chunk of `corpus` and returns the populated index.
CompetitionIndex build_index(const Corpus& corpus, const Embedder& embedder);

/// Writes `dir`/manifest.json and `dir`/chunks.jsonl (one record per chunk:
/// chunk fields, metadata snapshot, embedding values).
void save_index(const CompetitionIndex& index, const std::filesystem::path& dir);

/// Throws kIo or kMalformedDocument; vectors are restored bit-for-bit.
CompetitionIndex load_index(const std::filesystem::path& dir);

}  // namespace nbrag
