#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nbrag/chunker.hpp"
#include "nbrag/corpus.hpp"
#include "nbrag/embedder.hpp"

namespace nbrag {

/// Exact-scan cosine index over unit vectors. Vectors live in one
/// row-major float matrix; metadata is shared per notebook.
class VectorIndex {
 public:
  struct Entry {
    Chunk chunk;
    std::shared_ptr<const NotebookMeta> meta;
  };

  explicit VectorIndex(int dim);

  /// Throws kDimMismatch or kDuplicateChunkId.
  void add(Chunk chunk, const EmbeddingVector& vector, const NotebookMeta& meta);

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::span<const float> vector(std::size_t i) const {
    return {matrix_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }
  std::optional<std::size_t> find(std::string_view chunk_id) const;

  std::size_t notebook_count() const { return metas_.size(); }

 private:
  int dim_;
  std::vector<Entry> entries_;
  std::vector<float> matrix_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::unordered_map<std::string, std::shared_ptr<const NotebookMeta>> metas_;
};

enum class RankingMode { kRelevance, kVotes, kViews };

std::string_view to_string(RankingMode mode);
/// Throws kInvalidSettings for unknown names.
RankingMode parse_ranking_mode(std::string_view text);

struct SearchSettings {
  static constexpr int kMmrK = 10;

  RankingMode ranking_mode = RankingMode::kRelevance;
  int n_sources = 3;
  double mmr_lambda = 0.5;
  int fetch_k = 50;
  bool dedup_notebooks = false;

  /// Throws kInvalidSettings unless 1 <= n_sources <= 10,
  /// 0 <= mmr_lambda <= 1 and fetch_k >= 10.
  void validate() const;
};

/// One scored entry of the candidate pool. `vector` and `chunk_id` borrow
/// from the index (or from caller-owned storage in tests).
struct Candidate {
  std::string_view chunk_id;
  std::span<const float> vector;
  double relevance = 0.0;
  std::size_t entry = 0;
};

/// Top min(fetch_k, size) entries by cosine to the query, descending, ties
/// by ascending chunk_id. Empty index yields an empty list.
std::vector<Candidate> candidate_search(const VectorIndex& index,
                                        const EmbeddingVector& query, int fetch_k);

struct MmrPick {
  std::size_t candidate = 0;  // position in the input candidate list
  double mmr_score = 0.0;
};

/// Greedy selection maximizing relevance - lambda * max similarity to the
/// already selected set (no penalty for the first pick). Ties go to the
/// smaller chunk_id. Output is in selection order; k clamps to the pool.
std::vector<MmrPick> mmr_select(std::span<const Candidate> candidates, int k, double lambda);

struct RetrievedSource {
  Chunk chunk;
  NotebookMeta meta;
  double relevance_score = 0.0;
  double mmr_score = 0.0;
  int rank_position = 0;
};

/// Stable re-order by the mode key (mmr_score, vote_count or view_count,
/// descending), then relevance descending, then chunk_id ascending.
/// rank_position is reassigned 1..n.
std::vector<RetrievedSource> rank(std::vector<RetrievedSource> selected, RankingMode mode);

/// embed -> candidate_search -> mmr_select(10) -> rank -> first n_sources.
std::vector<RetrievedSource> retrieve(const VectorIndex& index, std::string_view query_text,
                                      const SearchSettings& settings, const Embedder& embedder);

std::vector<RetrievedSource> retrieve(const VectorIndex& index, std::string_view query_text,
                                      const SearchSettings& settings,
                                      const EmbedderSpec& embedder_spec);

}  // namespace nbrag
