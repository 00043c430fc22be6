#include "nbrag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "nbrag/error.hpp"

namespace nbrag {

VectorIndex::VectorIndex(int dim) : dim_(dim) {
  if (dim <= 0) throw Error(ErrorCode::kDimMismatch, "index dim must be positive");
}

void VectorIndex::add(Chunk chunk, const EmbeddingVector& vector, const NotebookMeta& meta) {
  if (vector.dim() != dim_) {
    throw Error(ErrorCode::kDimMismatch, "vector dim " + std::to_string(vector.dim()) +
                                             " does not match index dim " +
                                             std::to_string(dim_));
  }
  if (ids_.count(chunk.chunk_id) != 0) {
    throw Error(ErrorCode::kDuplicateChunkId, "chunk already indexed: " + chunk.chunk_id);
  }

  auto& shared = metas_[meta.notebook_id];
  if (!shared || *shared != meta) shared = std::make_shared<const NotebookMeta>(meta);

  ids_.emplace(chunk.chunk_id, entries_.size());
  auto values = vector.values();
  matrix_.insert(matrix_.end(), values.begin(), values.end());
  entries_.push_back(Entry{std::move(chunk), shared});
}

std::optional<std::size_t> VectorIndex::find(std::string_view chunk_id) const {
  auto it = ids_.find(std::string(chunk_id));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RankingMode mode) {
  switch (mode) {
    case RankingMode::kRelevance: return "relevance";
    case RankingMode::kVotes: return "votes";
    case RankingMode::kViews: return "views";
  }
  return "relevance";
}

RankingMode parse_ranking_mode(std::string_view text) {
  if (text == "relevance") return RankingMode::kRelevance;
  if (text == "votes") return RankingMode::kVotes;
  if (text == "views") return RankingMode::kViews;
  throw Error(ErrorCode::kInvalidSettings, "unknown ranking mode: " + std::string(text));
}

void SearchSettings::validate() const {
  if (n_sources < 1 || n_sources > kMmrK) {
    throw Error(ErrorCode::kInvalidSettings,
                "n_sources must be between 1 and 10, got " + std::to_string(n_sources));
  }
  if (!(mmr_lambda >= 0.0 && mmr_lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidSettings, "mmr_lambda must be within [0, 1]");
  }
  if (fetch_k < kMmrK) {
    throw Error(ErrorCode::kInvalidSettings, "fetch_k must be at least 10");
  }
}

// ---------------------------------------------------------------------------

namespace {

double clamped_dot(std::span<const float> a, std::span<const float> b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

}  // namespace

std::vector<Candidate> candidate_search(const VectorIndex& index,
                                        const EmbeddingVector& query, int fetch_k) {
  if (query.dim() != index.dim()) {
    throw Error(ErrorCode::kDimMismatch, "query dim " + std::to_string(query.dim()) +
                                             " does not match index dim " +
                                             std::to_string(index.dim()));
  }
  if (index.empty() || fetch_k <= 0) return {};

  std::vector<Candidate> all(index.size());
  const auto q = query.values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    all[i] = Candidate{index.entry(i).chunk.chunk_id, index.vector(i),
                       clamped_dot(q, index.vector(i)), i};
  }

  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.chunk_id < b.chunk_id;
  };
  const auto keep = std::min(static_cast<std::size_t>(fetch_k), all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    better);
  all.resize(keep);
  return all;
}

std::vector<MmrPick> mmr_select(std::span<const Candidate> candidates, int k, double lambda) {
  const std::size_t n = candidates.size();
  const std::size_t want = std::min(n, static_cast<std::size_t>(std::max(k, 0)));

  std::vector<MmrPick> picks;
  picks.reserve(want);
  std::vector<bool> taken(n, false);
  // Max similarity of each candidate to the selected set so far.
  std::vector<double> max_sim(n, -std::numeric_limits<double>::infinity());

  while (picks.size() < want) {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double penalty = picks.empty() ? 0.0 : lambda * max_sim[i];
      const double score = candidates[i].relevance - penalty;
      if (best == n || score > best_score ||
          (score == best_score && candidates[i].chunk_id < candidates[best].chunk_id)) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    picks.push_back(MmrPick{best, best_score});
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      max_sim[i] = std::max(max_sim[i], clamped_dot(candidates[i].vector,
                                                    candidates[best].vector));
    }
  }
  return picks;
}

std::vector<RetrievedSource> rank(std::vector<RetrievedSource> selected, RankingMode mode) {
  auto primary = [mode](const RetrievedSource& s) -> double {
    switch (mode) {
      case RankingMode::kVotes: return static_cast<double>(s.meta.vote_count);
      case RankingMode::kViews: return static_cast<double>(s.meta.view_count);
      case RankingMode::kRelevance: break;
    }
    return s.mmr_score;
  };
  std::stable_sort(selected.begin(), selected.end(),
                   [&](const RetrievedSource& a, const RetrievedSource& b) {
                     const double ka = primary(a);
                     const double kb = primary(b);
                     if (ka != kb) return ka > kb;
                     if (a.relevance_score != b.relevance_score) {
                       return a.relevance_score > b.relevance_score;
                     }
                     return a.chunk.chunk_id < b.chunk.chunk_id;
                   });
  int position = 1;
  for (auto& s : selected) s.rank_position = position++;
  return selected;
}

std::vector<RetrievedSource> retrieve(const VectorIndex& index, std::string_view query_text,
                                      const SearchSettings& settings, const Embedder& embedder) {
  settings.validate();
  const auto query = embedder.embed(query_text);
  if (index.empty()) return {};

  auto candidates = candidate_search(index, query, settings.fetch_k);
  if (settings.dedup_notebooks) {
    std::unordered_set<std::string> seen;
    std::erase_if(candidates, [&](const Candidate& c) {
      return !seen.insert(index.entry(c.entry).chunk.notebook_id).second;
    });
  }

  const auto picks = mmr_select(candidates, SearchSettings::kMmrK, settings.mmr_lambda);
  std::vector<RetrievedSource> selected;
  selected.reserve(picks.size());
  for (const auto& pick : picks) {
    const auto& cand = candidates[pick.candidate];
    const auto& entry = index.entry(cand.entry);
    selected.push_back(RetrievedSource{entry.chunk, *entry.meta, cand.relevance,
                                       pick.mmr_score, 0});
  }

  auto ranked = rank(std::move(selected), settings.ranking_mode);
  if (ranked.size() > static_cast<std::size_t>(settings.n_sources)) {
    ranked.resize(static_cast<std::size_t>(settings.n_sources));
  }
  return ranked;
}

std::vector<RetrievedSource> retrieve(const VectorIndex& index, std::string_view query_text,
                                      const SearchSettings& settings,
                                      const EmbedderSpec& embedder_spec) {
  return retrieve(index, query_text, settings, *make_embedder(embedder_spec));
}

}  // namespace nbrag
