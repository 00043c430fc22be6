// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances and time limits are the constants below.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nbrag/chunker.hpp"
#include "nbrag/engine.hpp"
#include "nbrag/generation.hpp"
#include "nbrag/index_store.hpp"
#include "nbrag/pipeline.hpp"
#include "nbrag/retrieval.hpp"
#include "oracles.hpp"
#include "recording.hpp"
#include "service_harness.hpp"
#include "test_support.hpp"

namespace {

using namespace nbrag;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kChunkerLimitS = 5.0;
constexpr double kMmrLimitS = 2.0;
constexpr double kEndToEndLimitS = 1.0;
constexpr double kPersistTolerance = 1e-7;
constexpr double kNormTolerance = 1e-6;
constexpr double kRetrieveMedianLimitMs = 100.0;

constexpr int kChunkerNotebooks = 1000;
constexpr int kMmrInstances = 200;
constexpr int kDegeneracyInstances = 100;
constexpr int kRankSets = 1000;
constexpr int kEmbedTexts = 1000;
constexpr int kPerfChunks = 50000;
constexpr int kPerfDim = 256;
constexpr int kPerfRuns = 21;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome chunker_partition() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> len(0, 40);
  const auto t0 = Clock::now();
  int bad = 0;
  for (int i = 0; i < kChunkerNotebooks; ++i) {
    auto nb = testing::random_notebook(rng, len(rng), "nb" + std::to_string(i));
    auto chunks = chunk_notebook(nb);
    std::vector<Cell> flat;
    bool ok = true;
    for (const auto& c : chunks) {
      if (c.markdown_cells.empty() && c.code_cells.empty()) ok = false;
      for (const auto& m : c.markdown_cells) ok &= m.kind == CellKind::kMarkdown;
      for (const auto& k : c.code_cells) ok &= k.kind == CellKind::kCode;
      flat.insert(flat.end(), c.markdown_cells.begin(), c.markdown_cells.end());
      flat.insert(flat.end(), c.code_cells.begin(), c.code_cells.end());
    }
    ok &= flat == nb.cells;
    if (!ok) ++bad;
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s < kChunkerLimitS,
          std::to_string(kChunkerNotebooks - bad) + "/" + std::to_string(kChunkerNotebooks) +
              " notebooks partitioned, " + fmt(s) + " s (limit " + fmt(kChunkerLimitS, "%.0f") +
              " s)"};
}

Outcome chunker_edges() {
  using Shape = std::vector<std::pair<std::vector<int>, std::vector<int>>>;
  auto run = [](const std::string& kinds) {
    Notebook nb{"nb", {}, "python"};
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      nb.cells.push_back(Cell{kinds[i] == 'm' ? CellKind::kMarkdown : CellKind::kCode,
                              "s" + std::to_string(i), static_cast<int>(i)});
    }
    Shape out;
    for (const auto& c : chunk_notebook(nb)) {
      std::vector<int> md, code;
      for (const auto& m : c.markdown_cells) md.push_back(m.ordinal);
      for (const auto& k : c.code_cells) code.push_back(k.ordinal);
      out.emplace_back(md, code);
    }
    return out;
  };
  const bool a = run("mc") == Shape{{{0}, {1}}};
  const bool b = run("mmccmc") == Shape{{{0, 1}, {2, 3}}, {{4}, {5}}};
  const bool c = run("cmcm") == Shape{{{}, {0}}, {{1}, {2}}, {{3}, {}}};
  return {a && b && c, std::string("[md,code] ") + (a ? "ok" : "wrong") +
                           ", [md,md,code,code,md,code] " + (b ? "ok" : "wrong") +
                           ", [code,md,code,md] " + (c ? "ok" : "wrong")};
}

std::vector<Candidate> score_pool(const std::vector<float>& q,
                                  const std::vector<oracle::Item>& pool) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    out.push_back(Candidate{pool[i].id, pool[i].vec, oracle::cosine(q, pool[i].vec), i});
  }
  return out;
}

std::vector<oracle::Item> random_pool(std::mt19937_64& rng, int n, int dim) {
  std::vector<oracle::Item> pool;
  for (int i = 0; i < n; ++i) pool.push_back({"p" + std::to_string(i), testing::random_unit(rng, dim)});
  return pool;
}

std::vector<std::string> pick_ids(const std::vector<Candidate>& cands,
                                  const std::vector<MmrPick>& picks) {
  std::vector<std::string> out;
  for (const auto& p : picks) out.emplace_back(cands[p.candidate].chunk_id);
  return out;
}

Outcome mmr_oracle() {
  std::mt19937_64 rng(2002);
  const double lambdas[] = {0.0, 0.3, 0.5, 1.0};
  int matched = 0;
  double elapsed = 0.0;
  for (int i = 0; i < kMmrInstances; ++i) {
    const double lambda = lambdas[i % 4];
    auto pool = random_pool(rng, 20, 8);
    auto q = testing::random_unit(rng, 8);
    const auto t0 = Clock::now();
    auto cands = score_pool(q, pool);
    auto got = pick_ids(cands, mmr_select(cands, 5, lambda));
    elapsed += seconds_since(t0);
    if (got == oracle::greedy_mmr(q, pool, 5, lambda)) ++matched;
  }
  return {matched == kMmrInstances && elapsed < kMmrLimitS,
          std::to_string(matched) + "/" + std::to_string(kMmrInstances) +
              " identical selections, " + fmt(elapsed) + " s (limit " + fmt(kMmrLimitS, "%.0f") +
              " s)"};
}

Outcome lambda_zero() {
  std::mt19937_64 rng(3003);
  int matched = 0;
  for (int i = 0; i < kDegeneracyInstances; ++i) {
    auto pool = random_pool(rng, 20, 8);
    auto q = testing::random_unit(rng, 8);
    auto cands = score_pool(q, pool);
    if (pick_ids(cands, mmr_select(cands, 20, 0.0)) == oracle::exhaustive_top(q, pool, 20)) {
      ++matched;
    }
  }
  return {matched == kDegeneracyInstances,
          std::to_string(matched) + "/" + std::to_string(kDegeneracyInstances) +
              " match cosine order"};
}

Outcome ranking_modes() {
  std::mt19937_64 rng(4004);
  std::uniform_int_distribution<int> small(0, 3);
  int matched = 0;
  int total = 0;
  for (int i = 0; i < kRankSets; ++i) {
    std::vector<RetrievedSource> items;
    for (int j = 0; j < 10; ++j) {
      RetrievedSource s;
      s.chunk.chunk_id = "c" + std::to_string(small(rng)) + "-" + std::to_string(j);
      s.meta = testing::make_meta(s.chunk.chunk_id, small(rng), small(rng));
      s.relevance_score = 0.25 * small(rng);
      s.mmr_score = 0.25 * small(rng);
      items.push_back(s);
    }
    for (auto mode : {RankingMode::kRelevance, RankingMode::kVotes, RankingMode::kViews}) {
      ++total;
      auto out = rank(items, mode);
      std::vector<std::string> ids;
      bool positions = true;
      for (std::size_t k = 0; k < out.size(); ++k) {
        ids.push_back(out[k].chunk.chunk_id);
        positions &= out[k].rank_position == static_cast<int>(k) + 1;
      }
      if (positions && ids == oracle::key_tuple_sort(items, mode)) ++matched;
    }
  }
  return {matched == total, std::to_string(matched) + "/" + std::to_string(total) +
                                " rankings match the key-tuple oracle"};
}

std::shared_ptr<const CompetitionIndex> g_fixture_index;

std::unique_ptr<ChatEngine> fixture_engine() {
  auto engine = std::make_unique<ChatEngine>(std::make_unique<MockLlm>());
  engine->add_index(g_fixture_index);
  return engine;
}

Outcome settings_bounds() {
  testing::ServiceHarness harness(fixture_engine());
  const auto id = harness.new_session("house-prices");
  std::ostringstream detail;
  bool ok = !id.empty();
  for (int n : {1, 10, 0, 11}) {
    auto res = harness.post("/api/chat", {{"session_id", id},
                                          {"message", "ridge regression"},
                                          {"settings", {{"n_sources", n}}}});
    const int status = res ? res->status : -1;
    const int want = (n == 1 || n == 10) ? 200 : 400;
    ok &= status == want;
    if (n != 1) detail << ", ";
    detail << "n_sources=" << n << " -> " << status;
  }
  return {ok, detail.str()};
}

Outcome prompt_snapshot() {
  const auto config = testing::fixture_config();
  auto p = assemble_prompt("How should I handle skewed numeric features?", {},
                           config.competition_title, config.competition_description, {});
  const std::string golden = read_file(testing::golden_dir() / "prompt_empty_context.txt");
  const bool exact = p.system_text == golden;
  const bool expert = p.system_text.find("You are an expert in data science") != std::string::npos;
  const bool notice =
      p.system_text.find("If the context is empty, state \"There is no relevant information in "
                         "previous notebooks\"") != std::string::npos;
  return {exact && expert && notice, std::string("golden ") + (exact ? "byte-exact" : "DIFFERS") +
                                         ", expert phrase " + (expert ? "present" : "missing") +
                                         ", empty-context sentence " +
                                         (notice ? "present" : "missing")};
}

// Minimal RFC 4180 reader, independent of the library's loader.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows(1);
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      rows.back().push_back(field);
      field.clear();
    } else if (c == '\n') {
      rows.back().push_back(field);
      field.clear();
      rows.emplace_back();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!field.empty() || !rows.back().empty()) rows.back().push_back(field);
  if (rows.back().empty()) rows.pop_back();
  return rows;
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  const auto config = testing::fixture_config();
  auto result = ingest(config);
  auto index = std::make_shared<const CompetitionIndex>(
      build_index(result.build.corpus, *make_embedder(config.embedder)));
  auto engine = std::make_unique<ChatEngine>(std::make_unique<MockLlm>());
  engine->add_index(index);
  testing::ServiceHarness harness(std::move(engine));

  auto chat = [&](const std::string& mode, const std::string& ranking, int n) {
    const auto id = harness.new_session("house-prices");
    auto res = harness.post("/api/chat", {{"session_id", id},
                                          {"message", "how do I tune gradient boosting with early stopping"},
                                          {"mode", mode},
                                          {"settings", {{"ranking_mode", ranking}, {"n_sources", n}}}});
    return res && res->status == 200 ? testing::parse_sse(res->body)
                                     : std::vector<testing::Event>{};
  };
  auto sources_of = [](const std::vector<testing::Event>& events) {
    for (const auto& e : events) {
      if (e.name == "sources") return e.data;
    }
    return json();
  };

  // CSV rows keyed by KernelId; the last row for an id is the one ingested.
  auto rows = parse_csv(read_file(config.metadata_path));
  std::map<std::string, std::map<std::string, std::string>> csv;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[0].size() && c < rows[r].size(); ++c) {
      csv[rows[r][0]][rows[0][c]] = rows[r][c];
    }
  }
  const std::pair<const char*, const char*> fields[] = {
      {"url", "Url"},
      {"title", "Title"},
      {"author_name", "AuthorDisplayName"},
      {"author_avatar_url", "AuthorAvatarUrl"},
      {"publish_date", "MadePublicDate"},
      {"competition_id", "CompetitionSlug"}};
  const std::pair<const char*, const char*> counts[] = {{"vote_count", "TotalVotes"},
                                                        {"view_count", "TotalViews"},
                                                        {"comment_count", "TotalComments"}};

  bool ok = true;
  std::ostringstream detail;
  std::string community_answer;
  const int n = 4;
  for (const char* ranking : {"relevance", "votes", "views"}) {
    auto events = chat("community", ranking, n);
    auto sources = sources_of(events);
    bool mode_ok = sources.is_array() && static_cast<int>(sources.size()) == n &&
                   !events.empty() && events.back().name == "done";
    std::vector<RetrievedSource> as_items;
    for (std::size_t i = 0; mode_ok && i < sources.size(); ++i) {
      const auto& s = sources[i];
      const auto& meta = s["meta"];
      auto row = csv.find(meta["notebook_id"].get<std::string>());
      mode_ok &= row != csv.end() && s["rank_position"] == static_cast<int>(i) + 1;
      if (!mode_ok) break;
      for (const auto& [key, column] : fields) mode_ok &= meta[key] == row->second[column];
      for (const auto& [key, column] : counts) {
        mode_ok &= std::to_string(meta[key].get<std::int64_t>()) == row->second[column];
      }
      RetrievedSource item;
      item.chunk.chunk_id = s["chunk_id"];
      item.meta.vote_count = meta["vote_count"];
      item.meta.view_count = meta["view_count"];
      item.relevance_score = s["relevance_score"];
      item.mmr_score = s["mmr_score"];
      as_items.push_back(item);
    }
    std::vector<std::string> shown;
    for (const auto& it : as_items) shown.push_back(it.chunk.chunk_id);
    mode_ok &= shown == oracle::key_tuple_sort(as_items, parse_ranking_mode(ranking));
    if (std::string(ranking) == "relevance") community_answer = testing::token_text(events);
    detail << ranking << " " << (mode_ok ? "ok" : "WRONG") << ", ";
    ok &= mode_ok;
  }

  auto hidden = chat("rag_hidden", "relevance", n);
  const bool hidden_ok = !hidden.empty() && sources_of(hidden).is_null() &&
                         testing::token_text(hidden) == community_answer;
  detail << "rag_hidden " << (hidden_ok ? "ok" : "WRONG") << ", ";

  auto plain = chat("plain", "relevance", n);
  const auto plain_text = testing::token_text(plain);
  const bool plain_ok = !plain.empty() && sources_of(plain).is_null() &&
                        plain_text.find("sources: (none)\ncontext_chars: 0\n") != std::string::npos;
  detail << "plain " << (plain_ok ? "ok" : "WRONG");

  const double s = seconds_since(t0);
  ok &= hidden_ok && plain_ok && s < kEndToEndLimitS;
  detail << ", " << fmt(s) << " s (limit " << fmt(kEndToEndLimitS, "%.0f") << " s)";
  return {ok, detail.str()};
}

Outcome persistence() {
  testing::TempDir tmp;
  save_index(*g_fixture_index, tmp.path() / "idx");
  auto loaded = load_index(tmp.path() / "idx");

  bool ok = loaded.chunk_count() == g_fixture_index->chunk_count();
  double worst = 0.0;
  for (std::size_t i = 0; ok && i < loaded.chunk_count(); ++i) {
    ok &= loaded.index.entry(i).chunk.chunk_id == g_fixture_index->index.entry(i).chunk.chunk_id;
    auto a = g_fixture_index->index.vector(i);
    auto b = loaded.index.vector(i);
    for (std::size_t d = 0; d < a.size(); ++d) {
      worst = std::max(worst, std::abs(double(a[d]) - double(b[d])));
    }
  }
  const std::vector<std::string> queries = {"fill missing LotFrontage", "lightgbm early stopping",
                                            "catboostquantile", "stacking ridge lasso",
                                            "write submission csv", "log transform SalePrice"};
  int same = 0;
  int total = 0;
  for (auto mode : {RankingMode::kRelevance, RankingMode::kVotes, RankingMode::kViews}) {
    for (const auto& q : queries) {
      SearchSettings s;
      s.ranking_mode = mode;
      s.n_sources = 10;
      auto x = retrieve(g_fixture_index->index, q, s, g_fixture_index->embedder);
      auto y = retrieve(loaded.index, q, s, loaded.embedder);
      bool eq = x.size() == y.size();
      for (std::size_t i = 0; eq && i < x.size(); ++i) eq = x[i].chunk.chunk_id == y[i].chunk.chunk_id;
      same += eq;
      ++total;
    }
  }
  ok &= same == total && worst <= kPersistTolerance;
  return {ok, std::to_string(same) + "/" + std::to_string(total) +
                  " queries same ordered ids, max component diff " + fmt(worst, "%.2e") +
                  " (tol " + fmt(kPersistTolerance, "%.0e") + ")"};
}

Outcome embedding_invariants() {
  std::mt19937_64 rng(5005);
  std::uniform_int_distribution<int> n_words(1, 30);
  std::uniform_int_distribution<int> word_len(1, 9);
  std::uniform_int_distribution<int> ch(0, 35);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  LocalHashEmbedder embedder(256);
  int bad_norm = 0, bad_det = 0, bad_rep = 0;
  double worst = 0.0;
  for (int i = 0; i < kEmbedTexts; ++i) {
    std::string text;
    const int words = n_words(rng);
    for (int w = 0; w < words; ++w) {
      const int len = word_len(rng);
      for (int c = 0; c < len; ++c) text += alphabet[static_cast<std::size_t>(ch(rng))];
      text += w % 4 == 3 ? ", " : " ";
    }
    auto a = embedder.embed(text);
    auto b = embedder.embed(text);
    auto rep = embedder.embed(text + " " + text + " " + text);
    const double err = std::abs(a.norm() - 1.0);
    worst = std::max(worst, err);
    bad_norm += err >= kNormTolerance;
    bad_det += !(a == b);
    bad_rep += !(a == rep);
    auto raw = testing::random_unit(rng, 1 + i % 64);
    const double err2 = std::abs(testing::as_embedding(raw).norm() - 1.0);
    worst = std::max(worst, err2);
    bad_norm += err2 >= kNormTolerance;
  }
  return {bad_norm + bad_det + bad_rep == 0,
          std::to_string(kEmbedTexts) + " texts: max |norm-1| " + fmt(worst, "%.2e") + " (tol " +
              fmt(kNormTolerance, "%.0e") + "), nondeterministic " + std::to_string(bad_det) +
              ", repetition-variant " + std::to_string(bad_rep)};
}

Outcome retrieve_performance() {
  std::mt19937_64 rng(6006);
  VectorIndex index(kPerfDim);
  const auto meta = testing::make_meta("perf", 1, 1);
  std::normal_distribution<double> normal;
  std::vector<double> raw(kPerfDim);
  for (int i = 0; i < kPerfChunks; ++i) {
    for (auto& v : raw) v = normal(rng);
    Chunk c;
    c.chunk_id = "perf#" + std::to_string(i);
    c.notebook_id = "perf";
    c.chunk_ordinal = i;
    index.add(std::move(c), EmbeddingVector::normalize(std::span<const double>(raw)), meta);
  }
  LocalHashEmbedder embedder(kPerfDim);
  SearchSettings settings;
  settings.n_sources = 10;
  std::vector<double> ms;
  for (int r = 0; r < kPerfRuns; ++r) {
    const auto t0 = Clock::now();
    auto out = retrieve(index, "gradient boosting early stopping query " + std::to_string(r),
                        settings, embedder);
    ms.push_back(seconds_since(t0) * 1000.0);
    if (out.size() != 10) return {false, "retrieve returned " + std::to_string(out.size())};
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  return {median < kRetrieveMedianLimitMs,
          "median " + fmt(median, "%.2f") + " ms over " + std::to_string(kPerfRuns) + " runs, " +
              std::to_string(kPerfChunks) + " chunks dim " + std::to_string(kPerfDim) +
              " (limit " + fmt(kRetrieveMedianLimitMs, "%.0f") + " ms)"};
}

}  // namespace

int main() {
  g_fixture_index = std::make_shared<const CompetitionIndex>(nbrag::testing::fixture_index());

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"chunker-partition", chunker_partition},
      {"chunker-edge-cases", chunker_edges},
      {"mmr-oracle-equivalence", mmr_oracle},
      {"mmr-lambda-zero", lambda_zero},
      {"ranking-modes", ranking_modes},
      {"settings-bounds", settings_bounds},
      {"prompt-snapshot", prompt_snapshot},
      {"end-to-end-mock", end_to_end},
      {"index-persistence", persistence},
      {"embedding-invariants", embedding_invariants},
      {"retrieve-performance", retrieve_performance},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
