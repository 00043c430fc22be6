#include "nbrag/index_store.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "nbrag/error.hpp"

namespace nbrag {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json cells_to_json(const std::vector<Cell>& cells) {
  json out = json::array();
  for (const auto& c : cells) out.push_back({{"ordinal", c.ordinal}, {"source", c.source}});
  return out;
}

std::vector<Cell> cells_from_json(const json& arr, CellKind kind) {
  std::vector<Cell> out;
  for (const auto& c : arr) {
    out.push_back(Cell{kind, c.at("source").get<std::string>(), c.at("ordinal").get<int>()});
  }
  return out;
}

json meta_to_json(const NotebookMeta& m) {
  return {{"notebook_id", m.notebook_id},
          {"url", m.url},
          {"title", m.title},
          {"author_name", m.author_name},
          {"author_avatar_url", m.author_avatar_url},
          {"vote_count", m.vote_count},
          {"view_count", m.view_count},
          {"comment_count", m.comment_count},
          {"publish_date", m.publish_date},
          {"competition_id", m.competition_id}};
}

NotebookMeta meta_from_json(const json& j) {
  NotebookMeta m;
  m.notebook_id = j.at("notebook_id").get<std::string>();
  m.url = j.at("url").get<std::string>();
  m.title = j.at("title").get<std::string>();
  m.author_name = j.at("author_name").get<std::string>();
  m.author_avatar_url = j.value("author_avatar_url", "");
  m.vote_count = j.at("vote_count").get<std::int64_t>();
  m.view_count = j.at("view_count").get<std::int64_t>();
  m.comment_count = j.at("comment_count").get<std::int64_t>();
  m.publish_date = j.at("publish_date").get<std::string>();
  m.competition_id = j.at("competition_id").get<std::string>();
  return m;
}

json spec_to_json(const EmbedderSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"dim", s.dim},
          {"model_name", s.model_name},
          {"endpoint_url", s.endpoint_url},
          {"api_key_env", s.api_key_env}};
}

EmbedderSpec spec_from_json(const json& j) {
  EmbedderSpec s;
  s.kind = parse_embedder_kind(j.at("kind").get<std::string>());
  s.dim = j.at("dim").get<int>();
  s.model_name = j.value("model_name", s.model_name);
  s.endpoint_url = j.value("endpoint_url", "");
  s.api_key_env = j.value("api_key_env", "");
  return s;
}

}  // namespace

CompetitionIndex build_index(const Corpus& corpus, const Embedder& embedder) {
  auto chunks = chunk_corpus(corpus);
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.rendered_text);
  auto vectors = embedder.embed_batch(texts);

  CompetitionIndex out;
  out.competition_id = corpus.competition_id;
  out.competition_title = corpus.competition_title;
  out.competition_description = corpus.competition_description;
  out.embedder = embedder.spec();
  const int dim = vectors.empty() ? std::max(embedder.spec().dim, 1) : vectors.front().dim();
  out.embedder.dim = dim;
  out.index = VectorIndex(dim);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& meta = corpus.metadata.at(chunks[i].notebook_id);
    out.index.add(std::move(chunks[i]), vectors[i], meta);
  }
  return out;
}

void save_index(const CompetitionIndex& index, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  std::ofstream chunks(dir / "chunks.jsonl", std::ios::binary | std::ios::trunc);
  if (!chunks) throw Error(ErrorCode::kIo, "cannot write " + (dir / "chunks.jsonl").string());
  for (std::size_t i = 0; i < index.index.size(); ++i) {
    const auto& entry = index.index.entry(i);
    const auto& c = entry.chunk;
    auto values = index.index.vector(i);
    json rec = {{"chunk_id", c.chunk_id},
                {"notebook_id", c.notebook_id},
                {"chunk_ordinal", c.chunk_ordinal},
                {"markdown_cells", cells_to_json(c.markdown_cells)},
                {"code_cells", cells_to_json(c.code_cells)},
                {"rendered_text", c.rendered_text},
                {"meta", meta_to_json(*entry.meta)},
                {"embedding", std::vector<float>(values.begin(), values.end())}};
    chunks << rec.dump() << '\n';
  }
  chunks.close();
  if (!chunks) throw Error(ErrorCode::kIo, "write failed for chunks.jsonl");

  json manifest = {{"format_version", kFormatVersion},
                   {"competition_id", index.competition_id},
                   {"competition_title", index.competition_title},
                   {"competition_description", index.competition_description},
                   {"dim", index.index.dim()},
                   {"embedder", spec_to_json(index.embedder)},
                   {"notebook_count", index.notebook_count()},
                   {"chunk_count", index.chunk_count()}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for manifest.json");
}

CompetitionIndex load_index(const std::filesystem::path& dir) {
  auto manifest = json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    throw Error(ErrorCode::kMalformedDocument, "index manifest is not valid JSON: " + dir.string());
  }

  CompetitionIndex out;
  std::size_t expected_chunks = 0;
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kMalformedDocument, "unsupported index format version");
    }
    out.competition_id = manifest.at("competition_id").get<std::string>();
    out.competition_title = manifest.at("competition_title").get<std::string>();
    out.competition_description = manifest.at("competition_description").get<std::string>();
    out.embedder = spec_from_json(manifest.at("embedder"));
    out.index = VectorIndex(manifest.at("dim").get<int>());
    expected_chunks = manifest.at("chunk_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("index manifest: ") + e.what());
  }

  std::istringstream lines(read_file(dir / "chunks.jsonl"));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto rec = json::parse(line);
      Chunk c;
      c.chunk_id = rec.at("chunk_id").get<std::string>();
      c.notebook_id = rec.at("notebook_id").get<std::string>();
      c.chunk_ordinal = rec.at("chunk_ordinal").get<int>();
      c.markdown_cells = cells_from_json(rec.at("markdown_cells"), CellKind::kMarkdown);
      c.code_cells = cells_from_json(rec.at("code_cells"), CellKind::kCode);
      c.rendered_text = rec.at("rendered_text").get<std::string>();
      auto vec = EmbeddingVector::from_unit(rec.at("embedding").get<std::vector<float>>());
      out.index.add(std::move(c), vec, meta_from_json(rec.at("meta")));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedDocument,
                  "chunks.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.index.size() != expected_chunks) {
    throw Error(ErrorCode::kMalformedDocument,
                "index holds " + std::to_string(out.index.size()) + " chunks, manifest says " +
                    std::to_string(expected_chunks));
  }
  return out;
}

}  // namespace nbrag
