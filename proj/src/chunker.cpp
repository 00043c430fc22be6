#include "nbrag/chunker.hpp"

namespace nbrag {

std::string make_chunk_id(const std::string& notebook_id, int chunk_ordinal) {
  return notebook_id + "#" + std::to_string(chunk_ordinal);
}

std::vector<Chunk> chunk_notebook(const Notebook& nb) {
  std::vector<Chunk> chunks;
  bool open = false;
  for (const auto& cell : nb.cells) {
    const bool starts_new =
        !open || (cell.kind == CellKind::kMarkdown && !chunks.back().code_cells.empty());
    if (starts_new) {
      Chunk c;
      c.notebook_id = nb.notebook_id;
      c.chunk_ordinal = static_cast<int>(chunks.size());
      c.chunk_id = make_chunk_id(nb.notebook_id, c.chunk_ordinal);
      chunks.push_back(std::move(c));
      open = true;
    }
    auto& current = chunks.back();
    (cell.kind == CellKind::kMarkdown ? current.markdown_cells : current.code_cells)
        .push_back(cell);
  }
  for (auto& c : chunks) c.rendered_text = render_chunk_text(c);
  return chunks;
}

namespace {

void append_line_terminated(std::string& out, const std::string& text) {
  out += text;
  if (text.empty() || text.back() != '\n') out += '\n';
}

}  // namespace

std::string render_chunk_text(const Chunk& chunk) {
  std::string out;
  bool first = true;
  for (const auto& cell : chunk.markdown_cells) {
    if (!first) out += '\n';
    append_line_terminated(out, cell.source);
    first = false;
  }
  for (const auto& cell : chunk.code_cells) {
    if (!first) out += '\n';
    out += "```python\n";
    append_line_terminated(out, cell.source);
    out += "```\n";
    first = false;
  }
  return out;
}

std::vector<Chunk> chunk_corpus(const Corpus& corpus) {
  std::vector<Chunk> out;
  for (const auto& nb : corpus.notebooks) {
    auto chunks = chunk_notebook(nb);
    out.insert(out.end(), std::make_move_iterator(chunks.begin()),
               std::make_move_iterator(chunks.end()));
  }
  return out;
}

}  // namespace nbrag
