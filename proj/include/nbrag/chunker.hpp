#pragma once

#include <string>
#include <vector>

#include "nbrag/corpus.hpp"

namespace nbrag {

// A run of consecutive markdown cells followed by the run of code cells
// that immediately follows it. Either run may be empty, never both.
struct Chunk {
  std::string chunk_id;  // notebook_id + "#" + chunk_ordinal
  std::string notebook_id;
  int chunk_ordinal = 0;
  std::vector<Cell> markdown_cells;
  std::vector<Cell> code_cells;
  std::string rendered_text;

  bool operator==(const Chunk&) const = default;
};

std::string make_chunk_id(const std::string& notebook_id, int chunk_ordinal);

/// Splits a notebook at every markdown cell that follows a code cell.
/// rendered_text is filled in for each chunk.
std::vector<Chunk> chunk_notebook(const Notebook& nb);

/// Markdown sources separated by blank lines, then each code cell as a
/// ```python fenced block.
std::string render_chunk_text(const Chunk& chunk);

/// Chunks every notebook of a corpus, in corpus order.
std::vector<Chunk> chunk_corpus(const Corpus& corpus);

}  // namespace nbrag
