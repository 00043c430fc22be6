#include "nbrag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "nbrag/error.hpp"

namespace nbrag {

using nlohmann::json;

std::string_view to_string(CellKind kind) {
  return kind == CellKind::kMarkdown ? "markdown" : "code";
}

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join_source(const json& source, const std::string& notebook_id) {
  if (source.is_string()) return source.get<std::string>();
  if (source.is_array()) {
    std::string out;
    for (const auto& line : source) {
      if (!line.is_string()) {
        throw Error(ErrorCode::kMalformedDocument,
                    notebook_id + ": cell source contains a non-string line");
      }
      out += line.get_ref<const std::string&>();
    }
    return out;
  }
  if (source.is_null()) return {};
  throw Error(ErrorCode::kMalformedDocument,
              notebook_id + ": cell source is neither string nor list");
}

std::optional<std::string> declared_language(const json& doc) {
  auto it = doc.find("metadata");
  if (it == doc.end() || !it->is_object()) return std::nullopt;
  const json& meta = *it;
  auto read = [](const json& obj, const char* outer, const char* key)
      -> std::optional<std::string> {
    auto o = obj.find(outer);
    if (o == obj.end() || !o->is_object()) return std::nullopt;
    auto k = o->find(key);
    if (k == o->end() || !k->is_string()) return std::nullopt;
    return k->get<std::string>();
  };
  if (auto lang = read(meta, "kernelspec", "language")) return lang;
  if (auto lang = read(meta, "language_info", "name")) return lang;
  if (auto l = meta.find("language"); l != meta.end() && l->is_string()) {
    return l->get<std::string>();
  }
  return std::nullopt;
}

// Cell magics that switch a code cell to another interpreter.
bool has_foreign_cell_magic(std::string_view source) {
  static const std::set<std::string, std::less<>> kForeign = {
      "r",    "bash",  "sh",   "script", "javascript", "js",    "html",
      "sql",  "ruby",  "perl", "latex",  "svg",        "julia", "scala"};
  std::string_view s = trim(source);
  if (s.rfind("%%", 0) != 0) return false;
  s.remove_prefix(2);
  std::size_t end = 0;
  while (end < s.size() && std::isalnum(static_cast<unsigned char>(s[end]))) ++end;
  return kForeign.count(lower(s.substr(0, end))) > 0;
}

}  // namespace

Notebook parse_notebook(std::string_view raw, std::string notebook_id) {
  json doc = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kMalformedDocument, notebook_id + ": not a JSON object");
  }
  auto cells_it = doc.find("cells");
  if (cells_it == doc.end() || !cells_it->is_array()) {
    throw Error(ErrorCode::kMalformedDocument,
                notebook_id + ": missing top-level cell list");
  }

  Notebook nb;
  nb.notebook_id = std::move(notebook_id);

  int position = 0;
  for (const auto& cell : *cells_it) {
    const int ordinal = position++;
    if (!cell.is_object()) {
      throw Error(ErrorCode::kMalformedDocument, nb.notebook_id + ": cell is not an object");
    }
    auto type_it = cell.find("cell_type");
    if (type_it == cell.end() || !type_it->is_string()) {
      throw Error(ErrorCode::kMalformedDocument, nb.notebook_id + ": cell without cell_type");
    }
    const auto& type = type_it->get_ref<const std::string&>();
    CellKind kind;
    if (type == "markdown") {
      kind = CellKind::kMarkdown;
    } else if (type == "code") {
      kind = CellKind::kCode;
    } else {
      continue;
    }
    auto src_it = cell.find("source");
    std::string source = src_it == cell.end() ? std::string()
                                              : join_source(*src_it, nb.notebook_id);
    if (is_blank(source)) continue;
    nb.cells.push_back(Cell{kind, std::move(source), ordinal});
  }

  auto declared = declared_language(doc);
  if (declared && lower(trim(*declared)) != "python") {
    throw Error(ErrorCode::kUnsupportedLanguage,
                nb.notebook_id + ": language '" + *declared + "' is not python");
  }
  if (nb.cells.empty()) {
    throw Error(ErrorCode::kEmptyNotebook, nb.notebook_id + ": no non-empty cells");
  }
  if (!declared) {
    bool python_code = std::any_of(nb.cells.begin(), nb.cells.end(), [](const Cell& c) {
      return c.kind == CellKind::kCode && !has_foreign_cell_magic(c.source);
    });
    if (!python_code) {
      throw Error(ErrorCode::kUnsupportedLanguage,
                  nb.notebook_id + ": no language metadata and no python code cell");
    }
  }
  nb.language = "python";
  return nb;
}

// ---------------------------------------------------------------------------

std::vector<Record> read_csv_records(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          quoted = true;
          field_started = true;
        } else {
          field += c;
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_row();
        break;
      case '\n':
        end_row();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kMalformedDocument, "csv: unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();

  std::vector<Record> out;
  if (rows.empty()) return out;
  const auto& header = rows.front();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Record rec;
    for (std::size_t c = 0; c < header.size() && c < rows[r].size(); ++c) {
      rec[header[c]] = rows[r][c];
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Record> read_jsonl_records(std::string_view text) {
  std::vector<Record> out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw Error(ErrorCode::kMalformedDocument,
                  "jsonl: line " + std::to_string(line_no) + " is not a JSON object");
    }
    Record rec;
    for (const auto& [key, value] : obj.items()) {
      if (value.is_string()) {
        rec[key] = value.get<std::string>();
      } else if (!value.is_null()) {
        rec[key] = value.dump();
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

bool is_iso_date(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return false;
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc() && ptr == first + len;
  };
  int y = 0, m = 0, d = 0;
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return false;
  if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return false;
  using namespace std::chrono;
  return year_month_day{year{y}, month{static_cast<unsigned>(m)},
                        day{static_cast<unsigned>(d)}}
      .ok();
}

namespace {

const std::vector<std::string>& required_fields() {
  static const std::vector<std::string> kFields = {
      "notebook_id",   "url",        "title",         "author_name",
      "vote_count",    "view_count", "comment_count", "publish_date",
      "competition_id"};
  return kFields;
}

std::optional<std::int64_t> parse_count(std::string_view raw) {
  raw = trim(raw);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (raw.empty() || ec != std::errc() || ptr != raw.data() + raw.size() || value < 0) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

MetadataLoad load_metadata(const std::vector<Record>& rows, const ColumnMapping& mapping) {
  for (const auto& field : required_fields()) {
    auto it = mapping.find(field);
    if (it == mapping.end() || it->second.empty()) {
      throw Error(ErrorCode::kMissingMapping, "metadata: no column mapped for '" + field + "'");
    }
  }

  MetadataLoad result;
  std::unordered_map<std::string, std::size_t> position;

  std::size_t row_no = 0;
  for (const auto& row : rows) {
    ++row_no;
    auto get = [&](const std::string& field) -> std::optional<std::string> {
      auto m = mapping.find(field);
      if (m == mapping.end()) return std::nullopt;
      auto v = row.find(m->second);
      if (v == row.end()) return std::nullopt;
      return v->second;
    };
    auto skip = [&](const std::string& why) {
      ++result.skipped;
      result.diagnostics.push_back("row " + std::to_string(row_no) + ": " + why);
    };

    NotebookMeta meta;
    meta.notebook_id = get("notebook_id").value_or("");
    if (trim(meta.notebook_id).empty()) {
      skip("missing notebook_id");
      continue;
    }
    auto votes = parse_count(get("vote_count").value_or(""));
    auto views = parse_count(get("view_count").value_or(""));
    auto comments = parse_count(get("comment_count").value_or(""));
    if (!votes || !views || !comments) {
      skip("unparseable or negative count for " + meta.notebook_id);
      continue;
    }
    meta.vote_count = *votes;
    meta.view_count = *views;
    meta.comment_count = *comments;
    meta.publish_date = get("publish_date").value_or("");
    if (!is_iso_date(meta.publish_date)) {
      skip("unparseable publish_date for " + meta.notebook_id);
      continue;
    }
    meta.url = get("url").value_or("");
    meta.title = get("title").value_or("");
    meta.author_name = get("author_name").value_or("");
    meta.author_avatar_url = get("author_avatar_url").value_or("");
    meta.competition_id = get("competition_id").value_or("");

    auto [it, inserted] = position.try_emplace(meta.notebook_id, result.metas.size());
    if (inserted) {
      result.metas.push_back(std::move(meta));
    } else {
      result.warnings.push_back("row " + std::to_string(row_no) + ": duplicate notebook_id '" +
                                meta.notebook_id + "', keeping this row");
      result.metas[it->second] = std::move(meta);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

CorpusBuild build_corpus(std::vector<Notebook> notebooks,
                         const std::vector<NotebookMeta>& metas,
                         const std::string& competition_id,
                         const std::string& competition_title,
                         const std::string& competition_description) {
  std::unordered_map<std::string, const NotebookMeta*> by_id;
  for (const auto& m : metas) by_id[m.notebook_id] = &m;

  std::stable_sort(notebooks.begin(), notebooks.end(),
                   [](const Notebook& a, const Notebook& b) {
                     return a.notebook_id < b.notebook_id;
                   });

  CorpusBuild out;
  out.corpus.competition_id = competition_id;
  out.corpus.competition_title = competition_title;
  out.corpus.competition_description = competition_description;
  auto& report = out.report;

  for (auto& nb : notebooks) {
    if (out.corpus.metadata.count(nb.notebook_id) != 0) {
      report.diagnostics.push_back(nb.notebook_id + ": duplicate notebook ignored");
      continue;
    }
    auto it = by_id.find(nb.notebook_id);
    if (it == by_id.end()) {
      ++report.rejected_missing_metadata;
      report.diagnostics.push_back(nb.notebook_id + ": no metadata row");
      continue;
    }
    if (it->second->competition_id != competition_id) {
      ++report.rejected_other_competition;
      continue;
    }
    for (const auto& cell : nb.cells) {
      ++(cell.kind == CellKind::kMarkdown ? report.markdown_cells : report.code_cells);
    }
    out.corpus.metadata.emplace(nb.notebook_id, *it->second);
    out.corpus.notebooks.push_back(std::move(nb));
    ++report.admitted;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NotebookScan scan_notebooks(const std::filesystem::path& dir,
                            const std::optional<std::filesystem::path>& manifest) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "notebook directory not found: " + dir.string());
  }

  std::map<std::string, std::string> id_for_file;
  if (manifest) {
    for (const auto& rec : read_csv_records(read_file(*manifest))) {
      auto id = rec.find("notebook_id");
      auto file = rec.find("file");
      if (id != rec.end() && file != rec.end()) {
        id_for_file[fs::path(file->second).lexically_normal().generic_string()] = id->second;
      }
    }
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ipynb") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  NotebookScan scan;
  auto& failures = scan.failures;
  for (const auto& file : files) {
    ++failures.files_seen;
    std::string rel = file.lexically_relative(dir).lexically_normal().generic_string();
    auto mapped = id_for_file.find(rel);
    std::string id = mapped != id_for_file.end() ? mapped->second : file.stem().string();
    try {
      scan.notebooks.push_back(parse_notebook(read_file(file), id));
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::kEmptyNotebook: ++failures.empty; break;
        case ErrorCode::kUnsupportedLanguage: ++failures.unsupported_language; break;
        default: ++failures.malformed; break;
      }
      failures.diagnostics.push_back(rel + ": " + std::string(to_string(e.code())) + ": " +
                                     e.what());
    }
  }
  return scan;
}

}  // namespace nbrag
