#include "nbrag/pipeline.hpp"

#include <sstream>

#include "nbrag/error.hpp"

namespace nbrag {

IngestResult ingest(const EngineConfig& config) {
  if (config.competition_id.empty()) {
    throw Error(ErrorCode::kConfig, "corpus.competition_id is required");
  }
  if (config.notebooks_dir.empty()) throw Error(ErrorCode::kConfig, "corpus.notebooks_dir is required");
  if (config.metadata_path.empty()) throw Error(ErrorCode::kConfig, "metadata.path is required");

  IngestResult out;
  auto scan = scan_notebooks(config.notebooks_dir, config.notebook_manifest);
  out.parse = std::move(scan.failures);

  const auto text = read_file(config.metadata_path);
  const auto rows =
      config.metadata_format == "jsonl" ? read_jsonl_records(text) : read_csv_records(text);
  out.metadata = load_metadata(rows, config.columns);

  out.build = build_corpus(std::move(scan.notebooks), out.metadata.metas, config.competition_id,
                           config.competition_title, config.competition_description);
  return out;
}

std::string format_ingest_report(const IngestResult& r) {
  const auto& rep = r.build.report;
  std::ostringstream out;
  out << "competition: " << r.build.corpus.competition_id << "\n"
      << "notebook files: " << r.parse.files_seen << "\n"
      << "parse rejected: " << r.parse.total() << " (malformed " << r.parse.malformed
      << ", empty " << r.parse.empty << ", unsupported language "
      << r.parse.unsupported_language << ")\n"
      << "metadata rows: " << r.metadata.metas.size() << " (skipped " << r.metadata.skipped
      << ", duplicate warnings " << r.metadata.warnings.size() << ")\n"
      << "notebooks admitted: " << rep.admitted << "\n"
      << "notebooks rejected: " << rep.rejected() << " (missing metadata "
      << rep.rejected_missing_metadata << ", other competition "
      << rep.rejected_other_competition << ")\n"
      << "markdown cells: " << rep.markdown_cells << "\n"
      << "code cells: " << rep.code_cells << "\n";
  return out.str();
}

}  // namespace nbrag
