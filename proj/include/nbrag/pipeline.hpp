#pragma once

#include <string>

#include "nbrag/config.hpp"
#include "nbrag/corpus.hpp"
#include "nbrag/index_store.hpp"

namespace nbrag {

struct IngestResult {
  CorpusBuild build;
  ParseFailures parse;
  MetadataLoad metadata;
};

/// Scans notebooks, loads metadata and joins them for the configured
/// competition.
IngestResult ingest(const EngineConfig& config);

std::string format_ingest_report(const IngestResult& result);

}  // namespace nbrag
