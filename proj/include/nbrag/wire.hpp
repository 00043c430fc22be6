#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "nbrag/engine.hpp"

namespace nbrag::wire {

nlohmann::json to_json(const NotebookMeta& meta);
nlohmann::json to_json(const RetrievedSource& source);
nlohmann::json to_json(const std::vector<RetrievedSource>& sources);
nlohmann::json to_json(const CompetitionSummary& summary);

/// Parses a /api/chat body. Search settings may be nested under "settings"
/// or given at top level; missing ones fall back to `defaults`. Throws
/// kInvalidSettings for malformed fields (range checks happen later).
ChatRequest parse_chat_request(const nlohmann::json& body, const SearchSettings& defaults);

/// One server-sent event: "event: <name>\ndata: <json>\n\n".
std::string sse_event(std::string_view name, const nlohmann::json& data);

}  // namespace nbrag::wire
