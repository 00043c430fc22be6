#include "nbrag/error.hpp"

namespace nbrag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedDocument: return "MalformedDocument";
    case ErrorCode::kEmptyNotebook: return "EmptyNotebook";
    case ErrorCode::kUnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::kMissingMapping: return "MissingMapping";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kDuplicateChunkId: return "DuplicateChunkId";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kInvalidSettings: return "InvalidSettings";
    case ErrorCode::kUnknownCompetition: return "UnknownCompetition";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kConfig: return "Config";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace nbrag
