#include "nbrag/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "http_util.hpp"
#include "nbrag/error.hpp"

namespace nbrag {

namespace {

template <typename T>
std::vector<float> normalized_copy(std::span<const T> raw) {
  if (raw.empty()) throw Error(ErrorCode::kDimMismatch, "embedding has zero dimensions");
  double sum = 0.0;
  for (T v : raw) sum += static_cast<double>(v) * static_cast<double>(v);
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw Error(ErrorCode::kEmptyText, "cannot normalize a zero or non-finite vector");
  }
  const double norm = std::sqrt(sum);
  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(raw[i]) / norm);
  }
  return out;
}

}  // namespace

EmbeddingVector EmbeddingVector::normalize(std::span<const double> raw) {
  return EmbeddingVector(normalized_copy(raw));
}

EmbeddingVector EmbeddingVector::normalize(std::span<const float> raw) {
  return EmbeddingVector(normalized_copy(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
  EmbeddingVector v(std::move(values));
  if (v.values_.empty()) throw Error(ErrorCode::kDimMismatch, "embedding has zero dimensions");
  if (std::abs(v.norm() - 1.0) >= 1e-6) {
    throw Error(ErrorCode::kDimMismatch, "stored embedding is not unit-norm");
  }
  return v;
}

double EmbeddingVector::norm() const { return std::sqrt(dot(values_, values_)); }

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch, "cosine of dim " + std::to_string(a.dim()) +
                                             " vs dim " + std::to_string(b.dim()));
  }
  return std::clamp(dot(a.values(), b.values()), -1.0, 1.0);
}

std::string_view to_string(EmbedderKind kind) {
  return kind == EmbedderKind::kLocalHash ? "local_hash" : "remote";
}

EmbedderKind parse_embedder_kind(std::string_view text) {
  if (text == "local_hash") return EmbedderKind::kLocalHash;
  if (text == "remote") return EmbedderKind::kRemote;
  throw Error(ErrorCode::kConfig, "unknown embedder kind: " + std::string(text));
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

// ---------------------------------------------------------------------------
// Local hashing embedder

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> hash_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (c >= 0x80 || std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

LocalHashEmbedder::LocalHashEmbedder(int dim) {
  spec_.kind = EmbedderKind::kLocalHash;
  spec_.dim = dim;
  if (dim <= 0) throw Error(ErrorCode::kConfig, "embedder dim must be positive");
}

LocalHashEmbedder::LocalHashEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim <= 0) throw Error(ErrorCode::kConfig, "embedder dim must be positive");
}

EmbeddingVector LocalHashEmbedder::embed(std::string_view text) const {
  if (is_blank(text)) throw Error(ErrorCode::kEmptyText, "cannot embed blank text");
  std::vector<double> counts(static_cast<std::size_t>(spec_.dim), 0.0);
  const auto tokens = hash_tokens(text);
  if (tokens.empty()) throw Error(ErrorCode::kEmptyText, "text has no alphanumeric tokens");
  for (const auto& tok : tokens) {
    counts[fnv1a64(tok) % static_cast<std::uint64_t>(spec_.dim)] += 1.0;
  }
  return EmbeddingVector::normalize(std::span<const double>(counts));
}

// ---------------------------------------------------------------------------
// Remote embedder

struct RemoteEmbedder::Limiter {
  explicit Limiter(int max) : available(std::max(1, max)) {}

  void acquire() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard lock(mu);
      ++available;
    }
    cv.notify_one();
  }

  std::mutex mu;
  std::condition_variable cv;
  int available;
};

RemoteEmbedder::RemoteEmbedder(EmbedderSpec spec)
    : spec_(std::move(spec)), limiter_(std::make_shared<Limiter>(spec_.max_in_flight)) {
  if (spec_.endpoint_url.empty()) {
    throw Error(ErrorCode::kConfig, "remote embedder requires embedder.endpoint_url");
  }
  if (spec_.dim < 0) throw Error(ErrorCode::kConfig, "embedder dim must not be negative");
  detail::split_url(spec_.endpoint_url);
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  std::string owned(text);
  return request(std::span<const std::string>(&owned, 1)).front();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(
    std::span<const std::string> texts) const {
  constexpr std::size_t kBatch = 64;
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += kBatch) {
    auto part = request(texts.subspan(i, std::min(kBatch, texts.size() - i)));
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::request(std::span<const std::string> texts) const {
  for (const auto& t : texts) {
    if (is_blank(t)) throw Error(ErrorCode::kEmptyText, "cannot embed blank text");
  }
  const auto target = detail::split_url(spec_.endpoint_url);
  const std::string key = detail::key_from_env(spec_.api_key_env);

  nlohmann::json body;
  body["model"] = spec_.model_name;
  if (texts.size() == 1) {
    body["input"] = texts.front();
  } else {
    body["input"] = std::vector<std::string>(texts.begin(), texts.end());
  }
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

  std::string last_error;
  for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(spec_.retry_base_delay * (1 << (attempt - 1)));

    httplib::Client client(target.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec_.timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);

    limiter_->acquire();
    auto res = client.Post(target.path, headers, payload, "application/json");
    limiter_->release();

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kProviderError,
                  "embedding provider returned HTTP " + std::to_string(res->status));
    }

    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("data") || !doc["data"].is_array() ||
        doc["data"].size() != texts.size()) {
      throw Error(ErrorCode::kProviderError, "embedding provider returned an unexpected body");
    }
    std::vector<EmbeddingVector> out(texts.size());
    std::size_t position = 0;
    for (const auto& item : doc["data"]) {
      const std::size_t idx = item.value("index", position++);
      if (idx >= out.size() || !item.contains("embedding") || !item["embedding"].is_array()) {
        throw Error(ErrorCode::kProviderError, "embedding provider returned a malformed item");
      }
      auto raw = item["embedding"].get<std::vector<double>>();
      if (spec_.dim > 0 && static_cast<int>(raw.size()) != spec_.dim) {
        throw Error(ErrorCode::kDimMismatch, "provider returned dim " +
                                                 std::to_string(raw.size()) + ", expected " +
                                                 std::to_string(spec_.dim));
      }
      out[idx] = EmbeddingVector::normalize(std::span<const double>(raw));
    }
    return out;
  }
  throw Error(ErrorCode::kProviderError,
              "embedding provider failed after " + std::to_string(spec_.max_retries) +
                  " retries: " + last_error);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
  if (spec.kind == EmbedderKind::kLocalHash) return std::make_unique<LocalHashEmbedder>(spec);
  return std::make_unique<RemoteEmbedder>(spec);
}

EmbeddingVector embed_text(std::string_view text, const EmbedderSpec& spec) {
  return make_embedder(spec)->embed(text);
}

}  // namespace nbrag
