#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nbrag {

/// Unit-norm embedding. Every constructor path normalizes or validates.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  /// L2-normalizes `raw`. Throws kDimMismatch on empty input and kEmptyText
  /// on an all-zero vector.
  static EmbeddingVector normalize(std::span<const double> raw);
  static EmbeddingVector normalize(std::span<const float> raw);

  /// Adopts values that are already unit-norm (|norm - 1| < 1e-6), e.g.
  /// when reloading a persisted index. Values are kept bit-for-bit.
  static EmbeddingVector from_unit(std::vector<float> values);

  std::span<const float> values() const { return values_; }
  int dim() const { return static_cast<int>(values_.size()); }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
  std::vector<float> values_;
};

/// Dot product accumulated in double, index order 0..n-1.
double dot(std::span<const float> a, std::span<const float> b);

/// Throws kDimMismatch when dims differ.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EmbedderKind { kLocalHash, kRemote };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kLocalHash;
  int dim = 256;  // remote: 0 accepts whatever the provider returns
  std::string model_name = "text-embedding-ada-002";
  std::string endpoint_url;
  std::string api_key_env;
  int max_retries = 3;
  std::chrono::milliseconds retry_base_delay{250};
  std::chrono::milliseconds timeout{30000};
  int max_in_flight = 4;

  bool operator==(const EmbedderSpec&) const = default;
};

std::string_view to_string(EmbedderKind kind);
EmbedderKind parse_embedder_kind(std::string_view text);

class Embedder {
 public:
  virtual ~Embedder() = default;

  /// Throws kEmptyText for blank input, kProviderError / kDimMismatch for
  /// provider failures.
  virtual EmbeddingVector embed(std::string_view text) const = 0;

  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;

  virtual const EmbedderSpec& spec() const = 0;
};

/// Bag-of-tokens hashing embedder: lowercased alphanumeric tokens, FNV-1a
/// 64-bit hash into `dim` buckets, L2-normalized counts.
class LocalHashEmbedder final : public Embedder {
 public:
  explicit LocalHashEmbedder(int dim = 256);
  explicit LocalHashEmbedder(EmbedderSpec spec);

  EmbeddingVector embed(std::string_view text) const override;
  const EmbedderSpec& spec() const override { return spec_; }

 private:
  EmbedderSpec spec_;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercased tokens split on every non-alphanumeric ASCII byte. Bytes
/// >= 0x80 are kept inside tokens.
std::vector<std::string> hash_tokens(std::string_view text);

/// Embeddings-style HTTP provider: POST {"model", "input"} and read
/// data[i].embedding. Failed calls are retried with exponential backoff;
/// concurrent calls beyond max_in_flight wait.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderSpec spec);

  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;
  const EmbedderSpec& spec() const override { return spec_; }

 private:
  struct Limiter;
  std::vector<EmbeddingVector> request(std::span<const std::string> texts) const;

  EmbedderSpec spec_;
  std::shared_ptr<Limiter> limiter_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);

/// One-shot convenience over make_embedder(spec)->embed(text).
EmbeddingVector embed_text(std::string_view text, const EmbedderSpec& spec);

}  // namespace nbrag
