#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coldrec/corpus.hpp"
#include "coldrec/support_set.hpp"

namespace coldrec::model {
class HttpClient;
}

namespace coldrec::embed {

inline constexpr std::size_t kDefaultDimension = 256;

// Unit L2 norm, or all zeros.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  double norm() const;
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Signed feature hashing over lowercase alphanumeric tokens:
// bucket = fnv1a64(token) mod D, sign from bit 63, then L2-normalised.
EmbeddingVector hashed_embedding(std::string_view text, std::size_t dimension = kDefaultDimension);

// dot(a, b) / (|a| |b|), 0 when either norm is 0. Throws InputError on a
// dimension mismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  // One vector per text, in input order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
  EmbeddingVector embed_one(const std::string& text);
};

class HashedEmbedder final : public Embedder {
 public:
  explicit HashedEmbedder(std::size_t dimension = kDefaultDimension);
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
};

enum class EmbedderKind { hashed, remote };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::hashed;
  std::size_t dimension = kDefaultDimension;
  std::string base_url;
  std::string model;
  std::string token_env = "OPENAI_API_KEY";
  std::filesystem::path cache_dir;

  // Throws InputError: dimension < 8, or remote without endpoint settings.
  void validate() const;
};

// Content-addressed vector store. One file per (model, text):
//   bytes 0..7   magic "CREMBV01"
//   bytes 8..11  dimension, uint32 little-endian
//   bytes 12..15 reserved, zero
//   then dimension float32 little-endian values.
// Reads run concurrently; writes are serialised and atomic (temp + rename).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path dir);
  std::optional<EmbeddingVector> lookup(std::string_view model, std::string_view text) const;
  void store(std::string_view model, std::string_view text, const EmbeddingVector& vec);
  std::filesystem::path path_for(std::string_view model, std::string_view text) const;

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

// Embeddings endpoint client: POST {base_url}/embeddings with
// {"model", "input": [...]}, vectors normalised locally, cached on disk.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(EmbedderConfig config, std::shared_ptr<model::HttpClient> client);
  std::size_t dimension() const override { return config_.dimension; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

  std::size_t network_calls() const { return network_calls_; }
  std::size_t last_attempts() const { return last_attempts_; }

 private:
  EmbedderConfig config_;
  std::shared_ptr<model::HttpClient> client_;
  EmbeddingCache cache_;
  std::size_t network_calls_ = 0;
  std::size_t last_attempts_ = 0;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

// Text fed to the embedder: the metadata sentence (when any metadata exists)
// followed by titles and tags of the first 10 ranked items.
std::string user_text(const corpus::UserProfile& profile, const corpus::Catalog& catalog,
                      corpus::DatasetKind kind);

struct PoolEntry {
  std::string user_id;
  EmbeddingVector vector;
  std::vector<std::string> top_titles;  // r_i, at most 5
};

// Training users eligible as exemplars, with their embeddings precomputed.
class ExemplarPool {
 public:
  static constexpr std::size_t kMinInteractions = 5;
  static constexpr std::size_t kTitlesPerExemplar = 5;

  ExemplarPool() = default;
  explicit ExemplarPool(std::vector<PoolEntry> entries);

  // Keeps profiles with at least `min_interactions` ranked items.
  static ExemplarPool build(const std::map<std::string, corpus::UserProfile>& training_profiles,
                            const corpus::Catalog& catalog, corpus::DatasetKind kind, Embedder& embedder,
                            std::size_t min_interactions = kMinInteractions);

  std::span<const PoolEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Top-k by cosine similarity to `target`, ties by ascending user id.
  SupportSet select(const EmbeddingVector& target, std::size_t k) const;

 private:
  std::vector<PoolEntry> entries_;
};

SupportSet select_exemplars(const corpus::UserProfile& target, const ExemplarPool& pool,
                            const corpus::Catalog& catalog, corpus::DatasetKind kind, Embedder& embedder,
                            std::size_t k);

}  // namespace coldrec::embed
