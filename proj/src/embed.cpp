#include "coldrec/embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "coldrec/checksum.hpp"
#include "coldrec/error.hpp"
#include "coldrec/http.hpp"
#include "coldrec/kernels.hpp"
#include "coldrec/text.hpp"

namespace coldrec {

std::string exemplar_label(std::size_t position) {
  if (position < 25) return std::string(1, static_cast<char>('A' + position));
  return std::to_string(position + 1);
}

}  // namespace coldrec

namespace coldrec::embed {

namespace fs = std::filesystem;

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

EmbeddingVector hashed_embedding(std::string_view text, std::size_t dimension) {
  if (dimension == 0) throw InputError("embedding dimension must be positive");
  EmbeddingVector out{std::vector<double>(dimension, 0.0)};
  const std::string lower = text::to_lower_ascii(text);
  std::size_t i = 0;
  while (i < lower.size()) {
    if (!text::is_word_byte(static_cast<unsigned char>(lower[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lower.size() && text::is_word_byte(static_cast<unsigned char>(lower[j]))) ++j;
    const std::uint64_t h = fnv1a64(std::string_view(lower).substr(i, j - i));
    out.values[h % dimension] += (h >> 63) ? -1.0 : 1.0;
    i = j;
  }
  const double n = out.norm();
  if (n > 0.0) {
    for (double& v : out.values) v /= n;
  }
  return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw InputError("cosine_similarity: dimension mismatch " + std::to_string(a.dimension()) + " vs " +
                     std::to_string(b.dimension()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingVector Embedder::embed_one(const std::string& text) {
  return std::move(embed(std::span<const std::string>(&text, 1)).front());
}

HashedEmbedder::HashedEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension < 8) throw InputError("embedding dimension must be >= 8");
}

std::vector<EmbeddingVector> HashedEmbedder::embed(std::span<const std::string> texts) {
  return kernels::hashed_embed_batch(texts, dimension_);
}

void EmbedderConfig::validate() const {
  if (dimension < 8) throw InputError("embedder dimension must be >= 8");
  if (kind == EmbedderKind::remote && (base_url.empty() || model.empty())) {
    throw InputError("remote embedder requires base_url and model");
  }
}

// --- cache -----------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', 'R', 'E', 'M', 'B', 'V', '0', '1'};

void put_u32_le(char* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32_le(const char* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

EmbeddingVector normalized(std::vector<double> values) {
  EmbeddingVector v{std::move(values)};
  const double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.values) x /= n;
  }
  return v;
}

}  // namespace

EmbeddingCache::EmbeddingCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path EmbeddingCache::path_for(std::string_view model, std::string_view text) const {
  std::string key(model);
  key.push_back('\0');
  key.append(text);
  return dir_ / (sha256_hex(key) + ".bin");
}

std::optional<EmbeddingVector> EmbeddingCache::lookup(std::string_view model, std::string_view text) const {
  if (dir_.empty()) return std::nullopt;
  std::shared_lock lock(mutex_);
  std::ifstream in(path_for(model, text), std::ios::binary);
  if (!in) return std::nullopt;
  char header[16];
  if (!in.read(header, sizeof header) || std::memcmp(header, kMagic, 8) != 0) return std::nullopt;
  const std::uint32_t dim = get_u32_le(header + 8);
  std::vector<double> values(dim);
  for (auto& v : values) {
    char raw[4];
    if (!in.read(raw, 4)) return std::nullopt;
    v = std::bit_cast<float>(get_u32_le(raw));
  }
  return normalized(std::move(values));
}

void EmbeddingCache::store(std::string_view model, std::string_view text, const EmbeddingVector& vec) {
  if (dir_.empty()) return;
  std::unique_lock lock(mutex_);
  fs::create_directories(dir_);
  const fs::path final_path = path_for(model, text);
  const fs::path tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    char header[16] = {};
    std::memcpy(header, kMagic, 8);
    put_u32_le(header + 8, static_cast<std::uint32_t>(vec.dimension()));
    out.write(header, sizeof header);
    for (double v : vec.values) {
      char raw[4];
      put_u32_le(raw, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      out.write(raw, 4);
    }
    if (!out) throw Error("embedding cache write failed: " + tmp.string());
  }
  fs::rename(tmp, final_path);
}

// --- remote ------------------------------------------------------------------

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config, std::shared_ptr<model::HttpClient> client)
    : config_(std::move(config)), client_(std::move(client)), cache_(config_.cache_dir) {
  config_.validate();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw InputError("remote embedding requires a non-empty batch");
  std::vector<std::optional<EmbeddingVector>> found(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    found[i] = cache_.lookup(config_.model, texts[i]);
    if (found[i] && found[i]->dimension() != config_.dimension) found[i].reset();
    if (!found[i]) missing.push_back(i);
  }
  if (!missing.empty()) {
    nlohmann::json inputs = nlohmann::json::array();
    for (std::size_t i : missing) inputs.push_back(texts[i]);
    nlohmann::json body = {{"model", config_.model}, {"input", inputs}};
    ++network_calls_;
    auto result = client_->post_json("/embeddings", body.dump());
    last_attempts_ = static_cast<std::size_t>(result.attempts);
    auto doc = nlohmann::json::parse(result.body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("data") || !doc["data"].is_array() ||
        doc["data"].size() != missing.size()) {
      throw model::ModelError("embeddings response malformed", result.status, result.attempts, "protocol");
    }
    std::vector<std::optional<std::vector<double>>> ordered(missing.size());
    std::size_t position = 0;
    for (const auto& item : doc["data"]) {
      const std::size_t idx = item.contains("index") ? item["index"].get<std::size_t>() : position;
      ++position;
      if (idx >= ordered.size() || !item.contains("embedding")) {
        throw model::ModelError("embeddings response index out of range", result.status, result.attempts, "protocol");
      }
      ordered[idx] = item["embedding"].get<std::vector<double>>();
    }
    for (std::size_t j = 0; j < missing.size(); ++j) {
      if (!ordered[j] || ordered[j]->size() != config_.dimension) {
        throw InputError("remote embedding dimension mismatch: expected " + std::to_string(config_.dimension));
      }
      EmbeddingVector vec = normalized(std::move(*ordered[j]));
      cache_.store(config_.model, texts[missing[j]], vec);
      // Re-read so fresh and cached vectors share float32 precision.
      found[missing[j]] = cache_.lookup(config_.model, texts[missing[j]]).value_or(vec);
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (auto& v : found) out.push_back(std::move(*v));
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  config.validate();
  if (config.kind == EmbedderKind::hashed) return std::make_unique<HashedEmbedder>(config.dimension);
  std::optional<std::string> token;
  if (const char* env = std::getenv(config.token_env.c_str())) token = env;
  auto client = std::make_shared<model::HttpClient>(config.base_url, token, model::RetryPolicy{});
  return std::make_unique<RemoteEmbedder>(config, std::move(client));
}

// --- selection -----------------------------------------------------------------

std::string user_text(const corpus::UserProfile& profile, const corpus::Catalog& catalog, corpus::DatasetKind kind) {
  std::string out;
  if (!profile.metadata.empty()) out = corpus::metadata_to_text(profile.metadata, kind);
  std::vector<std::string> items;
  for (std::size_t i = 0; i < profile.ranked_items.size() && items.size() < 10; ++i) {
    const auto* item = catalog.find(profile.ranked_items[i]);
    if (!item) continue;
    std::string entry = item->title;
    if (!item->tags.empty()) entry += " (" + text::join(item->tags, ", ") + ")";
    items.push_back(std::move(entry));
  }
  if (!items.empty()) {
    if (!out.empty()) out.push_back(' ');
    out += "Top items: " + text::join(items, "; ") + ".";
  }
  return out;
}

ExemplarPool::ExemplarPool(std::vector<PoolEntry> entries) : entries_(std::move(entries)) {}

ExemplarPool ExemplarPool::build(const std::map<std::string, corpus::UserProfile>& training_profiles,
                                 const corpus::Catalog& catalog, corpus::DatasetKind kind, Embedder& embedder,
                                 std::size_t min_interactions) {
  std::vector<PoolEntry> entries;
  std::vector<std::string> texts;
  for (const auto& [user_id, profile] : training_profiles) {
    if (profile.ranked_items.size() < min_interactions) continue;
    PoolEntry entry{user_id, {}, {}};
    for (const auto& item_id : profile.ranked_items) {
      if (entry.top_titles.size() == kTitlesPerExemplar) break;
      if (const auto* item = catalog.find(item_id)) entry.top_titles.push_back(item->title);
    }
    if (entry.top_titles.empty()) continue;
    texts.push_back(user_text(profile, catalog, kind));
    entries.push_back(std::move(entry));
  }
  if (!texts.empty()) {
    auto vectors = embedder.embed(texts);
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].vector = std::move(vectors[i]);
  }
  return ExemplarPool(std::move(entries));
}

SupportSet ExemplarPool::select(const EmbeddingVector& target, std::size_t k) const {
  if (k == 0) throw InputError("select_exemplars: k must be >= 1");
  const std::vector<double> scores = kernels::score_pool(target, entries_);
  std::vector<std::size_t> order(entries_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return entries_[a].user_id < entries_[b].user_id;
                    });
  SupportSet out;
  out.short_support = entries_.size() < k;
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = entries_[order[i]];
    out.exemplars.push_back({e.user_id, exemplar_label(i), e.top_titles, scores[order[i]]});
  }
  return out;
}

SupportSet select_exemplars(const corpus::UserProfile& target, const ExemplarPool& pool,
                            const corpus::Catalog& catalog, corpus::DatasetKind kind, Embedder& embedder,
                            std::size_t k) {
  return pool.select(embedder.embed_one(user_text(target, catalog, kind)), k);
}

}  // namespace coldrec::embed
