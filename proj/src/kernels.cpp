#include "coldrec/kernels.hpp"

#include <omp.h>

#include <string>

#include "coldrec/error.hpp"

namespace coldrec::kernels {

namespace {

int g_threads = 0;

int threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

UserScores score_user(const UserEvalInput& in, metrics::CoherencePairing pairing) {
  UserScores s;
  s.precision_at_5 = metrics::precision_at_k(*in.ranked, *in.relevance, 5);
  s.ndcg_at_10 = metrics::ndcg_at_k(*in.ranked, *in.relevance, 10);
  s.semantic_coherence = metrics::coherence_from_vectors(in.prediction_vectors, in.truth_vectors, pairing);
  return s;
}

}  // namespace

void set_thread_count(int n) { g_threads = n; }
int thread_count() { return threads(); }

std::vector<embed::EmbeddingVector> hashed_embed_batch(std::span<const std::string> texts, std::size_t dimension) {
  std::vector<embed::EmbeddingVector> out(texts.size());
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = embed::hashed_embedding(texts[i], dimension);
  return out;
}

std::vector<double> score_pool(const embed::EmbeddingVector& target, std::span<const embed::PoolEntry> pool) {
  // cosine_similarity throws on a mismatch, which must not happen inside the region
  for (const auto& e : pool)
    if (e.vector.dimension() != target.dimension())
      throw InputError("score_pool: dimension mismatch (" + std::to_string(target.dimension()) + " vs " +
                       std::to_string(e.vector.dimension()) + ")");
  std::vector<double> out(pool.size());
  const auto n = static_cast<std::ptrdiff_t>(pool.size());
#pragma omp parallel for schedule(static) num_threads(threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = embed::cosine_similarity(target, pool[i].vector);
  return out;
}

std::vector<UserScores> evaluate_batch(std::span<const UserEvalInput> inputs, metrics::CoherencePairing pairing) {
  std::vector<UserScores> out(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = score_user(inputs[i], pairing);
  return out;
}

namespace reference {

std::vector<embed::EmbeddingVector> hashed_embed_batch(std::span<const std::string> texts, std::size_t dimension) {
  std::vector<embed::EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed::hashed_embedding(t, dimension));
  return out;
}

std::vector<double> score_pool(const embed::EmbeddingVector& target, std::span<const embed::PoolEntry> pool) {
  std::vector<double> out;
  out.reserve(pool.size());
  for (const auto& e : pool) out.push_back(embed::cosine_similarity(target, e.vector));
  return out;
}

std::vector<UserScores> evaluate_batch(std::span<const UserEvalInput> inputs, metrics::CoherencePairing pairing) {
  std::vector<UserScores> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(score_user(in, pairing));
  return out;
}

}  // namespace reference

}  // namespace coldrec::kernels
