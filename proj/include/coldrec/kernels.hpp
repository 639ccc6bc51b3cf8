#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coldrec/corpus.hpp"
#include "coldrec/embed.hpp"
#include "coldrec/metrics.hpp"
#include "coldrec/model.hpp"

// Data-parallel inner loops of the pipeline. Each OpenMP kernel has a serial
// twin under `reference` that the tests compare against and the benchmark
// times; both must produce bitwise-identical output.
namespace coldrec::kernels {

std::vector<embed::EmbeddingVector> hashed_embed_batch(std::span<const std::string> texts, std::size_t dimension);

// Cosine similarity of `target` to every pool entry, in pool order.
std::vector<double> score_pool(const embed::EmbeddingVector& target, std::span<const embed::PoolEntry> pool);

struct UserEvalInput {
  const model::RankedList* ranked = nullptr;
  const corpus::RelevanceSet* relevance = nullptr;
  std::span<const embed::EmbeddingVector> prediction_vectors;
  std::span<const embed::EmbeddingVector> truth_vectors;
};

struct UserScores {
  double precision_at_5 = 0;
  double ndcg_at_10 = 0;
  double semantic_coherence = 0;

  friend bool operator==(const UserScores&, const UserScores&) = default;
};

std::vector<UserScores> evaluate_batch(std::span<const UserEvalInput> inputs,
                                       metrics::CoherencePairing pairing = metrics::CoherencePairing::max_match);

namespace reference {

std::vector<embed::EmbeddingVector> hashed_embed_batch(std::span<const std::string> texts, std::size_t dimension);
std::vector<double> score_pool(const embed::EmbeddingVector& target, std::span<const embed::PoolEntry> pool);
std::vector<UserScores> evaluate_batch(std::span<const UserEvalInput> inputs,
                                       metrics::CoherencePairing pairing = metrics::CoherencePairing::max_match);

}  // namespace reference

// Thread count for the parallel kernels; 0 restores the OpenMP default.
void set_thread_count(int threads);
int thread_count();

}  // namespace coldrec::kernels
