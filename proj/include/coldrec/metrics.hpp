#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coldrec/corpus.hpp"
#include "coldrec/embed.hpp"
#include "coldrec/model.hpp"

namespace coldrec::metrics {

// Relevant resolved items among the first k ranks, over k. Unmatched or
// missing entries count as misses.
double precision_at_k(const model::RankedList& ranked, const corpus::RelevanceSet& relevance, std::size_t k);

// Binary-relevance NDCG with log2(i + 1) discounts; 0 when nothing relevant
// is retrieved or the relevance set is empty.
double ndcg_at_k(const model::RankedList& ranked, const corpus::RelevanceSet& relevance, std::size_t k);

enum class CoherencePairing {
  max_match,  // mean over predictions of the best cosine to any truth item
  centroid,   // mean over predictions of the cosine to the truth centroid
};

inline constexpr std::size_t kCoherenceDepth = 5;

// Text used for a ranked entry's embedding: catalog title when resolved,
// raw model text otherwise.
std::vector<std::string> prediction_texts(const model::RankedList& ranked, const corpus::Catalog& catalog,
                                          std::size_t depth = kCoherenceDepth);

double coherence_from_vectors(std::span<const embed::EmbeddingVector> predictions,
                              std::span<const embed::EmbeddingVector> truth,
                              CoherencePairing pairing = CoherencePairing::max_match);

// Scores the top-5 predictions against the ground-truth titles; 0 for an
// empty prediction list.
double semantic_coherence(const model::RankedList& ranked, const corpus::Catalog& catalog,
                          std::span<const std::string> truth_titles, embed::Embedder& embedder,
                          CoherencePairing pairing = CoherencePairing::max_match);

// Rounds half away from zero at `decimals` places, tolerant of binary
// representation error (12.25 -> 12.3 even if stored as 12.2499999...).
double round_half_up(double value, int decimals = 1);

// (proposed - baseline) / baseline * 100, unrounded. Throws InputError when
// baseline <= 0.
double relative_gain_exact(double baseline, double proposed);

// relative_gain_exact rounded to one decimal.
double relative_gain(double baseline, double proposed);

struct GainReport {
  std::string dataset;
  double baseline_p5 = 0;
  double baseline_ndcg = 0;
  double proposed_p5 = 0;
  double proposed_ndcg = 0;
  double gain_p5_pct = 0;
  double gain_ndcg_pct = 0;

  static GainReport make(std::string dataset, double baseline_p5, double baseline_ndcg, double proposed_p5,
                         double proposed_ndcg);
  bool self_consistent() const;
};

// One decimal, half-up: 18.8, 0.0, -3.5.
std::string format_percent(double value);

struct EvalResult {
  std::string user_id;
  double precision_at_5 = 0;
  double ndcg_at_10 = 0;
  double semantic_coherence = 0;
  model::ParseReport parse;
};

struct MetricSummary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation over runs; 0 for one run
};

struct Summary {
  MetricSummary precision_at_5;
  MetricSummary ndcg_at_10;
  MetricSummary semantic_coherence;
  std::size_t runs = 0;
  std::size_t users = 0;  // total results folded
};

// Per-run means over users (ascending user id), then mean and sample stddev
// over runs (ascending seed). Runs without results are skipped.
Summary aggregate(const std::map<std::uint64_t, std::vector<EvalResult>>& results_by_seed);

}  // namespace coldrec::metrics
