#include "coldrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "coldrec/error.hpp"

namespace coldrec::metrics {

double precision_at_k(const model::RankedList& ranked, const corpus::RelevanceSet& relevance, std::size_t k) {
  if (k == 0) throw InputError("precision_at_k: k must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.entries.size() && i < k; ++i) {
    const auto& id = ranked.entries[i].item_id;
    if (id && relevance.relevant_item_ids.count(*id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(const model::RankedList& ranked, const corpus::RelevanceSet& relevance, std::size_t k) {
  if (k == 0) throw InputError("ndcg_at_k: k must be >= 1");
  if (relevance.relevant_item_ids.empty()) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked.entries.size() && i < k; ++i) {
    const auto& id = ranked.entries[i].item_id;
    if (id && relevance.relevant_item_ids.count(*id)) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  if (dcg == 0.0) return 0.0;
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevance.relevant_item_ids.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return std::min(1.0, dcg / idcg);
}

std::vector<std::string> prediction_texts(const model::RankedList& ranked, const corpus::Catalog& catalog,
                                          std::size_t depth) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.entries.size() && i < depth; ++i) {
    const auto& entry = ranked.entries[i];
    const corpus::ItemRecord* item = entry.item_id ? catalog.find(*entry.item_id) : nullptr;
    out.push_back(item ? item->title : entry.raw_title);
  }
  return out;
}

double coherence_from_vectors(std::span<const embed::EmbeddingVector> predictions,
                              std::span<const embed::EmbeddingVector> truth, CoherencePairing pairing) {
  if (predictions.empty() || truth.empty()) return 0.0;
  double total = 0.0;
  if (pairing == CoherencePairing::max_match) {
    for (const auto& p : predictions) {
      double best = -1.0;
      for (const auto& t : truth) best = std::max(best, embed::cosine_similarity(p, t));
      total += best;
    }
  } else {
    embed::EmbeddingVector centroid{std::vector<double>(truth.front().dimension(), 0.0)};
    for (const auto& t : truth) {
      for (std::size_t i = 0; i < centroid.values.size() && i < t.values.size(); ++i) centroid.values[i] += t.values[i];
    }
    for (const auto& p : predictions) total += embed::cosine_similarity(p, centroid);
  }
  return std::clamp(total / static_cast<double>(predictions.size()), -1.0, 1.0);
}

double semantic_coherence(const model::RankedList& ranked, const corpus::Catalog& catalog,
                          std::span<const std::string> truth_titles, embed::Embedder& embedder,
                          CoherencePairing pairing) {
  const auto texts = prediction_texts(ranked, catalog);
  if (texts.empty() || truth_titles.empty()) return 0.0;
  const auto predicted = embedder.embed(texts);
  const auto truth = embedder.embed(truth_titles);
  return coherence_from_vectors(predicted, truth, pairing);
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = std::abs(value) * scale;
  // Relative nudge absorbs representation error of decimal inputs.
  const double rounded = std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, scaled)) / scale;
  return value < 0 ? -rounded : rounded;
}

double relative_gain_exact(double baseline, double proposed) {
  if (!(baseline > 0.0)) throw InputError("relative_gain: baseline must be > 0");
  return (proposed - baseline) / baseline * 100.0;
}

double relative_gain(double baseline, double proposed) {
  return round_half_up(relative_gain_exact(baseline, proposed), 1);
}

GainReport GainReport::make(std::string dataset, double baseline_p5, double baseline_ndcg, double proposed_p5,
                            double proposed_ndcg) {
  return {std::move(dataset),
          baseline_p5,
          baseline_ndcg,
          proposed_p5,
          proposed_ndcg,
          relative_gain(baseline_p5, proposed_p5),
          relative_gain(baseline_ndcg, proposed_ndcg)};
}

bool GainReport::self_consistent() const {
  return gain_p5_pct == relative_gain(baseline_p5, proposed_p5) &&
         gain_ndcg_pct == relative_gain(baseline_ndcg, proposed_ndcg);
}

std::string format_percent(double value) {
  char buf[64];
  double r = round_half_up(value, 1);
  if (r == 0.0) r = 0.0;  // no "-0.0"
  std::snprintf(buf, sizeof buf, "%.1f", r);
  return buf;
}

namespace {

MetricSummary summarize(const std::vector<double>& run_means) {
  MetricSummary out;
  if (run_means.empty()) return out;
  double sum = 0.0;
  for (double v : run_means) sum += v;
  out.mean = sum / static_cast<double>(run_means.size());
  if (run_means.size() > 1) {
    double ss = 0.0;
    for (double v : run_means) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(run_means.size() - 1));
  }
  return out;
}

}  // namespace

Summary aggregate(const std::map<std::uint64_t, std::vector<EvalResult>>& results_by_seed) {
  std::vector<double> p5;
  std::vector<double> ndcg;
  std::vector<double> coh;
  Summary out;
  for (const auto& [seed, results] : results_by_seed) {
    if (results.empty()) continue;
    std::vector<const EvalResult*> ordered;
    for (const auto& r : results) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) { return a->user_id < b->user_id; });
    double sp = 0.0;
    double sn = 0.0;
    double sc = 0.0;
    for (const auto* r : ordered) {
      sp += r->precision_at_5;
      sn += r->ndcg_at_10;
      sc += r->semantic_coherence;
    }
    const auto n = static_cast<double>(ordered.size());
    p5.push_back(sp / n);
    ndcg.push_back(sn / n);
    coh.push_back(sc / n);
    out.users += ordered.size();
  }
  out.runs = p5.size();
  out.precision_at_5 = summarize(p5);
  out.ndcg_at_10 = summarize(ndcg);
  out.semantic_coherence = summarize(coh);
  return out;
}

}  // namespace coldrec::metrics
