#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "coldrec/error.hpp"
#include "coldrec/metrics.hpp"

namespace coldrec::metrics {
namespace {

model::RankedList ranked_of(const std::vector<std::optional<std::string>>& ids) {
  model::RankedList out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    model::RankedEntry e;
    e.rank = static_cast<int>(i + 1);
    e.item_id = ids[i];
    e.raw_title = ids[i].value_or("unknown title");
    e.match_kind = ids[i] ? model::MatchKind::exact : model::MatchKind::unmatched;
    out.entries.push_back(e);
  }
  return out;
}

corpus::RelevanceSet relevance_of(std::vector<std::string> ids) {
  corpus::RelevanceSet r;
  r.relevant_item_ids.insert(ids.begin(), ids.end());
  r.ideal_ranking = std::move(ids);
  return r;
}

// Brute force over a 0/1 relevance vector.
double oracle_precision(const std::vector<int>& rel, std::size_t k) {
  int hits = 0;
  for (std::size_t i = 0; i < k && i < rel.size(); ++i) hits += rel[i];
  return hits / static_cast<double>(k);
}

double oracle_ndcg(const std::vector<int>& rel, std::size_t total_relevant, std::size_t k) {
  if (total_relevant == 0) return 0.0;
  double dcg = 0;
  for (std::size_t i = 0; i < k && i < rel.size(); ++i) {
    if (rel[i]) dcg += std::log(2.0) / std::log(static_cast<double>(i + 2));
  }
  double idcg = 0;
  for (std::size_t i = 0; i < std::min(k, total_relevant); ++i) idcg += std::log(2.0) / std::log(static_cast<double>(i + 2));
  return dcg / idcg;
}

TEST(Metrics, SpotValues) {
  EXPECT_NEAR(ndcg_at_k(ranked_of({"x", "a"}), relevance_of({"a"}), 10), 0.63093, 1e-5);
  EXPECT_NEAR(ndcg_at_k(ranked_of({"a", "x", "b"}), relevance_of({"a", "b"}), 3), 0.91972, 1e-5);
  EXPECT_DOUBLE_EQ(precision_at_k(ranked_of({"a", "x", "b"}), relevance_of({"a", "b"}), 5), 0.4);
}

TEST(Metrics, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t universe = 1 + rng() % 20;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < universe; ++i) ids.push_back("i" + std::to_string(i));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<std::string> relevant;
    for (const auto& id : ids)
      if (rng() % 2) relevant.push_back(id);
    const std::size_t len = rng() % (universe + 1);
    std::vector<std::optional<std::string>> list;
    std::vector<int> rel;
    for (std::size_t i = 0; i < len; ++i) {
      if (rng() % 7 == 0) {
        list.push_back(std::nullopt);  // unmatched entry occupies a rank
        rel.push_back(0);
      } else {
        list.push_back(ids[i]);
        rel.push_back(std::find(relevant.begin(), relevant.end(), ids[i]) != relevant.end());
      }
    }
    const auto ranked = ranked_of(list);
    const auto rs = relevance_of(relevant);
    EXPECT_NEAR(precision_at_k(ranked, rs, 5), oracle_precision(rel, 5), 1e-12);
    EXPECT_NEAR(ndcg_at_k(ranked, rs, 10), oracle_ndcg(rel, relevant.size(), 10), 1e-12);
  }
}

TEST(Metrics, IdealRankingScoresOne) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < 1 + rng() % 15; ++i) ids.push_back("r" + std::to_string(i));
    const auto rs = relevance_of(ids);
    std::vector<std::optional<std::string>> list(ids.begin(), ids.end());
    EXPECT_EQ(ndcg_at_k(ranked_of(list), rs, 10), 1.0);
  }
}

TEST(Metrics, PromotingRelevantNeverHurts) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::optional<std::string>> list;
    std::vector<std::string> relevant;
    for (int i = 0; i < 10; ++i) {
      list.push_back("i" + std::to_string(i));
      if (rng() % 2) relevant.push_back(*list.back());
    }
    const auto rs = relevance_of(relevant);
    for (std::size_t i = 1; i < list.size(); ++i) {
      const bool lower_relevant = rs.relevant_item_ids.count(*list[i]);
      const bool upper_relevant = rs.relevant_item_ids.count(*list[i - 1]);
      if (!lower_relevant || upper_relevant) continue;
      auto swapped = list;
      std::swap(swapped[i], swapped[i - 1]);
      EXPECT_GE(ndcg_at_k(ranked_of(swapped), rs, 10), ndcg_at_k(ranked_of(list), rs, 10));
    }
  }
}

TEST(Metrics, EdgeCases) {
  EXPECT_EQ(ndcg_at_k(ranked_of({"a"}), relevance_of({}), 10), 0.0);
  EXPECT_EQ(ndcg_at_k(ranked_of({}), relevance_of({"a"}), 10), 0.0);
  EXPECT_EQ(precision_at_k(ranked_of({}), relevance_of({"a"}), 5), 0.0);
  EXPECT_THROW(precision_at_k(ranked_of({}), relevance_of({"a"}), 0), InputError);
}

TEST(Coherence, Examples) {
  const auto v = embed::hashed_embedding("Heat (1995)");
  const embed::EmbeddingVector zero{std::vector<double>(v.dimension(), 0.0)};
  const std::vector<embed::EmbeddingVector> truth{v};
  EXPECT_DOUBLE_EQ(coherence_from_vectors(std::vector{v}, truth), 1.0);
  EXPECT_DOUBLE_EQ(coherence_from_vectors(std::vector{v, zero}, truth), 0.5);
  EXPECT_EQ(coherence_from_vectors({}, truth), 0.0);
  EXPECT_DOUBLE_EQ(coherence_from_vectors(std::vector{v}, truth, CoherencePairing::centroid), 1.0);
}

TEST(Coherence, UsesRawTextForUnmatched) {
  corpus::Catalog catalog;
  catalog.add({"a", "Alien (1979)", {}});
  model::RankedList ranked = ranked_of({"a", std::nullopt});
  ranked.entries[1].raw_title = "Some Invented Film";
  EXPECT_EQ(prediction_texts(ranked, catalog), (std::vector<std::string>{"Alien (1979)", "Some Invented Film"}));
  embed::HashedEmbedder embedder(64);
  const std::vector<std::string> truth{"Alien (1979)"};
  const double c = semantic_coherence(ranked, catalog, truth, embedder);
  EXPECT_GE(c, -1.0);
  EXPECT_LE(c, 1.0);
}

TEST(Gains, ReferenceRows) {
  EXPECT_EQ(relative_gain(43.6, 51.8), 18.8);
  EXPECT_EQ(relative_gain(48.3, 58.6), 21.3);
  EXPECT_EQ(relative_gain(42.1, 47.5), 12.8);
  EXPECT_EQ(relative_gain(49.0, 55.0), 12.2);
  EXPECT_EQ(relative_gain(41.9, 47.9), 14.3);
  EXPECT_EQ(relative_gain(47.1, 53.7), 14.0);
  EXPECT_EQ(relative_gain(30.0, 30.0), 0.0);
  EXPECT_THROW(relative_gain(0.0, 1.0), InputError);
  EXPECT_TRUE(GainReport::make("x", 43.6, 48.3, 51.8, 58.6).self_consistent());
}

TEST(Gains, RoundHalfAwayFromZero) {
  EXPECT_EQ(round_half_up(12.25), 12.3);
  EXPECT_EQ(round_half_up(-12.25), -12.3);
  EXPECT_EQ(round_half_up(0.04), 0.0);
  EXPECT_EQ(format_percent(18.8125), "18.8");
  EXPECT_EQ(format_percent(-0.01), "0.0");
  EXPECT_EQ(format_percent(5), "5.0");
}

TEST(Aggregate, OrderIndependentMeanAndStddev) {
  std::map<std::uint64_t, std::vector<EvalResult>> runs;
  runs[1] = {{"b", 0.4, 0.4, 0.4, {}}, {"a", 0.4, 0.4, 0.4, {}}};
  runs[2] = {{"a", 0.6, 0.6, 0.6, {}}};
  const auto s = aggregate(runs);
  EXPECT_EQ(s.runs, 2u);
  EXPECT_EQ(s.users, 3u);
  EXPECT_DOUBLE_EQ(s.precision_at_5.mean, 0.5);
  EXPECT_NEAR(s.precision_at_5.stddev, std::sqrt(0.02), 1e-12);

  std::mt19937_64 rng(1);
  std::vector<EvalResult> many;
  for (int i = 0; i < 50; ++i) many.push_back({"u" + std::to_string(i), (rng() % 1000) / 997.0, 0, 0, {}});
  auto shuffled = many;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_EQ(aggregate({{1, many}}).precision_at_5.mean, aggregate({{1, shuffled}}).precision_at_5.mean);

  const auto single = aggregate({{7, {{"a", 0.3, 0.2, 0.1, {}}}}});
  EXPECT_EQ(single.precision_at_5.mean, 0.3);
  EXPECT_EQ(single.precision_at_5.stddev, 0.0);
}

}  // namespace
}  // namespace coldrec::metrics
