#include <gtest/gtest.h>

#include <random>

#include "coldrec/error.hpp"
#include "coldrec/kernels.hpp"

namespace coldrec::kernels {
namespace {

std::vector<std::string> random_texts(std::mt19937_64& rng, std::size_t n) {
  const std::vector<std::string> words{"star", "wars", "heat", "toy", "story", "kindle", "echo", "alien", "1979"};
  std::vector<std::string> out(n);
  for (auto& t : out)
    for (std::size_t w = 0; w < 1 + rng() % 8; ++w) t += words[rng() % words.size()] + " ";
  return out;
}

class Kernels : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { set_thread_count(GetParam()); }
  void TearDown() override { set_thread_count(0); }
};

TEST_P(Kernels, EmbedBatchMatchesReference) {
  std::mt19937_64 rng(1);
  const auto texts = random_texts(rng, 777);
  EXPECT_EQ(hashed_embed_batch(texts, 64), reference::hashed_embed_batch(texts, 64));
}

TEST_P(Kernels, ScorePoolMatchesReference) {
  std::mt19937_64 rng(2);
  const auto texts = random_texts(rng, 500);
  std::vector<embed::PoolEntry> pool;
  for (std::size_t i = 0; i < texts.size(); ++i) pool.push_back({"u" + std::to_string(i), embed::hashed_embedding(texts[i], 32), {}});
  const auto target = embed::hashed_embedding("heat alien", 32);
  EXPECT_EQ(score_pool(target, pool), reference::score_pool(target, pool));
}

TEST_P(Kernels, EvaluateBatchMatchesReference) {
  std::mt19937_64 rng(3);
  const std::size_t n = 300;
  std::vector<model::RankedList> lists(n);
  std::vector<corpus::RelevanceSet> rels(n);
  std::vector<std::vector<embed::EmbeddingVector>> preds(n), truths(n);
  std::vector<UserEvalInput> inputs(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (int i = 0; i < 10; ++i) {
      const std::string id = "i" + std::to_string(rng() % 30);
      lists[u].entries.push_back({i + 1, id, id, model::MatchKind::exact});
      if (rng() % 3 == 0) rels[u].relevant_item_ids.insert("i" + std::to_string(rng() % 30));
    }
    preds[u] = hashed_embed_batch(random_texts(rng, 5), 32);
    truths[u] = hashed_embed_batch(random_texts(rng, 1 + rng() % 6), 32);
    inputs[u] = {&lists[u], &rels[u], preds[u], truths[u]};
  }
  EXPECT_EQ(evaluate_batch(inputs), reference::evaluate_batch(inputs));
  EXPECT_EQ(evaluate_batch(inputs, metrics::CoherencePairing::centroid),
            reference::evaluate_batch(inputs, metrics::CoherencePairing::centroid));
}

TEST_P(Kernels, ScorePoolMismatchThrowsCleanly) {
  std::vector<embed::PoolEntry> pool{{"a", embed::hashed_embedding("x", 16), {}}, {"b", embed::hashed_embedding("x", 8), {}}};
  EXPECT_THROW(score_pool(embed::hashed_embedding("x", 16), pool), InputError);
}

INSTANTIATE_TEST_SUITE_P(Threads, Kernels, ::testing::Values(1, 2, 4));

}  // namespace
}  // namespace coldrec::kernels
