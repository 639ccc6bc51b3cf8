#pragma once

#include <cstddef>
#include <cstdint>

#include "coldrec/corpus.hpp"

namespace coldrec::corpus {

// Clustered ratings corpus: every user belongs to one taste cluster, states
// it in their interest tags, and mostly rates popular items of that cluster
// highly. Metadata therefore predicts taste, as the pipeline assumes.
struct SyntheticSpec {
  std::size_t users = 400;
  std::size_t clusters = 8;
  std::size_t items_per_cluster = 30;
  std::size_t items_per_user = 14;
  double off_cluster_fraction = 0.2;
  std::uint64_t seed = 7;
};

Corpus make_synthetic(const SyntheticSpec& spec);

// Corpus whose answers are known in closed form: users of a cluster share
// metadata and the same five top-rated "core" items (plus low-rated
// filler), so frequency voting over any same-cluster support set returns
// exactly a test user's relevant set.
struct AnalyticSpec {
  std::size_t clusters = 6;
  std::size_t users_per_cluster = 40;
};

Corpus make_analytic(const AnalyticSpec& spec);

// Replaces the top-ranked item of every user in `users` with a decoy item
// unique to that user, rated like the item it displaces.
void corrupt_top_item(Corpus& corpus, const std::set<std::string>& users);

}  // namespace coldrec::corpus
