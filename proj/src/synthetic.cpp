#include "coldrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "coldrec/error.hpp"

namespace coldrec::corpus {

namespace {

constexpr const char* kThemes[] = {"jazz",     "robotics", "gardening", "astronomy", "cooking", "hiking",
                                   "poetry",   "chess",    "cycling",   "pottery",   "sailing", "photography",
                                   "baking",   "knitting", "surfing",   "opera"};
constexpr const char* kNouns[] = {"Handbook", "Collection", "Kit",     "Guide",  "Anthology", "Starter Set",
                                  "Journal",  "Atlas",      "Toolbox", "Primer", "Almanac",   "Companion"};
constexpr const char* kOccupations[] = {"teacher", "engineer", "nurse", "designer", "student", "writer"};

std::string capitalized(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

}  // namespace

Corpus make_synthetic(const SyntheticSpec& spec) {
  if (spec.clusters == 0 || spec.clusters > std::size(kThemes)) {
    throw InputError("synthetic: clusters must be in [1, " + std::to_string(std::size(kThemes)) + "]");
  }
  if (spec.items_per_cluster < spec.items_per_user) throw InputError("synthetic: items_per_cluster < items_per_user");
  Corpus corpus;
  corpus.kind = DatasetKind::synthetic;
  std::mt19937_64 rng(spec.seed);

  std::vector<std::vector<std::string>> cluster_items(spec.clusters);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    for (std::size_t j = 0; j < spec.items_per_cluster; ++j) {
      std::string id = "i" + pad(c, 2) + pad(j, 3);
      std::string title = capitalized(kThemes[c]) + " " + kNouns[j % std::size(kNouns)] + " Vol " +
                          std::to_string(j / std::size(kNouns) + 1);
      corpus.catalog.add({id, title, {kThemes[c]}});
      cluster_items[c].push_back(id);
    }
  }

  // Zipf-like popularity inside each cluster.
  std::vector<double> weights(spec.items_per_cluster);
  for (std::size_t j = 0; j < weights.size(); ++j) weights[j] = 1.0 / std::pow(static_cast<double>(j + 1), 0.8);

  const std::size_t width = std::to_string(spec.users).size();
  std::int64_t clock = 1'000'000'000;
  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::string user_id = "u" + pad(u, static_cast<int>(width));
    const std::size_t c = u % spec.clusters;
    UserMetadata md;
    md.age = 18 + static_cast<int>(below(rng, 50));
    md.gender = below(rng, 2) ? "F" : "M";
    md.occupation_or_country = kOccupations[below(rng, std::size(kOccupations))];
    md.interest_tags.push_back(kThemes[c]);
    if (below(rng, 3) == 0) {
      const std::size_t other = (c + 1 + below(rng, spec.clusters - 1 ? spec.clusters - 1 : 1)) % spec.clusters;
      if (other != c) md.interest_tags.push_back(kThemes[other]);
    }
    corpus.metadata.emplace(user_id, std::move(md));

    std::set<std::string> chosen;
    const auto off = static_cast<std::size_t>(std::llround(spec.off_cluster_fraction * spec.items_per_user));
    std::discrete_distribution<std::size_t> popular(weights.begin(), weights.end());
    while (chosen.size() < spec.items_per_user - off) {
      const std::string& id = cluster_items[c][popular(rng)];
      if (chosen.insert(id).second) {
        const double rating = below(rng, 10) < 8 ? 4.0 + static_cast<double>(below(rng, 2)) : 3.0;
        corpus.interactions.push_back({user_id, id, rating, clock++});
      }
    }
    while (chosen.size() < spec.items_per_user) {
      const std::size_t oc = below(rng, spec.clusters);
      if (oc == c && spec.clusters > 1) continue;
      const std::string& id = cluster_items[oc][below(rng, spec.items_per_cluster)];
      if (chosen.insert(id).second) {
        corpus.interactions.push_back({user_id, id, 1.0 + static_cast<double>(below(rng, 3)), clock++});
      }
    }
  }
  merge_duplicates(corpus.interactions, corpus.kind);
  IngestReport report;
  report.source = "synthetic";
  report.rows_read = report.rows_parsed = corpus.interactions.size();
  corpus.reports.push_back(report);
  return corpus;
}

Corpus make_analytic(const AnalyticSpec& spec) {
  if (spec.clusters == 0 || spec.clusters > std::size(kThemes)) throw InputError("analytic: bad cluster count");
  Corpus corpus;
  corpus.kind = DatasetKind::synthetic;
  const std::size_t width = std::to_string(spec.clusters * spec.users_per_cluster).size();
  std::int64_t clock = 1'000'000'000;
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    std::vector<std::string> core;
    std::vector<std::string> filler;
    for (std::size_t j = 0; j < 5; ++j) {
      core.push_back("c" + pad(c, 2) + "core" + std::to_string(j));
      corpus.catalog.add({core.back(), capitalized(kThemes[c]) + " Essential " + kNouns[j], {kThemes[c]}});
    }
    for (std::size_t j = 0; j < 5; ++j) {
      filler.push_back("c" + pad(c, 2) + "fill" + std::to_string(j));
      corpus.catalog.add({filler.back(), capitalized(kThemes[c]) + " Extra " + kNouns[j + 5], {kThemes[c]}});
    }
    for (std::size_t u = 0; u < spec.users_per_cluster; ++u) {
      const std::string user_id = "u" + pad(c * spec.users_per_cluster + u, static_cast<int>(width));
      UserMetadata md;
      md.age = 20 + static_cast<int>(7 * c);
      md.occupation_or_country = kOccupations[c % std::size(kOccupations)];
      md.interest_tags = {kThemes[c]};
      corpus.metadata.emplace(user_id, std::move(md));
      for (const auto& id : core) corpus.interactions.push_back({user_id, id, 5.0, clock++});
      for (const auto& id : filler) corpus.interactions.push_back({user_id, id, 2.0, clock++});
    }
  }
  merge_duplicates(corpus.interactions, corpus.kind);
  IngestReport report;
  report.source = "analytic";
  report.rows_read = report.rows_parsed = corpus.interactions.size();
  corpus.reports.push_back(report);
  return corpus;
}

void corrupt_top_item(Corpus& corpus, const std::set<std::string>& users) {
  std::map<std::string, std::string> top;
  {
    std::map<std::string, std::vector<InteractionRecord>> by_user;
    for (const auto& rec : corpus.interactions) {
      if (users.count(rec.user_id)) by_user[rec.user_id].push_back(rec);
    }
    for (const auto& [user_id, recs] : by_user) top[user_id] = rank_items(recs).front();
  }
  for (auto& rec : corpus.interactions) {
    auto it = top.find(rec.user_id);
    if (it == top.end() || rec.item_id != it->second) continue;
    const std::string decoy = "decoy_" + rec.user_id;
    corpus.catalog.add({decoy, "Decoy Item For " + rec.user_id, {"decoy"}});
    rec.item_id = decoy;
  }
  merge_duplicates(corpus.interactions, corpus.kind);
}

}  // namespace coldrec::corpus
