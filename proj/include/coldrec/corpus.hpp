#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace coldrec::corpus {

enum class DatasetKind { movielens, lastfm, amazon, synthetic };

std::string_view to_string(DatasetKind kind);
// Throws InputError on an unknown name.
DatasetKind parse_dataset_kind(std::string_view name);

// Star-rating datasets use the rating threshold; play-count datasets the
// per-user median rule.
inline bool is_ratings_kind(DatasetKind kind) {
  return kind != DatasetKind::lastfm;
}

struct ItemRecord {
  std::string item_id;
  std::string title;
  std::vector<std::string> tags;
};

// Items keyed by id; insertion order is preserved for iteration.
class Catalog {
 public:
  // Throws InputError on a duplicate id or an empty title.
  void add(ItemRecord item);
  const ItemRecord* find(std::string_view item_id) const;
  bool contains(std::string_view item_id) const { return find(item_id) != nullptr; }
  std::span<const ItemRecord> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  ItemRecord* find_mutable(std::string_view item_id);

 private:
  std::vector<ItemRecord> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  double strength = 0.0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

struct UserMetadata {
  std::optional<int> age;
  std::optional<std::string> gender;
  std::optional<std::string> occupation_or_country;
  std::vector<std::string> interest_tags;

  bool empty() const {
    return !age && !gender && !occupation_or_country && interest_tags.empty();
  }
  friend bool operator==(const UserMetadata&, const UserMetadata&) = default;
};

using MetadataMap = std::map<std::string, UserMetadata>;

struct UserProfile {
  std::string user_id;
  UserMetadata metadata;
  std::vector<std::string> ranked_items;  // empty for cold-start users
};

struct RelevanceSet {
  std::set<std::string> relevant_item_ids;
  std::vector<std::string> ideal_ranking;

  friend bool operator==(const RelevanceSet&, const RelevanceSet&) = default;
};

struct ColdStartSplit {
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
  std::size_t r_min = 0;
  std::set<std::string> train_user_ids;
  std::set<std::string> test_user_ids;
  std::map<std::string, RelevanceSet> ground_truth;

  friend bool operator==(const ColdStartSplit&, const ColdStartSplit&) = default;
};

struct ParseIssue {
  std::size_t line = 0;
  std::string message;
};

// Per-file ingest bookkeeping. rows_parsed + rows_skipped == rows_read.
struct IngestReport {
  std::string source;
  std::size_t rows_read = 0;
  std::size_t rows_parsed = 0;
  std::size_t rows_skipped = 0;
  std::size_t warnings = 0;
  std::size_t invalid_utf8_replaced = 0;
  std::size_t duplicates_merged = 0;
  std::size_t text_fields_cleaned = 0;
  std::vector<ParseIssue> issues;  // first kMaxIssues only

  static constexpr std::size_t kMaxIssues = 100;
  void skip(std::size_t line, std::string message);
  void warn(std::size_t line, std::string message);
};

struct SourceFile {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct Corpus {
  DatasetKind kind = DatasetKind::movielens;
  Catalog catalog;
  std::vector<InteractionRecord> interactions;  // sorted by (user_id, item_id)
  MetadataMap metadata;
  std::vector<IngestReport> reports;
  std::vector<SourceFile> sources;
  // Interest tags were synthesised from the users' own interactions.
  bool profile_oracle = false;
};

// MovieLens-1M directory with ratings.dat, movies.dat and users.dat.
Corpus parse_movielens(const std::filesystem::path& dir);

// Last.fm 360K play counts. `path` is either the play-count TSV or a
// directory holding it plus optional profile and artist-tag files.
Corpus parse_lastfm(const std::filesystem::path& path);

// Amazon reviews, one JSON object per line.
Corpus parse_amazon(const std::filesystem::path& path);

Corpus parse_dataset(DatasetKind kind, const std::filesystem::path& path);

struct RelevanceRule {
  double rating_threshold = 4.0;
  std::size_t r_min = 5;
};

RelevanceSet derive_relevance(std::span<const InteractionRecord> user_interactions,
                              DatasetKind kind, const RelevanceRule& rule = {});

// Samples test users uniformly from the eligible ones (enough relevant
// items, non-empty metadata). Pure function of its arguments.
ColdStartSplit make_coldstart_split(std::span<const InteractionRecord> interactions,
                                    const MetadataMap& metadata, DatasetKind kind,
                                    double test_fraction, std::uint64_t seed,
                                    const RelevanceRule& rule = {});

// Interactions of training users only.
std::vector<InteractionRecord> training_view(std::span<const InteractionRecord> interactions,
                                             const ColdStartSplit& split);

// Orders a user's items by descending strength, then ascending item id.
std::vector<std::string> rank_items(std::span<const InteractionRecord> user_interactions);

// Profiles for the training users of `split`, built from the training view.
std::map<std::string, UserProfile> training_profiles(
    std::span<const InteractionRecord> interactions, const MetadataMap& metadata,
    const ColdStartSplit& split);

// Profile of a cold-start user: metadata only.
UserProfile coldstart_profile(const std::string& user_id, const MetadataMap& metadata);

// "User Z: Age 29, interested in a, b, and c." Throws InputError if every
// field is absent.
std::string metadata_to_text(const UserMetadata& metadata, DatasetKind kind,
                             std::string_view label = "Z");

// Fills empty interest_tags from the most frequent tags of each user's items.
// Sets corpus.profile_oracle when any user was filled.
void derive_interest_tags(Corpus& corpus, std::size_t max_tags = 3);

// Movielens-1M occupation code to its published name; "other" when unknown.
std::string_view movielens_occupation(int code);

// Sorts by (user_id, item_id) and merges duplicate pairs: latest timestamp
// wins for rating datasets, strengths are summed for play counts.
std::size_t merge_duplicates(std::vector<InteractionRecord>& interactions, DatasetKind kind);

}  // namespace coldrec::corpus
