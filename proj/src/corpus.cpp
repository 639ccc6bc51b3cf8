#include "coldrec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "coldrec/checksum.hpp"
#include "coldrec/error.hpp"
#include "coldrec/text.hpp"

namespace coldrec::corpus {

namespace fs = std::filesystem;

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::movielens: return "movielens";
    case DatasetKind::lastfm: return "lastfm";
    case DatasetKind::amazon: return "amazon";
    case DatasetKind::synthetic: return "synthetic";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "movielens") return DatasetKind::movielens;
  if (name == "lastfm") return DatasetKind::lastfm;
  if (name == "amazon") return DatasetKind::amazon;
  if (name == "synthetic") return DatasetKind::synthetic;
  throw InputError("unknown dataset kind: " + std::string(name));
}

void Catalog::add(ItemRecord item) {
  if (item.title.empty()) throw InputError("item " + item.item_id + " has an empty title");
  auto [it, inserted] = index_.emplace(item.item_id, items_.size());
  if (!inserted) throw InputError("duplicate item id: " + item.item_id);
  items_.push_back(std::move(item));
}

const ItemRecord* Catalog::find(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  return it == index_.end() ? nullptr : &items_[it->second];
}

ItemRecord* Catalog::find_mutable(std::string_view item_id) {
  auto it = index_.find(std::string(item_id));
  return it == index_.end() ? nullptr : &items_[it->second];
}

void IngestReport::skip(std::size_t line, std::string message) {
  ++rows_skipped;
  if (issues.size() < kMaxIssues) issues.push_back({line, std::move(message)});
}

void IngestReport::warn(std::size_t line, std::string message) {
  ++warnings;
  if (issues.size() < kMaxIssues) issues.push_back({line, std::move(message)});
}

namespace {

// Streams a text file line by line with UTF-8 repair and CR stripping.
class LineReader {
 public:
  LineReader(const fs::path& path, IngestReport& report) : in_(path, std::ios::binary), report_(report) {
    if (!in_) throw InputError("cannot open file: " + path.string());
  }

  bool next(std::string& line) {
    std::string raw;
    if (!std::getline(in_, raw)) return false;
    ++line_no_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    line = text::sanitize_utf8(raw, report_.invalid_utf8_replaced);
    return true;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::ifstream in_;
  IngestReport& report_;
  std::size_t line_no_ = 0;
};

SourceFile describe_source(const fs::path& path) {
  return SourceFile{path.filename().string(), sha256_file(path), fs::file_size(path)};
}

fs::path require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw InputError("missing input file: " + path.string());
  return path;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = text::trim(s);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::optional<double> parse_real(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  std::string copy(s);
  char* end = nullptr;
  double v = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void append_unique(std::vector<std::string>& tags, std::string tag) {
  if (tag.empty()) return;
  if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(std::move(tag));
}

}  // namespace

std::string_view movielens_occupation(int code) {
  static constexpr std::string_view kNames[] = {
      "other",
      "academic/educator",
      "artist",
      "clerical/admin",
      "college/grad student",
      "customer service",
      "doctor/health care",
      "executive/managerial",
      "farmer",
      "homemaker",
      "K-12 student",
      "lawyer",
      "programmer",
      "retired",
      "sales/marketing",
      "scientist",
      "self-employed",
      "technician/engineer",
      "tradesman/craftsman",
      "unemployed",
      "writer",
  };
  if (code < 0 || code >= static_cast<int>(std::size(kNames))) return kNames[0];
  return kNames[code];
}

std::size_t merge_duplicates(std::vector<InteractionRecord>& interactions, DatasetKind kind) {
  // Stable sort keeps file order among equal keys, so "latest" falls back
  // to the later row when timestamps tie or are absent.
  std::stable_sort(interactions.begin(), interactions.end(), [](const auto& a, const auto& b) {
    return std::tie(a.user_id, a.item_id) < std::tie(b.user_id, b.item_id);
  });
  std::vector<InteractionRecord> merged;
  merged.reserve(interactions.size());
  std::size_t dropped = 0;
  for (auto& rec : interactions) {
    if (!merged.empty() && merged.back().user_id == rec.user_id &&
        merged.back().item_id == rec.item_id) {
      ++dropped;
      auto& kept = merged.back();
      if (is_ratings_kind(kind)) {
        if (rec.timestamp.value_or(INT64_MIN) >= kept.timestamp.value_or(INT64_MIN)) kept = rec;
      } else {
        kept.strength += rec.strength;
        if (rec.timestamp && (!kept.timestamp || *rec.timestamp > *kept.timestamp)) {
          kept.timestamp = rec.timestamp;
        }
      }
      continue;
    }
    merged.push_back(std::move(rec));
  }
  interactions = std::move(merged);
  return dropped;
}

Corpus parse_movielens(const fs::path& dir) {
  const fs::path movies_path = require_file(dir / "movies.dat");
  const fs::path ratings_path = require_file(dir / "ratings.dat");
  const fs::path users_path = require_file(dir / "users.dat");

  Corpus corpus;
  corpus.kind = DatasetKind::movielens;
  std::string line;

  {
    IngestReport report;
    report.source = "movies.dat";
    LineReader reader(movies_path, report);
    while (reader.next(line)) {
      if (text::trim(line).empty()) continue;
      ++report.rows_read;
      auto fields = text::split(line, "::");
      if (fields.size() != 3) {
        report.skip(reader.line_no(), "expected 3 '::' fields");
        continue;
      }
      ItemRecord item{std::string(text::trim(fields[0])), std::string(text::trim(fields[1])), {}};
      if (item.item_id.empty() || item.title.empty()) {
        report.skip(reader.line_no(), "empty movie id or title");
        continue;
      }
      for (auto& g : text::split(fields[2], "|")) {
        auto genre = std::string(text::trim(g));
        if (genre == "(no genres listed)") continue;
        append_unique(item.tags, std::move(genre));
      }
      if (item.tags.empty()) report.warn(reader.line_no(), "movie without genres");
      if (corpus.catalog.contains(item.item_id)) {
        report.skip(reader.line_no(), "duplicate movie id " + item.item_id);
        continue;
      }
      corpus.catalog.add(std::move(item));
      ++report.rows_parsed;
    }
    corpus.reports.push_back(std::move(report));
  }

  {
    IngestReport report;
    report.source = "users.dat";
    LineReader reader(users_path, report);
    while (reader.next(line)) {
      if (text::trim(line).empty()) continue;
      ++report.rows_read;
      auto fields = text::split(line, "::");
      if (fields.size() < 4) {
        report.skip(reader.line_no(), "expected at least 4 '::' fields");
        continue;
      }
      auto age = parse_number<int>(fields[2]);
      auto occupation = parse_number<int>(fields[3]);
      std::string user_id(text::trim(fields[0]));
      if (user_id.empty() || !age || !occupation) {
        report.skip(reader.line_no(), "non-numeric age or occupation");
        continue;
      }
      UserMetadata md;
      md.age = *age;
      auto gender = std::string(text::trim(fields[1]));
      if (!gender.empty()) md.gender = gender;
      md.occupation_or_country = std::string(movielens_occupation(*occupation));
      corpus.metadata[user_id] = std::move(md);
      ++report.rows_parsed;
    }
    corpus.reports.push_back(std::move(report));
  }

  {
    IngestReport report;
    report.source = "ratings.dat";
    LineReader reader(ratings_path, report);
    while (reader.next(line)) {
      if (text::trim(line).empty()) continue;
      ++report.rows_read;
      auto fields = text::split(line, "::");
      if (fields.size() != 4) {
        report.skip(reader.line_no(), "expected 4 '::' fields");
        continue;
      }
      auto rating = parse_real(fields[2]);
      auto ts = parse_number<std::int64_t>(fields[3]);
      InteractionRecord rec{std::string(text::trim(fields[0])), std::string(text::trim(fields[1])), 0.0, ts};
      if (!rating || *rating < 0 || !ts || rec.user_id.empty()) {
        report.skip(reader.line_no(), "malformed rating or timestamp");
        continue;
      }
      if (!corpus.catalog.contains(rec.item_id)) {
        report.skip(reader.line_no(), "unknown movie id " + rec.item_id);
        continue;
      }
      rec.strength = *rating;
      corpus.interactions.push_back(std::move(rec));
      ++report.rows_parsed;
    }
    report.duplicates_merged = merge_duplicates(corpus.interactions, corpus.kind);
    corpus.reports.push_back(std::move(report));
  }

  corpus.sources = {describe_source(movies_path), describe_source(users_path),
                    describe_source(ratings_path)};
  return corpus;
}

namespace {

std::optional<fs::path> first_existing(const fs::path& dir, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (fs::is_regular_file(dir / name)) return dir / name;
  }
  return std::nullopt;
}

}  // namespace

Corpus parse_lastfm(const fs::path& path) {
  fs::path plays_path;
  std::optional<fs::path> profile_path;
  std::optional<fs::path> tags_path;
  if (fs::is_directory(path)) {
    auto found = first_existing(path, {"usersha1-artmbid-artname-plays.tsv", "plays.tsv"});
    if (!found) throw InputError("missing input file: " + (path / "usersha1-artmbid-artname-plays.tsv").string());
    plays_path = *found;
    profile_path = first_existing(path, {"usersha1-profile.tsv", "profile.tsv"});
    tags_path = first_existing(path, {"artist-tags.tsv", "tags.tsv"});
  } else {
    plays_path = require_file(path);
    profile_path = first_existing(path.parent_path(), {"usersha1-profile.tsv", "profile.tsv"});
    tags_path = first_existing(path.parent_path(), {"artist-tags.tsv", "tags.tsv"});
  }

  Corpus corpus;
  corpus.kind = DatasetKind::lastfm;
  std::string line;

  {
    IngestReport report;
    report.source = plays_path.filename().string();
    LineReader reader(plays_path, report);
    while (reader.next(line)) {
      if (text::trim(line).empty()) continue;
      ++report.rows_read;
      auto fields = text::split(line, "\t");
      if (fields.size() != 4) {
        report.skip(reader.line_no(), "expected 4 tab-separated fields");
        continue;
      }
      auto plays = parse_real(fields[3]);
      if (!plays || *plays < 0) {
        report.skip(reader.line_no(), "non-numeric play count");
        continue;
      }
      std::string user_id(text::trim(fields[0]));
      std::string mbid(text::trim(fields[1]));
      std::string name = text::collapse_whitespace(fields[2]);
      if (user_id.empty() || (mbid.empty() && name.empty())) {
        report.skip(reader.line_no(), "missing user or artist");
        continue;
      }
      std::string item_id = mbid.empty() ? "artist:" + text::to_lower_ascii(name) : mbid;
      if (!corpus.catalog.contains(item_id)) {
        corpus.catalog.add({item_id, name.empty() ? item_id : name, {}});
      }
      corpus.interactions.push_back({std::move(user_id), std::move(item_id), *plays, std::nullopt});
      ++report.rows_parsed;
    }
    report.duplicates_merged = merge_duplicates(corpus.interactions, corpus.kind);
    corpus.reports.push_back(std::move(report));
    corpus.sources.push_back(describe_source(plays_path));
  }

  if (profile_path) {
    IngestReport report;
    report.source = profile_path->filename().string();
    LineReader reader(*profile_path, report);
    while (reader.next(line)) {
      if (text::trim(line).empty()) continue;
      ++report.rows_read;
      auto fields = text::split(line, "\t");
      if (fields.size() < 4 || text::trim(fields[0]).empty()) {
        report.skip(reader.line_no(), "expected user, gender, age, country");
        continue;
      }
      UserMetadata md;
      auto gender = std::string(text::trim(fields[1]));
      if (!gender.empty()) md.gender = gender;
      if (auto age = parse_number<int>(fields[2]); age && *age > 0 && *age < 120) md.age = *age;
      auto country = std::string(text::trim(fields[3]));
      if (!country.empty()) md.occupation_or_country = country;
      corpus.metadata[std::string(text::trim(fields[0]))] = std::move(md);
      ++report.rows_parsed;
    }
    corpus.reports.push_back(std::move(report));
    corpus.sources.push_back(describe_source(*profile_path));
  }

  if (tags_path) {
    // artist key (mbid or name) <TAB> tag
    std::unordered_map<std::string, std::string> by_name;
    for (const auto& item : corpus.catalog.items()) by_name.emplace(text::to_lower_ascii(item.title), item.item_id);
    IngestReport report;
    report.source = tags_path->filename().string();
    LineReader reader(*tags_path, report);
    while (reader.next(line)) {
      if (text::trim(line).empty()) continue;
      ++report.rows_read;
      auto fields = text::split(line, "\t");
      if (fields.size() != 2 || text::trim(fields[1]).empty()) {
        report.skip(reader.line_no(), "expected artist and tag");
        continue;
      }
      std::string key(text::trim(fields[0]));
      ItemRecord* item = corpus.catalog.find_mutable(key);
      if (!item) {
        auto it = by_name.find(text::to_lower_ascii(key));
        if (it != by_name.end()) item = corpus.catalog.find_mutable(it->second);
      }
      if (!item) {
        report.warn(reader.line_no(), "tag for unknown artist " + key);
      } else {
        append_unique(item->tags, text::to_lower_ascii(text::trim(fields[1])));
      }
      ++report.rows_parsed;
    }
    corpus.reports.push_back(std::move(report));
    corpus.sources.push_back(describe_source(*tags_path));
  }

  derive_interest_tags(corpus);
  return corpus;
}

namespace {

using nlohmann::json;

const json* first_field(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = obj.find(key);
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

std::optional<std::string> string_field(const json& obj, std::initializer_list<const char*> keys) {
  const json* v = first_field(obj, keys);
  if (!v) return std::nullopt;
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<std::int64_t>());
  return std::nullopt;
}

void collect_categories(const json& v, std::vector<std::string>& out) {
  if (v.is_string()) {
    append_unique(out, text::strip_html(v.get<std::string>()));
  } else if (v.is_array()) {
    for (const auto& e : v) collect_categories(e, out);
  }
}

}  // namespace

Corpus parse_amazon(const fs::path& path) {
  require_file(path);
  Corpus corpus;
  corpus.kind = DatasetKind::amazon;
  IngestReport report;
  report.source = path.filename().string();
  LineReader reader(path, report);
  std::string line;
  while (reader.next(line)) {
    ++report.rows_read;
    if (text::trim(line).empty()) {
      report.skip(reader.line_no(), "blank line");
      continue;
    }
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      report.skip(reader.line_no(), "not a JSON object");
      continue;
    }
    auto user = string_field(obj, {"reviewerID", "user_id", "reviewer_id"});
    auto product = string_field(obj, {"asin", "parent_asin", "product_id"});
    const json* rating = first_field(obj, {"overall", "rating", "stars"});
    if (!user || !product || user->empty() || product->empty() || !rating || !rating->is_number() ||
        rating->get<double>() < 0) {
      report.skip(reader.line_no(), "missing reviewer, product or numeric rating");
      continue;
    }
    std::optional<std::int64_t> ts;
    if (const json* t = first_field(obj, {"unixReviewTime", "timestamp"}); t && t->is_number_integer()) {
      ts = t->get<std::int64_t>();
    }
    if (auto body = string_field(obj, {"reviewText", "text"})) {
      // Cleaned text is not retained; only titles and categories feed embeddings.
      (void)text::strip_html(*body);
      ++report.text_fields_cleaned;
    }
    ItemRecord* item = corpus.catalog.find_mutable(*product);
    if (!item) {
      std::string title = text::strip_html(string_field(obj, {"title", "product_title"}).value_or(""));
      if (title.empty()) title = *product;
      corpus.catalog.add({*product, title, {}});
      item = corpus.catalog.find_mutable(*product);
    }
    if (const json* cats = first_field(obj, {"categories", "category", "main_category", "main_cat"})) {
      collect_categories(*cats, item->tags);
    }
    corpus.interactions.push_back({*user, *product, rating->get<double>(), ts});
    ++report.rows_parsed;
  }
  report.duplicates_merged = merge_duplicates(corpus.interactions, corpus.kind);
  corpus.reports.push_back(std::move(report));
  corpus.sources.push_back(describe_source(path));
  derive_interest_tags(corpus);
  return corpus;
}

Corpus parse_dataset(DatasetKind kind, const fs::path& path) {
  switch (kind) {
    case DatasetKind::movielens: return parse_movielens(path);
    case DatasetKind::lastfm: return parse_lastfm(path);
    case DatasetKind::amazon: return parse_amazon(path);
    case DatasetKind::synthetic: break;
  }
  throw InputError("dataset kind '" + std::string(to_string(kind)) + "' has no file parser");
}

void derive_interest_tags(Corpus& corpus, std::size_t max_tags) {
  std::size_t begin = 0;
  const auto& all = corpus.interactions;
  while (begin < all.size()) {
    std::size_t end = begin;
    while (end < all.size() && all[end].user_id == all[begin].user_id) ++end;
    UserMetadata& md = corpus.metadata[all[begin].user_id];
    if (md.interest_tags.empty()) {
      std::map<std::string, std::size_t> counts;
      for (std::size_t i = begin; i < end; ++i) {
        if (const ItemRecord* item = corpus.catalog.find(all[i].item_id)) {
          for (const auto& tag : item->tags) ++counts[tag];
        }
      }
      std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      for (std::size_t i = 0; i < ranked.size() && i < max_tags; ++i) {
        md.interest_tags.push_back(ranked[i].first);
      }
      if (!md.interest_tags.empty()) corpus.profile_oracle = true;
    }
    begin = end;
  }
}

RelevanceSet derive_relevance(std::span<const InteractionRecord> user_interactions, DatasetKind kind,
                              const RelevanceRule& rule) {
  double threshold = rule.rating_threshold;
  if (!is_ratings_kind(kind) && !user_interactions.empty()) {
    std::vector<double> plays;
    plays.reserve(user_interactions.size());
    for (const auto& rec : user_interactions) plays.push_back(rec.strength);
    std::sort(plays.begin(), plays.end());
    const std::size_t n = plays.size();
    threshold = n % 2 ? plays[n / 2] : (plays[n / 2 - 1] + plays[n / 2]) / 2.0;
  }
  std::vector<const InteractionRecord*> relevant;
  for (const auto& rec : user_interactions) {
    if (rec.strength >= threshold) relevant.push_back(&rec);
  }
  std::sort(relevant.begin(), relevant.end(), [](const auto* a, const auto* b) {
    if (a->strength != b->strength) return a->strength > b->strength;
    return a->item_id < b->item_id;
  });
  RelevanceSet out;
  for (const auto* rec : relevant) {
    if (out.relevant_item_ids.insert(rec->item_id).second) out.ideal_ranking.push_back(rec->item_id);
  }
  return out;
}

namespace {

// Groups records sorted (or not) by user id into contiguous per-user spans.
std::map<std::string, std::vector<InteractionRecord>> group_by_user(std::span<const InteractionRecord> interactions) {
  std::map<std::string, std::vector<InteractionRecord>> out;
  for (const auto& rec : interactions) out[rec.user_id].push_back(rec);
  return out;
}

// Unbiased draw from [0, n) with rejection; mt19937_64 output is fully
// specified, so the sample is the same on every platform.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

}  // namespace

ColdStartSplit make_coldstart_split(std::span<const InteractionRecord> interactions,
                                    const MetadataMap& metadata, DatasetKind kind, double test_fraction,
                                    std::uint64_t seed, const RelevanceRule& rule) {
  if (!(test_fraction > 0.0 && test_fraction <= 0.5)) {
    throw InputError("test_fraction must lie in (0, 0.5], got " + std::to_string(test_fraction));
  }
  const auto by_user = group_by_user(interactions);
  std::vector<std::string> eligible;
  std::map<std::string, RelevanceSet> relevance;
  std::size_t enough_relevant = 0;
  std::size_t with_metadata = 0;
  for (const auto& [user_id, recs] : by_user) {
    RelevanceSet rel = derive_relevance(recs, kind, rule);
    auto md = metadata.find(user_id);
    const bool has_md = md != metadata.end() && !md->second.empty();
    const bool has_rel = rel.relevant_item_ids.size() >= rule.r_min && !rel.relevant_item_ids.empty();
    enough_relevant += has_rel;
    with_metadata += has_md;
    if (has_rel && has_md) {
      eligible.push_back(user_id);
      relevance.emplace(user_id, std::move(rel));
    }
  }
  if (eligible.size() < 10) {
    throw InputError("too few eligible test users: " + std::to_string(eligible.size()) + " eligible of " +
                     std::to_string(by_user.size()) + " users (" + std::to_string(enough_relevant) +
                     " with >= " + std::to_string(rule.r_min) + " relevant items, " +
                     std::to_string(with_metadata) + " with metadata); need at least 10");
  }
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(eligible.size()) + 1e-9)));

  // Partial Fisher-Yates over the id-sorted eligible list.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_test; ++i) {
    std::size_t j = i + uniform_below(rng, eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }

  ColdStartSplit split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  split.r_min = rule.r_min;
  for (std::size_t i = 0; i < n_test; ++i) {
    split.test_user_ids.insert(eligible[i]);
    split.ground_truth.emplace(eligible[i], std::move(relevance.at(eligible[i])));
  }
  for (const auto& [user_id, recs] : by_user) {
    if (!split.test_user_ids.count(user_id)) split.train_user_ids.insert(user_id);
  }
  return split;
}

std::vector<InteractionRecord> training_view(std::span<const InteractionRecord> interactions,
                                             const ColdStartSplit& split) {
  std::vector<InteractionRecord> out;
  out.reserve(interactions.size());
  for (const auto& rec : interactions) {
    if (!split.test_user_ids.count(rec.user_id)) out.push_back(rec);
  }
  return out;
}

std::vector<std::string> rank_items(std::span<const InteractionRecord> user_interactions) {
  std::vector<const InteractionRecord*> recs;
  for (const auto& rec : user_interactions) recs.push_back(&rec);
  std::sort(recs.begin(), recs.end(), [](const auto* a, const auto* b) {
    if (a->strength != b->strength) return a->strength > b->strength;
    return a->item_id < b->item_id;
  });
  std::vector<std::string> out;
  for (const auto* rec : recs) {
    if (std::find(out.begin(), out.end(), rec->item_id) == out.end()) out.push_back(rec->item_id);
  }
  return out;
}

std::map<std::string, UserProfile> training_profiles(std::span<const InteractionRecord> interactions,
                                                     const MetadataMap& metadata, const ColdStartSplit& split) {
  std::map<std::string, UserProfile> out;
  for (auto& [user_id, recs] : group_by_user(training_view(interactions, split))) {
    UserProfile profile{user_id, {}, rank_items(recs)};
    if (auto it = metadata.find(user_id); it != metadata.end()) profile.metadata = it->second;
    out.emplace(user_id, std::move(profile));
  }
  return out;
}

UserProfile coldstart_profile(const std::string& user_id, const MetadataMap& metadata) {
  UserProfile profile{user_id, {}, {}};
  if (auto it = metadata.find(user_id); it != metadata.end()) profile.metadata = it->second;
  return profile;
}

namespace {

std::string render_gender(const std::string& raw) {
  std::string g = text::to_lower_ascii(text::trim(raw));
  if (g == "m" || g == "male") return "male";
  if (g == "f" || g == "female") return "female";
  return g;
}

std::string oxford_list(const std::vector<std::string>& items) {
  if (items.size() == 1) return items[0];
  if (items.size() == 2) return items[0] + " and " + items[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) out += items[i] + ", ";
  return out + "and " + items.back();
}

}  // namespace

std::string metadata_to_text(const UserMetadata& metadata, DatasetKind kind, std::string_view label) {
  if (metadata.empty()) throw InputError("metadata_to_text: every metadata field is absent");
  std::vector<std::string> parts;
  if (metadata.age) parts.push_back("Age " + std::to_string(*metadata.age));
  if (metadata.gender && !render_gender(*metadata.gender).empty()) parts.push_back(render_gender(*metadata.gender));
  if (metadata.occupation_or_country) {
    const bool occupation = kind == DatasetKind::movielens || kind == DatasetKind::synthetic;
    parts.push_back((occupation ? "works as " : "from ") + *metadata.occupation_or_country);
  }
  if (!metadata.interest_tags.empty()) parts.push_back("interested in " + oxford_list(metadata.interest_tags));
  return "User " + std::string(label) + ": " + text::join(parts, ", ") + ".";
}

}  // namespace coldrec::corpus
