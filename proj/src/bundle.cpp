#include "coldrec/bundle.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "coldrec/checksum.hpp"
#include "coldrec/csv.hpp"
#include "coldrec/error.hpp"

namespace coldrec::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

namespace {

std::string tags_json(const std::vector<std::string>& tags) { return json(tags).dump(); }

std::vector<std::string> tags_from(const std::string& field) {
  if (field.empty()) return {};
  json doc = json::parse(field, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) throw InputError("bundle: malformed tag list: " + field);
  return doc.get<std::vector<std::string>>();
}

std::string write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write file: " + path.string());
  out << contents;
  return sha256_hex(contents);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("missing bundle file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv_body(const std::string& contents, std::size_t columns,
                                                    const std::string& name) {
  std::istringstream in(contents);
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (auto row = csv::read_row(in)) {
    if (header) {
      header = false;
      continue;
    }
    if (row->size() != columns) throw InputError("bundle: " + name + " row has wrong column count");
    rows.push_back(std::move(*row));
  }
  return rows;
}

double real_from(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("bundle: bad number: " + s);
  return v;
}

std::int64_t int_from(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("bundle: bad integer: " + s);
  return v;
}

}  // namespace

json to_json(const IngestReport& report) {
  json issues = json::array();
  for (const auto& issue : report.issues) issues.push_back({{"line", issue.line}, {"message", issue.message}});
  return {{"source", report.source},
          {"rows_read", report.rows_read},
          {"rows_parsed", report.rows_parsed},
          {"rows_skipped", report.rows_skipped},
          {"warnings", report.warnings},
          {"invalid_utf8_replaced", report.invalid_utf8_replaced},
          {"duplicates_merged", report.duplicates_merged},
          {"text_fields_cleaned", report.text_fields_cleaned},
          {"issues", issues}};
}

void write_bundle(const Corpus& corpus, const fs::path& dir, const json& parameters) {
  fs::create_directories(dir);
  json files = json::object();

  std::ostringstream catalog;
  csv::write_row(catalog, {"item_id", "title", "tags"});
  for (const auto& item : corpus.catalog.items()) csv::write_row(catalog, {item.item_id, item.title, tags_json(item.tags)});
  files["catalog.csv"] = write_file(dir / "catalog.csv", catalog.str());

  std::ostringstream inter;
  csv::write_row(inter, {"user_id", "item_id", "strength", "timestamp"});
  for (const auto& rec : corpus.interactions) {
    csv::write_row(inter, {rec.user_id, rec.item_id, format_real(rec.strength),
                           rec.timestamp ? std::to_string(*rec.timestamp) : ""});
  }
  files["interactions.csv"] = write_file(dir / "interactions.csv", inter.str());

  std::ostringstream meta;
  csv::write_row(meta, {"user_id", "age", "gender", "occupation_or_country", "interest_tags"});
  for (const auto& [user_id, md] : corpus.metadata) {
    csv::write_row(meta, {user_id, md.age ? std::to_string(*md.age) : "", md.gender.value_or(""),
                          md.occupation_or_country.value_or(""), tags_json(md.interest_tags)});
  }
  files["metadata.csv"] = write_file(dir / "metadata.csv", meta.str());

  json sources = json::array();
  for (const auto& src : corpus.sources) sources.push_back({{"path", src.path}, {"sha256", src.sha256}, {"bytes", src.bytes}});
  json reports = json::array();
  for (const auto& r : corpus.reports) reports.push_back(to_json(r));

  json manifest = {{"format", kBundleFormat},
                   {"kind", std::string(to_string(corpus.kind))},
                   {"profile_oracle", corpus.profile_oracle},
                   {"counts",
                    {{"items", corpus.catalog.size()},
                     {"interactions", corpus.interactions.size()},
                     {"users_with_metadata", corpus.metadata.size()}}},
                   {"sources", sources},
                   {"files", files},
                   {"parameters", parameters},
                   {"parse_reports", reports}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Corpus read_bundle(const fs::path& dir) {
  json manifest = json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (manifest.is_discarded() || manifest.value("format", "") != kBundleFormat) {
    throw InputError("not a corpus bundle: " + dir.string());
  }
  Corpus corpus;
  corpus.kind = parse_dataset_kind(manifest.at("kind").get<std::string>());
  corpus.profile_oracle = manifest.value("profile_oracle", false);

  auto load = [&](const char* name) {
    std::string contents = read_file(dir / name);
    const auto expected = manifest.at("files").value(name, "");
    if (sha256_hex(contents) != expected) throw InputError(std::string("bundle checksum mismatch: ") + name);
    return contents;
  };

  for (auto& row : read_csv_body(load("catalog.csv"), 3, "catalog.csv")) {
    corpus.catalog.add({row[0], row[1], tags_from(row[2])});
  }
  for (auto& row : read_csv_body(load("interactions.csv"), 4, "interactions.csv")) {
    InteractionRecord rec{row[0], row[1], real_from(row[2]), std::nullopt};
    if (!row[3].empty()) rec.timestamp = int_from(row[3]);
    if (!corpus.catalog.contains(rec.item_id)) throw InputError("bundle: interaction references unknown item " + rec.item_id);
    if (rec.strength < 0) throw InputError("bundle: negative strength for " + rec.user_id);
    corpus.interactions.push_back(std::move(rec));
  }
  for (auto& row : read_csv_body(load("metadata.csv"), 5, "metadata.csv")) {
    UserMetadata md;
    if (!row[1].empty()) md.age = static_cast<int>(int_from(row[1]));
    if (!row[2].empty()) md.gender = row[2];
    if (!row[3].empty()) md.occupation_or_country = row[3];
    md.interest_tags = tags_from(row[4]);
    corpus.metadata.emplace(row[0], std::move(md));
  }
  for (const auto& src : manifest.value("sources", json::array())) {
    corpus.sources.push_back({src.value("path", ""), src.value("sha256", ""), src.value("bytes", std::uintmax_t{0})});
  }
  return corpus;
}

json to_json(const ColdStartSplit& split) {
  json truth = json::object();
  for (const auto& [user_id, rel] : split.ground_truth) {
    truth[user_id] = {{"relevant", rel.relevant_item_ids}, {"ideal_ranking", rel.ideal_ranking}};
  }
  return {{"seed", split.seed},
          {"test_fraction", split.test_fraction},
          {"r_min", split.r_min},
          {"train_user_ids", split.train_user_ids},
          {"test_user_ids", split.test_user_ids},
          {"ground_truth", truth}};
}

ColdStartSplit split_from_json(const json& doc) {
  ColdStartSplit split;
  split.seed = doc.at("seed").get<std::uint64_t>();
  split.test_fraction = doc.at("test_fraction").get<double>();
  split.r_min = doc.at("r_min").get<std::size_t>();
  split.train_user_ids = doc.at("train_user_ids").get<std::set<std::string>>();
  split.test_user_ids = doc.at("test_user_ids").get<std::set<std::string>>();
  for (const auto& [user_id, rel] : doc.at("ground_truth").items()) {
    split.ground_truth[user_id] = {rel.at("relevant").get<std::set<std::string>>(),
                                   rel.at("ideal_ranking").get<std::vector<std::string>>()};
  }
  return split;
}

void write_split(const ColdStartSplit& split, const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  write_file(file, to_json(split).dump(2) + "\n");
}

ColdStartSplit read_split(const fs::path& file) {
  json doc = json::parse(read_file(file), nullptr, false);
  if (doc.is_discarded()) throw InputError("malformed split file: " + file.string());
  return split_from_json(doc);
}

}  // namespace coldrec::corpus
