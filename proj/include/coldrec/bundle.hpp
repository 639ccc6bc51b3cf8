#pragma once

#include <filesystem>

#include <json.hpp>

#include "coldrec/corpus.hpp"

namespace coldrec::corpus {

// Corpus bundle directory layout:
//   catalog.csv        item_id,title,tags            (tags as a JSON array)
//   interactions.csv   user_id,item_id,strength,timestamp
//   metadata.csv       user_id,age,gender,occupation_or_country,interest_tags
//   manifest.json      kind, source checksums, file checksums, parse reports
//   splits/seed_<n>.json  written by the split command
inline constexpr const char* kBundleFormat = "coldrec-bundle/1";

void write_bundle(const Corpus& corpus, const std::filesystem::path& dir,
                  const nlohmann::json& parameters = nlohmann::json::object());

// Verifies file checksums against the manifest; throws InputError on mismatch.
Corpus read_bundle(const std::filesystem::path& dir);

nlohmann::json to_json(const IngestReport& report);
nlohmann::json to_json(const ColdStartSplit& split);
ColdStartSplit split_from_json(const nlohmann::json& doc);

void write_split(const ColdStartSplit& split, const std::filesystem::path& file);
ColdStartSplit read_split(const std::filesystem::path& file);

// Shortest decimal text that round-trips the double.
std::string format_real(double value);

}  // namespace coldrec::corpus
