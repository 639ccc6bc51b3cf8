#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldrec/config.hpp"
#include "coldrec/corpus.hpp"
#include "coldrec/embed.hpp"
#include "coldrec/metrics.hpp"
#include "coldrec/model.hpp"
#include "coldrec/prompt.hpp"

namespace coldrec::sweep {

enum class Variant { optimized, zero_shot, no_header };
std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view name);

struct CellKey {
  Variant variant = Variant::optimized;
  int l = 0;
  int k = 0;
  std::uint64_t seed = 0;

  // "<l>_<k>_<seed>", with a "_zeroshot" / "_noheader" suffix for ablations.
  std::string dir_name() const;
  auto operator<=>(const CellKey&) const = default;
};

struct UserRecord {
  std::string user_id;
  bool ok = true;
  std::string error;
  metrics::EvalResult eval;
  int token_count = 0;
  int included_exemplars = 0;
  int dropped_exemplars = 0;
  bool short_support = false;
  bool cache_hit = false;
  int attempts = 0;
  std::optional<int> adapter_token_count;
};

struct PromptStats {
  double mean_token_count = 0;
  double mean_included_exemplars = 0;
  std::size_t short_support_count = 0;
  int max_token_count = 0;
  int max_included_exemplars = 0;
};

struct RunRecord {
  CellKey key;
  std::vector<UserRecord> users;  // ascending user id, one per test user
  PromptStats stats;
  bool failed = false;
  std::string failure;
  std::size_t generate_calls = 0;
  std::size_t cache_hits = 0;
  double wall_clock_ms = 0;  // kept out of record.json so records stay byte-stable
};

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& doc);

// Everything a cell needs that depends only on (corpus, split): the exemplar
// pool, and the targets' texts, embeddings and ground-truth embeddings.
struct SeedContext {
  corpus::ColdStartSplit split;
  embed::ExemplarPool pool;
  std::vector<corpus::UserProfile> test_users;  // ascending user id
  std::vector<std::string> target_texts;
  std::vector<embed::EmbeddingVector> target_vectors;
  std::vector<std::vector<embed::EmbeddingVector>> truth_vectors;
};

SeedContext prepare_seed(const corpus::Corpus& corpus, corpus::ColdStartSplit split, embed::Embedder& embedder,
                         std::size_t min_pool_interactions = embed::ExemplarPool::kMinInteractions);

// Runs one grid cell: select, render, generate (transcript cache first),
// parse, evaluate for every test user.
class CellRunner {
 public:
  CellRunner(const SweepConfig& config, const corpus::Corpus& corpus, prompt::PromptTemplate tmpl,
             model::Adapter& adapter, embed::Embedder& embedder, model::TranscriptCache& cache);

  RunRecord run(const SeedContext& context, const CellKey& key);

 private:
  const SweepConfig& config_;
  const corpus::Corpus& corpus_;
  prompt::PromptTemplate template_;
  model::Adapter& adapter_;
  embed::Embedder& embedder_;
  model::TranscriptCache& cache_;
  model::TitleIndex titles_;
};

struct TableRow {
  Variant variant = Variant::optimized;
  int l = 0;
  int k = 0;
  metrics::Summary summary;
  std::size_t cells_present = 0;
  std::size_t cells_failed = 0;
};

struct ResultsTable {
  std::string dataset;
  std::string model_id;
  bool profile_oracle = false;
  std::vector<RunRecord> records;  // sorted by key
  std::vector<TableRow> rows;      // sorted by (variant, l, k)
};

// Aggregates every (variant, l, k) over seeds, skipping failed cells.
ResultsTable build_table(std::vector<RunRecord> records, std::string dataset, std::string model_id,
                         bool profile_oracle = false);

// dataset,model_id,l,k,seed,user_id,p5,ndcg10,coherence,lines_seen,
// entries_parsed,unmatched,duplicates_dropped,variant,status
void write_results_csv(const ResultsTable& table, std::ostream& out);

struct SweepOutcome {
  ResultsTable table;
  std::size_t failed_cells = 0;
  std::size_t generate_calls = 0;
  std::size_t cache_hits = 0;
};

// Full grid run writing the output directory layout:
//   manifest.json, summary.json, results.csv, report.md, series/*.csv,
//   cells/<cell>/record.json (+ timing.json), splits/, cache/
// `adapter_override` replaces the configured adapter (tests, call counting).
SweepOutcome run_sweep(const SweepConfig& config, model::Adapter* adapter_override = nullptr,
                       std::ostream* log = nullptr);

// Adapter named by the config. The mock draws its noise replacements from
// the catalog titles.
std::unique_ptr<model::Adapter> make_adapter(const SweepConfig& config, const corpus::Catalog& catalog,
                                             std::ostream* trace = nullptr);

// The cells a config expands to, in execution order for one seed.
std::vector<CellKey> expand_cells(const SweepConfig& config, std::uint64_t seed);

// Re-reads cells/*/record.json from a sweep output directory.
std::vector<RunRecord> load_records(const std::filesystem::path& output_dir);

inline constexpr std::string_view kCodeVersion = "coldrec 0.1.0";

}  // namespace coldrec::sweep
