#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coldrec/corpus.hpp"
#include "coldrec/http.hpp"

namespace coldrec::model {

struct ModelRequest {
  std::string prompt_text;
  int max_output_tokens = 256;
  double temperature = 0.0;
  std::string model_id;
  std::optional<std::uint64_t> seed;
  int top_n = 5;

  void validate() const;
};

struct ModelResponse {
  std::string raw_text;
  std::int64_t latency_ms = 0;
  std::optional<int> adapter_token_count;
  int attempts = 1;
};

// Uniform front for every text generator. Implementations must allow
// concurrent generate() calls.
class Adapter {
 public:
  virtual ~Adapter() = default;
  ModelResponse generate(const ModelRequest& request);
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual ModelResponse do_generate(const ModelRequest& request) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

// Perturbations applied by the mock before voting. Probabilities are per
// exemplar item and per output slot; replacements come from `pool`.
struct MockNoise {
  double item_noise = 0.0;
  double output_noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> pool;

  bool active() const { return (item_noise > 0 || output_noise > 0) && !pool.empty(); }
};

inline constexpr std::string_view kNoRecommendation = "NO_RECOMMENDATION";

// Exemplar rankings found in a prompt: every line carrying a ": 1) " run.
std::vector<std::vector<std::string>> extract_exemplar_rankings(std::string_view prompt_text);

// Votes over the exemplar rankings: frequency DESC, best rank ASC, first
// occurrence ASC; emits "1) Title" lines, or NO_RECOMMENDATION when the
// prompt has no exemplars.
std::string mock_generate(std::string_view prompt_text, int top_n, const MockNoise& noise = {});

class MockAdapter final : public Adapter {
 public:
  explicit MockAdapter(MockNoise noise = {}) : noise_(std::move(noise)) {}

 protected:
  ModelResponse do_generate(const ModelRequest& request) override;

 private:
  MockNoise noise_;
};

// Chat-completions client: POST {base_url}/chat/completions with a single
// user message.
class RemoteAdapter final : public Adapter {
 public:
  explicit RemoteAdapter(std::shared_ptr<HttpClient> client) : client_(std::move(client)) {}

 protected:
  ModelResponse do_generate(const ModelRequest& request) override;

 private:
  std::shared_ptr<HttpClient> client_;
};

std::string chat_request_body(const ModelRequest& request);

enum class MatchKind { exact, normalized, unmatched };
std::string_view to_string(MatchKind kind);

struct RankedEntry {
  int rank = 0;
  std::optional<std::string> item_id;
  std::string raw_title;
  MatchKind match_kind = MatchKind::unmatched;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
  std::vector<RankedEntry> entries;
  bool empty() const { return entries.empty(); }
};

struct ParseReport {
  std::size_t lines_seen = 0;
  std::size_t entries_parsed = 0;
  std::size_t unmatched_count = 0;
  std::size_t duplicates_dropped = 0;
};

// Lowercase, drop characters other than alphanumerics and spaces, collapse
// whitespace, trim.
std::string normalize_title(std::string_view title);

// "Toy Story (1995)" -> "Toy Story"; other text unchanged.
std::string strip_trailing_year(std::string_view title);

// Title lookup over a catalog: exact title, then normalized key, then the
// year-less alias.
class TitleIndex {
 public:
  explicit TitleIndex(const corpus::Catalog& catalog);
  std::optional<std::pair<std::string, MatchKind>> resolve(std::string_view title) const;
  const corpus::Catalog& catalog() const { return catalog_; }

 private:
  const corpus::Catalog& catalog_;
  std::unordered_map<std::string, std::string> exact_;
  std::unordered_map<std::string, std::string> normalized_;
  std::unordered_map<std::string, std::string> alias_;
};

// Splits "1) A, 2) B, 3) C" on the successive enumerators, so titles that
// contain commas survive.
std::vector<std::string> split_enumerated_run(std::string_view run);

// Total: never throws. Accepts "N)", "N." and "-" line entries and
// comma-separated "N) Title" runs; keeps the first occurrence of each
// resolved item.
std::pair<RankedList, ParseReport> parse_ranked_list(std::string_view raw_text, const TitleIndex& index);

// (model id, prompt checksum) -> raw model text, one file per entry.
class TranscriptCache {
 public:
  explicit TranscriptCache(std::filesystem::path dir);
  std::optional<std::string> lookup(std::string_view model_id, std::string_view prompt_text) const;
  void store(std::string_view model_id, std::string_view prompt_text, std::string_view raw_text);
  std::filesystem::path path_for(std::string_view model_id, std::string_view prompt_text) const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex write_mutex_;
};

}  // namespace coldrec::model
