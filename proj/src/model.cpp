#include "coldrec/model.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "coldrec/checksum.hpp"
#include "coldrec/embed.hpp"
#include "coldrec/error.hpp"
#include "coldrec/text.hpp"

namespace coldrec::model {

namespace fs = std::filesystem;

void ModelRequest::validate() const {
  if (prompt_text.empty()) throw InputError("model request: empty prompt");
  if (temperature < 0) throw InputError("model request: negative temperature");
  if (max_output_tokens < 1) throw InputError("model request: max_output_tokens must be >= 1");
}

ModelResponse Adapter::generate(const ModelRequest& request) {
  request.validate();
  ++calls_;
  return do_generate(request);
}

// --- mock --------------------------------------------------------------------

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const std::string& pick(std::mt19937_64& rng, const std::vector<std::string>& pool) {
  return pool[rng() % pool.size()];
}

}  // namespace

std::vector<std::string> split_enumerated_run(std::string_view run) {
  run = text::trim(run);
  std::size_t d = 0;
  while (d < run.size() && run[d] >= '0' && run[d] <= '9') ++d;
  if (d == 0 || d > 6 || d >= run.size() || run[d] != ')') return {};
  int next = std::stoi(std::string(run.substr(0, d))) + 1;
  std::vector<std::string> items;
  std::size_t pos = d + 1;
  while (true) {
    const std::string marker = ", " + std::to_string(next) + ")";
    const std::size_t found = run.find(marker, pos);
    if (found == std::string_view::npos) {
      items.emplace_back(text::trim(run.substr(pos)));
      break;
    }
    items.emplace_back(text::trim(run.substr(pos, found - pos)));
    pos = found + marker.size();
    ++next;
  }
  return items;
}

std::vector<std::vector<std::string>> extract_exemplar_rankings(std::string_view prompt_text) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : text::split(prompt_text, "\n")) {
    const std::size_t p = line.find(": 1) ");
    if (p == std::string::npos) continue;
    auto items = split_enumerated_run(std::string_view(line).substr(p + 2));
    if (!items.empty() && !items.back().empty() && items.back().back() == '.') items.back().pop_back();
    std::erase_if(items, [](const std::string& s) { return text::trim(s).empty(); });
    if (!items.empty()) out.push_back(std::move(items));
  }
  return out;
}

std::string mock_generate(std::string_view prompt_text, int top_n, const MockNoise& noise) {
  auto rankings = extract_exemplar_rankings(prompt_text);
  if (rankings.empty()) return std::string(kNoRecommendation);

  std::mt19937_64 rng(noise.seed ^ embed::fnv1a64(prompt_text));
  if (noise.active()) {
    for (auto& ranking : rankings) {
      for (auto& title : ranking) {
        if (uniform01(rng) < noise.item_noise) title = pick(rng, noise.pool);
      }
    }
  }

  struct Score {
    std::size_t frequency = 0;
    std::size_t best_rank = SIZE_MAX;
    std::size_t first_seen = SIZE_MAX;
  };
  std::map<std::string, Score> scores;
  std::size_t occurrence = 0;
  for (const auto& ranking : rankings) {
    for (std::size_t r = 0; r < ranking.size(); ++r, ++occurrence) {
      Score& s = scores[ranking[r]];
      ++s.frequency;
      s.best_rank = std::min(s.best_rank, r + 1);
      s.first_seen = std::min(s.first_seen, occurrence);
    }
  }
  std::vector<std::pair<std::string, Score>> ordered(scores.begin(), scores.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.frequency != b.second.frequency) return a.second.frequency > b.second.frequency;
    if (a.second.best_rank != b.second.best_rank) return a.second.best_rank < b.second.best_rank;
    return a.second.first_seen < b.second.first_seen;
  });

  std::string out;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(top_n, 0)), ordered.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::string title = ordered[i].first;
    if (noise.active() && uniform01(rng) < noise.output_noise) title = pick(rng, noise.pool);
    out += std::to_string(i + 1) + ") " + title + "\n";
  }
  return out;
}

ModelResponse MockAdapter::do_generate(const ModelRequest& request) {
  ModelResponse out;
  out.raw_text = mock_generate(request.prompt_text, request.top_n, noise_);
  return out;
}

// --- remote --------------------------------------------------------------------

std::string chat_request_body(const ModelRequest& request) {
  nlohmann::json body = {{"model", request.model_id},
                         {"messages", {{{"role", "user"}, {"content", request.prompt_text}}}},
                         {"temperature", request.temperature},
                         {"max_tokens", request.max_output_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

ModelResponse RemoteAdapter::do_generate(const ModelRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  HttpResult result = client_->post_json("/chat/completions", chat_request_body(request));
  ModelResponse out;
  out.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  out.attempts = result.attempts;
  auto doc = nlohmann::json::parse(result.body, nullptr, false);
  if (doc.is_discarded()) throw ModelError("chat response is not JSON", result.status, result.attempts, "protocol");
  try {
    const auto& message = doc.at("choices").at(0).at("message");
    out.raw_text = message.at("content").is_string() ? message.at("content").get<std::string>() : std::string();
    if (doc.contains("usage") && doc["usage"].contains("prompt_tokens")) {
      out.adapter_token_count = doc["usage"]["prompt_tokens"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("chat response malformed: ") + e.what(), result.status, result.attempts, "protocol");
  }
  return out;
}

// --- parsing -----------------------------------------------------------------

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::exact: return "exact";
    case MatchKind::normalized: return "normalized";
    case MatchKind::unmatched: return "unmatched";
  }
  return "unmatched";
}

std::string normalize_title(std::string_view title) {
  std::string kept;
  kept.reserve(title.size());
  for (unsigned char c : title) {
    if (text::is_word_byte(c)) {
      kept.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (text::is_space(c)) {
      kept.push_back(' ');
    }
  }
  return text::collapse_whitespace(kept);
}

std::string strip_trailing_year(std::string_view title) {
  std::string_view t = text::trim(title);
  if (t.size() >= 6 && t.back() == ')') {
    const std::size_t open = t.rfind('(');
    if (open != std::string_view::npos && t.size() - open == 6) {
      bool digits = true;
      for (std::size_t i = open + 1; i < open + 5; ++i) digits = digits && t[i] >= '0' && t[i] <= '9';
      if (digits) return std::string(text::trim(t.substr(0, open)));
    }
  }
  return std::string(t);
}

TitleIndex::TitleIndex(const corpus::Catalog& catalog) : catalog_(catalog) {
  for (const auto& item : catalog.items()) {
    exact_.emplace(item.title, item.item_id);
    normalized_.emplace(normalize_title(item.title), item.item_id);
  }
  for (const auto& item : catalog.items()) {
    std::string alias = normalize_title(strip_trailing_year(item.title));
    if (!normalized_.count(alias)) alias_.emplace(std::move(alias), item.item_id);
  }
}

std::optional<std::pair<std::string, MatchKind>> TitleIndex::resolve(std::string_view title) const {
  const std::string t(text::trim(title));
  if (t.empty()) return std::nullopt;
  if (auto it = exact_.find(t); it != exact_.end()) return std::pair{it->second, MatchKind::exact};
  for (const std::string& key : {normalize_title(t), normalize_title(strip_trailing_year(t))}) {
    if (key.empty()) continue;
    if (auto it = normalized_.find(key); it != normalized_.end()) return std::pair{it->second, MatchKind::normalized};
    if (auto it = alias_.find(key); it != alias_.end()) return std::pair{it->second, MatchKind::normalized};
  }
  return std::nullopt;
}

namespace {

std::string clean_title(std::string_view raw) {
  std::string_view t = text::trim(raw);
  bool changed = true;
  while (changed && t.size() >= 2) {
    changed = false;
    for (std::string_view wrap : {"**", "\"", "*", "`"}) {
      if (t.size() >= 2 * wrap.size() && t.substr(0, wrap.size()) == wrap &&
          t.substr(t.size() - wrap.size()) == wrap) {
        t = text::trim(t.substr(wrap.size(), t.size() - 2 * wrap.size()));
        changed = true;
        break;
      }
    }
  }
  return std::string(t);
}

// Entries announced by a line, in order. Empty when the line is not a list
// entry.
std::vector<std::string> line_entries(std::string_view line) {
  std::string_view t = text::trim(line);
  if (t.empty()) return {};
  std::size_t d = 0;
  while (d < t.size() && t[d] >= '0' && t[d] <= '9') ++d;
  if (d > 0 && d <= 6 && d < t.size()) {
    if (t[d] == ')') {
      auto items = split_enumerated_run(t);
      if (items.size() > 1 && !items.back().empty() && items.back().back() == '.') items.back().pop_back();
      return items;
    }
    if (t[d] == '.' && (d + 1 == t.size() || text::is_space(static_cast<unsigned char>(t[d + 1])))) {
      return {std::string(t.substr(d + 1))};
    }
    return {};
  }
  if (t.size() >= 2 && (t[0] == '-' || t[0] == '*') && text::is_space(static_cast<unsigned char>(t[1]))) {
    return {std::string(t.substr(2))};
  }
  // A run that starts mid-line, e.g. "Picks: 1) A, 2) B".
  for (std::size_t p = t.find("1) "); p != std::string_view::npos; p = t.find("1) ", p + 1)) {
    if (p == 0 || t[p - 1] != ' ') continue;
    if (p >= 2 && t[p - 2] >= '0' && t[p - 2] <= '9') continue;
    auto items = split_enumerated_run(t.substr(p));
    if (items.size() >= 2) {
      if (!items.back().empty() && items.back().back() == '.') items.back().pop_back();
      return items;
    }
  }
  return {};
}

}  // namespace

std::pair<RankedList, ParseReport> parse_ranked_list(std::string_view raw_text, const TitleIndex& index) {
  RankedList list;
  ParseReport report;
  std::vector<std::string> seen_items;
  for (const auto& line : text::split(raw_text, "\n")) {
    if (text::trim(line).empty()) continue;
    ++report.lines_seen;
    for (const auto& raw : line_entries(line)) {
      std::string title = clean_title(raw);
      if (title.empty()) continue;
      ++report.entries_parsed;
      auto resolved = index.resolve(title);
      if (!resolved) {
        // Model explanations after a dash ("Title - because ...").
        for (std::string_view sep : {" - ", " \xE2\x80\x94 ", ": "}) {
          if (auto cut = title.find(sep); cut != std::string::npos && cut > 0) {
            resolved = index.resolve(title.substr(0, cut));
            if (resolved) break;
          }
        }
      }
      RankedEntry entry{0, std::nullopt, title, MatchKind::unmatched};
      if (resolved) {
        if (std::find(seen_items.begin(), seen_items.end(), resolved->first) != seen_items.end()) {
          ++report.duplicates_dropped;
          continue;
        }
        seen_items.push_back(resolved->first);
        entry.item_id = resolved->first;
        entry.match_kind = resolved->second;
      } else {
        ++report.unmatched_count;
      }
      entry.rank = static_cast<int>(list.entries.size()) + 1;
      list.entries.push_back(std::move(entry));
    }
  }
  return {std::move(list), report};
}

// --- transcripts -------------------------------------------------------------

TranscriptCache::TranscriptCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path TranscriptCache::path_for(std::string_view model_id, std::string_view prompt_text) const {
  std::string key(model_id);
  key.push_back('\0');
  key.append(prompt_text);
  return dir_ / (sha256_hex(key) + ".txt");
}

std::optional<std::string> TranscriptCache::lookup(std::string_view model_id, std::string_view prompt_text) const {
  if (dir_.empty()) return std::nullopt;
  std::ifstream in(path_for(model_id, prompt_text), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void TranscriptCache::store(std::string_view model_id, std::string_view prompt_text, std::string_view raw_text) {
  if (dir_.empty()) return;
  std::lock_guard lock(write_mutex_);
  fs::create_directories(dir_);
  const fs::path target = path_for(model_id, prompt_text);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << raw_text;
    if (!out) throw Error("transcript cache write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace coldrec::model
