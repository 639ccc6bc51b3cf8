#include "coldrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "coldrec/bundle.hpp"
#include "coldrec/error.hpp"
#include "coldrec/text.hpp"

namespace coldrec::sweep {

namespace {

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
  v = text::trim(v);
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw InputError("config: " + std::string(key) + " expects an integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  v = text::trim(v);
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw InputError("config: " + std::string(key) + " expects a number, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  const std::string s = text::to_lower_ascii(text::trim(v));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw InputError("config: " + std::string(key) + " expects a boolean, got '" + std::string(v) + "'");
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view v) {
  std::vector<T> out;
  for (const auto& part : text::split(v, ",")) {
    if (text::trim(part).empty()) continue;
    out.push_back(parse_int<T>(key, part));
  }
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

void SweepConfig::validate() const {
  if (l_grid.empty() || k_grid.empty() || seeds.empty()) throw InputError("config: grids must be non-empty");
  for (int l : l_grid) {
    if (l <= 0) throw InputError("config: l_grid values must be positive");
  }
  for (int k : k_grid) {
    if (k <= 0) throw InputError("config: k_grid values must be positive");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw InputError("config: seeds must be distinct");
  }
  if (!(test_fraction > 0 && test_fraction <= 0.5)) throw InputError("config: test_fraction must be in (0, 0.5]");
  if (concurrency < 1) throw InputError("config: concurrency must be >= 1");
  if (max_attempts < 1) throw InputError("config: max_attempts must be >= 1");
  if (failure_budget < 0 || failure_budget > 1) throw InputError("config: failure_budget must be in [0, 1]");
  if (adapter == AdapterKind::remote && base_url.empty()) throw InputError("config: remote adapter needs base_url");
  if (embed_dimension < 8) throw InputError("config: embed_dimension must be >= 8");
  if (embedder == embed::EmbedderKind::remote && (embed_base_url.empty() || embed_model.empty())) {
    throw InputError("config: remote embedder needs embed_base_url and embed_model");
  }
}

std::vector<std::string_view> config_keys() {
  return {"bundle",          "dataset_label",       "output_dir",      "template",
          "adapter",         "model_id",            "base_url",        "api_key_env",
          "requests_per_second", "max_attempts",    "retry_base_ms",   "timeout_ms",
          "max_output_tokens", "temperature",       "trace",           "mock_item_noise",
          "mock_output_noise", "mock_noise_seed",   "embedder",        "embed_dimension",
          "embed_base_url",  "embed_model",         "embed_api_key_env", "l_grid",
          "k_grid",          "seeds",               "test_fraction",   "rating_threshold",
          "r_min",           "min_pool_interactions", "zero_shot",     "no_header",
          "coherence",       "concurrency",         "failure_budget"};
}

void apply_setting(SweepConfig& c, std::string_view key, std::string_view raw) {
  const std::string value(text::trim(raw));
  if (key == "bundle") c.bundle = value;
  else if (key == "dataset_label") c.dataset_label = value;
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "template") c.template_path = value;
  else if (key == "adapter") {
    if (value == "mock") c.adapter = AdapterKind::mock;
    else if (value == "remote") c.adapter = AdapterKind::remote;
    else throw InputError("config: adapter must be mock or remote");
  } else if (key == "model_id") c.model_id = value;
  else if (key == "base_url") c.base_url = value;
  else if (key == "api_key_env") c.api_key_env = value;
  else if (key == "requests_per_second") c.requests_per_second = parse_double(key, value);
  else if (key == "max_attempts") c.max_attempts = parse_int<int>(key, value);
  else if (key == "retry_base_ms") c.retry_base_ms = parse_int<int>(key, value);
  else if (key == "timeout_ms") c.timeout_ms = parse_int<int>(key, value);
  else if (key == "max_output_tokens") c.max_output_tokens = parse_int<int>(key, value);
  else if (key == "temperature") c.temperature = parse_double(key, value);
  else if (key == "trace") c.trace = parse_bool(key, value);
  else if (key == "mock_item_noise") c.mock_item_noise = parse_double(key, value);
  else if (key == "mock_output_noise") c.mock_output_noise = parse_double(key, value);
  else if (key == "mock_noise_seed") c.mock_noise_seed = parse_int<std::uint64_t>(key, value);
  else if (key == "embedder") {
    if (value == "hashed") c.embedder = embed::EmbedderKind::hashed;
    else if (value == "remote") c.embedder = embed::EmbedderKind::remote;
    else throw InputError("config: embedder must be hashed or remote");
  } else if (key == "embed_dimension") c.embed_dimension = parse_int<std::size_t>(key, value);
  else if (key == "embed_base_url") c.embed_base_url = value;
  else if (key == "embed_model") c.embed_model = value;
  else if (key == "embed_api_key_env") c.embed_api_key_env = value;
  else if (key == "l_grid") c.l_grid = parse_list<int>(key, value);
  else if (key == "k_grid") c.k_grid = parse_list<int>(key, value);
  else if (key == "seeds") c.seeds = parse_list<std::uint64_t>(key, value);
  else if (key == "test_fraction") c.test_fraction = parse_double(key, value);
  else if (key == "rating_threshold") c.rating_threshold = parse_double(key, value);
  else if (key == "r_min") c.r_min = parse_int<std::size_t>(key, value);
  else if (key == "min_pool_interactions") c.min_pool_interactions = parse_int<std::size_t>(key, value);
  else if (key == "zero_shot") c.zero_shot = parse_bool(key, value);
  else if (key == "no_header") c.no_header = parse_bool(key, value);
  else if (key == "coherence") {
    if (value == "max_match") c.coherence = metrics::CoherencePairing::max_match;
    else if (value == "centroid") c.coherence = metrics::CoherencePairing::centroid;
    else throw InputError("config: coherence must be max_match or centroid");
  } else if (key == "concurrency") c.concurrency = parse_int<int>(key, value);
  else if (key == "failure_budget") c.failure_budget = parse_double(key, value);
  else throw InputError("config: unknown key '" + std::string(key) + "'");
}

SweepConfig parse_config(std::string_view contents, const std::filesystem::path& base_dir) {
  SweepConfig config;
  std::size_t line_no = 0;
  for (const auto& raw_line : text::split(contents, "\n")) {
    ++line_no;
    std::string_view line = raw_line;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, text::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  // Relative paths in a config file resolve against the file's directory.
  auto rebase = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
  };
  rebase(config.bundle);
  rebase(config.output_dir);
  rebase(config.template_path);
  return config;
}

SweepConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string format_config(const SweepConfig& c) {
  std::ostringstream out;
  auto real = [](double v) { return corpus::format_real(v); };
  out << "bundle = " << c.bundle.string() << "\n"
      << "dataset_label = " << c.dataset_label << "\n"
      << "output_dir = " << c.output_dir.string() << "\n"
      << "template = " << c.template_path.string() << "\n"
      << "adapter = " << (c.adapter == AdapterKind::mock ? "mock" : "remote") << "\n"
      << "model_id = " << c.model_id << "\n"
      << "base_url = " << c.base_url << "\n"
      << "api_key_env = " << c.api_key_env << "\n"
      << "requests_per_second = " << real(c.requests_per_second) << "\n"
      << "max_attempts = " << c.max_attempts << "\n"
      << "retry_base_ms = " << c.retry_base_ms << "\n"
      << "timeout_ms = " << c.timeout_ms << "\n"
      << "max_output_tokens = " << c.max_output_tokens << "\n"
      << "temperature = " << real(c.temperature) << "\n"
      << "trace = " << (c.trace ? "true" : "false") << "\n"
      << "mock_item_noise = " << real(c.mock_item_noise) << "\n"
      << "mock_output_noise = " << real(c.mock_output_noise) << "\n"
      << "mock_noise_seed = " << c.mock_noise_seed << "\n"
      << "embedder = " << (c.embedder == embed::EmbedderKind::hashed ? "hashed" : "remote") << "\n"
      << "embed_dimension = " << c.embed_dimension << "\n"
      << "embed_base_url = " << c.embed_base_url << "\n"
      << "embed_model = " << c.embed_model << "\n"
      << "embed_api_key_env = " << c.embed_api_key_env << "\n"
      << "l_grid = " << join_list(c.l_grid) << "\n"
      << "k_grid = " << join_list(c.k_grid) << "\n"
      << "seeds = " << join_list(c.seeds) << "\n"
      << "test_fraction = " << real(c.test_fraction) << "\n"
      << "rating_threshold = " << real(c.rating_threshold) << "\n"
      << "r_min = " << c.r_min << "\n"
      << "min_pool_interactions = " << c.min_pool_interactions << "\n"
      << "zero_shot = " << (c.zero_shot ? "true" : "false") << "\n"
      << "no_header = " << (c.no_header ? "true" : "false") << "\n"
      << "coherence = " << (c.coherence == metrics::CoherencePairing::max_match ? "max_match" : "centroid") << "\n"
      << "concurrency = " << c.concurrency << "\n"
      << "failure_budget = " << real(c.failure_budget) << "\n";
  return out.str();
}

}  // namespace coldrec::sweep
