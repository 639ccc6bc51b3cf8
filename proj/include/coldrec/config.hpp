#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coldrec/embed.hpp"
#include "coldrec/metrics.hpp"

namespace coldrec::sweep {

enum class AdapterKind { mock, remote };

// Flat key = value file; '#' starts a comment; lists are comma-separated.
// Every key is listed in config_keys() and documented in the README.
struct SweepConfig {
  std::filesystem::path bundle;
  std::string dataset_label;  // defaults to the bundle's dataset kind
  std::filesystem::path output_dir = "sweep_out";
  std::filesystem::path template_path;  // empty: built-in template

  AdapterKind adapter = AdapterKind::mock;
  std::string model_id = "mock";
  std::string base_url;
  std::string api_key_env = "OPENAI_API_KEY";
  double requests_per_second = 0;  // 0: unlimited
  int max_attempts = 5;
  int retry_base_ms = 1000;
  int timeout_ms = 120000;
  int max_output_tokens = 256;
  double temperature = 0.0;
  bool trace = false;

  double mock_item_noise = 0;
  double mock_output_noise = 0;
  std::uint64_t mock_noise_seed = 0;

  embed::EmbedderKind embedder = embed::EmbedderKind::hashed;
  std::size_t embed_dimension = embed::kDefaultDimension;
  std::string embed_base_url;
  std::string embed_model;
  std::string embed_api_key_env = "OPENAI_API_KEY";

  std::vector<int> l_grid{256, 512, 1024, 2048};
  std::vector<int> k_grid{2, 4, 6, 8, 10};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double test_fraction = 0.1;
  double rating_threshold = 4.0;
  std::size_t r_min = 5;
  std::size_t min_pool_interactions = 5;

  bool zero_shot = false;  // add k = 0 ablation cells
  bool no_header = false;  // add header-removed ablation cells
  metrics::CoherencePairing coherence = metrics::CoherencePairing::max_match;
  int concurrency = 4;
  double failure_budget = 0.10;

  // Throws InputError on an empty grid, non-positive values or duplicate seeds.
  void validate() const;
};

std::vector<std::string_view> config_keys();

// Throws InputError on an unknown key or a malformed value.
void apply_setting(SweepConfig& config, std::string_view key, std::string_view value);

SweepConfig parse_config(std::string_view contents, const std::filesystem::path& base_dir = {});
SweepConfig load_config(const std::filesystem::path& path);

// Canonical key = value rendering; its checksum identifies the config.
std::string format_config(const SweepConfig& config);

}  // namespace coldrec::sweep
