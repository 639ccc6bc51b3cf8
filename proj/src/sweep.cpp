#include "coldrec/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "coldrec/bundle.hpp"
#include "coldrec/checksum.hpp"
#include "coldrec/csv.hpp"
#include "coldrec/error.hpp"
#include "coldrec/kernels.hpp"
#include "coldrec/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace coldrec::sweep {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& file, const std::string& contents) {
  fs::create_directories(file.parent_path());
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, file);
}

json parse_report_json(const model::ParseReport& p) {
  return {{"lines_seen", p.lines_seen},
          {"entries_parsed", p.entries_parsed},
          {"unmatched_count", p.unmatched_count},
          {"duplicates_dropped", p.duplicates_dropped}};
}

PromptStats compute_stats(const std::vector<UserRecord>& users) {
  PromptStats s;
  std::size_t rendered = 0;
  for (const auto& u : users) {
    if (u.short_support) ++s.short_support_count;
    if (u.token_count == 0) continue;
    ++rendered;
    s.mean_token_count += u.token_count;
    s.mean_included_exemplars += u.included_exemplars;
    s.max_token_count = std::max(s.max_token_count, u.token_count);
    s.max_included_exemplars = std::max(s.max_included_exemplars, u.included_exemplars);
  }
  if (rendered > 0) {
    s.mean_token_count /= static_cast<double>(rendered);
    s.mean_included_exemplars /= static_cast<double>(rendered);
  }
  return s;
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::optimized: return "optimized";
    case Variant::zero_shot: return "zero_shot";
    case Variant::no_header: return "no_header";
  }
  return "optimized";
}

Variant parse_variant(std::string_view name) {
  if (name == "optimized") return Variant::optimized;
  if (name == "zero_shot") return Variant::zero_shot;
  if (name == "no_header") return Variant::no_header;
  throw InputError("unknown variant: " + std::string(name));
}

std::string CellKey::dir_name() const {
  std::string name = std::to_string(l) + "_" + std::to_string(k) + "_" + std::to_string(seed);
  if (variant == Variant::zero_shot) name += "_zeroshot";
  if (variant == Variant::no_header) name += "_noheader";
  return name;
}

json to_json(const RunRecord& r) {
  json users = json::array();
  for (const auto& u : r.users) {
    users.push_back({{"user_id", u.user_id},
                     {"ok", u.ok},
                     {"error", u.error},
                     {"precision_at_5", u.eval.precision_at_5},
                     {"ndcg_at_10", u.eval.ndcg_at_10},
                     {"semantic_coherence", u.eval.semantic_coherence},
                     {"parse", parse_report_json(u.eval.parse)},
                     {"token_count", u.token_count},
                     {"included_exemplars", u.included_exemplars},
                     {"dropped_exemplars", u.dropped_exemplars},
                     {"short_support", u.short_support}});
  }
  return {{"variant", to_string(r.key.variant)},
          {"l", r.key.l},
          {"k", r.key.k},
          {"seed", r.key.seed},
          {"failed", r.failed},
          {"failure", r.failure},
          {"prompt_stats",
           {{"mean_token_count", r.stats.mean_token_count},
            {"mean_included_exemplars", r.stats.mean_included_exemplars},
            {"short_support_count", r.stats.short_support_count},
            {"max_token_count", r.stats.max_token_count},
            {"max_included_exemplars", r.stats.max_included_exemplars}}},
          {"users", std::move(users)}};
}

RunRecord run_record_from_json(const json& doc) {
  try {
    RunRecord r;
    r.key.variant = parse_variant(doc.at("variant").get<std::string>());
    r.key.l = doc.at("l").get<int>();
    r.key.k = doc.at("k").get<int>();
    r.key.seed = doc.at("seed").get<std::uint64_t>();
    r.failed = doc.at("failed").get<bool>();
    r.failure = doc.at("failure").get<std::string>();
    const auto& ps = doc.at("prompt_stats");
    r.stats.mean_token_count = ps.at("mean_token_count").get<double>();
    r.stats.mean_included_exemplars = ps.at("mean_included_exemplars").get<double>();
    r.stats.short_support_count = ps.at("short_support_count").get<std::size_t>();
    r.stats.max_token_count = ps.at("max_token_count").get<int>();
    r.stats.max_included_exemplars = ps.at("max_included_exemplars").get<int>();
    for (const auto& u : doc.at("users")) {
      UserRecord ur;
      ur.user_id = u.at("user_id").get<std::string>();
      ur.ok = u.at("ok").get<bool>();
      ur.error = u.at("error").get<std::string>();
      ur.eval.user_id = ur.user_id;
      ur.eval.precision_at_5 = u.at("precision_at_5").get<double>();
      ur.eval.ndcg_at_10 = u.at("ndcg_at_10").get<double>();
      ur.eval.semantic_coherence = u.at("semantic_coherence").get<double>();
      const auto& p = u.at("parse");
      ur.eval.parse.lines_seen = p.at("lines_seen").get<std::size_t>();
      ur.eval.parse.entries_parsed = p.at("entries_parsed").get<std::size_t>();
      ur.eval.parse.unmatched_count = p.at("unmatched_count").get<std::size_t>();
      ur.eval.parse.duplicates_dropped = p.at("duplicates_dropped").get<std::size_t>();
      ur.token_count = u.at("token_count").get<int>();
      ur.included_exemplars = u.at("included_exemplars").get<int>();
      ur.dropped_exemplars = u.at("dropped_exemplars").get<int>();
      ur.short_support = u.at("short_support").get<bool>();
      r.users.push_back(std::move(ur));
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed run record: ") + e.what());
  }
}

SeedContext prepare_seed(const corpus::Corpus& corpus, corpus::ColdStartSplit split, embed::Embedder& embedder,
                         std::size_t min_pool_interactions) {
  SeedContext ctx;
  ctx.split = std::move(split);
  const auto profiles = corpus::training_profiles(corpus.interactions, corpus.metadata, ctx.split);
  ctx.pool = embed::ExemplarPool::build(profiles, corpus.catalog, corpus.kind, embedder, min_pool_interactions);

  std::vector<std::string> embed_texts;
  for (const auto& id : ctx.split.test_user_ids) {
    auto profile = corpus::coldstart_profile(id, corpus.metadata);
    ctx.target_texts.push_back(corpus::metadata_to_text(profile.metadata, corpus.kind));
    embed_texts.push_back(embed::user_text(profile, corpus.catalog, corpus.kind));
    ctx.test_users.push_back(std::move(profile));
  }
  if (!embed_texts.empty()) ctx.target_vectors = embedder.embed(embed_texts);

  std::vector<std::string> truth_texts;
  std::vector<std::size_t> truth_counts;
  for (const auto& profile : ctx.test_users) {
    const auto& truth = ctx.split.ground_truth.at(profile.user_id);
    std::size_t n = 0;
    for (const auto& item_id : truth.ideal_ranking) {
      if (const auto* item = corpus.catalog.find(item_id)) {
        truth_texts.push_back(item->title);
        ++n;
      }
    }
    truth_counts.push_back(n);
  }
  std::vector<embed::EmbeddingVector> truth_vectors;
  if (!truth_texts.empty()) truth_vectors = embedder.embed(truth_texts);
  std::size_t pos = 0;
  for (std::size_t n : truth_counts) {
    auto first = truth_vectors.begin() + static_cast<std::ptrdiff_t>(pos);
    ctx.truth_vectors.emplace_back(std::make_move_iterator(first),
                                   std::make_move_iterator(first + static_cast<std::ptrdiff_t>(n)));
    pos += n;
  }
  return ctx;
}

CellRunner::CellRunner(const SweepConfig& config, const corpus::Corpus& corpus, prompt::PromptTemplate tmpl,
                       model::Adapter& adapter, embed::Embedder& embedder, model::TranscriptCache& cache)
    : config_(config),
      corpus_(corpus),
      template_(std::move(tmpl)),
      adapter_(adapter),
      embedder_(embedder),
      cache_(cache),
      titles_(corpus.catalog) {
  template_.validate();
}

RunRecord CellRunner::run(const SeedContext& ctx, const CellKey& key) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.key = key;

  const std::size_t n = ctx.test_users.size();
  rec.users.resize(n);
  std::vector<model::RankedList> ranked(n);

  prompt::PromptTemplate tmpl = template_;
  if (key.variant == Variant::no_header) tmpl.include_header = false;
  const bool needs_pool = key.variant != Variant::zero_shot;

  std::atomic<bool> abort{false};
  std::exception_ptr abort_error;
  std::mutex abort_mutex;

  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(config_.concurrency)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    if (abort.load()) continue;
    UserRecord& u = rec.users[i];
    u.user_id = ctx.test_users[i].user_id;
    u.eval.user_id = u.user_id;
    try {
      SupportSet support;
      if (needs_pool) {
        if (ctx.pool.size() == 0) throw InputError("exemplar pool is empty");
        support = ctx.pool.select(ctx.target_vectors[i], static_cast<std::size_t>(key.k));
      }
      const auto rendered = prompt::render_prompt(tmpl, support, ctx.target_texts[i], key.l);
      u.token_count = rendered.token_count;
      u.included_exemplars = rendered.included_exemplars;
      u.dropped_exemplars = rendered.dropped_exemplars;
      u.short_support = support.short_support;

      std::string raw;
      if (auto hit = cache_.lookup(config_.model_id, rendered.text)) {
        raw = std::move(*hit);
        u.cache_hit = true;
      } else {
        model::ModelRequest request;
        request.prompt_text = rendered.text;
        request.max_output_tokens = config_.max_output_tokens;
        request.temperature = config_.temperature;
        request.model_id = config_.model_id;
        request.seed = key.seed;
        request.top_n = tmpl.top_n_requested;
        auto response = adapter_.generate(request);
        u.attempts = response.attempts;
        u.adapter_token_count = response.adapter_token_count;
        raw = std::move(response.raw_text);
        cache_.store(config_.model_id, rendered.text, raw);
      }
      auto [list, report] = model::parse_ranked_list(raw, titles_);
      ranked[i] = std::move(list);
      u.eval.parse = report;
    } catch (const Error& e) {
      // budget infeasible, backend failure, bad input: this user only
      u.ok = false;
      u.error = e.what();
    } catch (...) {
      std::lock_guard lock(abort_mutex);
      if (!abort_error) abort_error = std::current_exception();
      abort.store(true);
    }
  }
  if (abort_error) std::rethrow_exception(abort_error);

  // Embedding stays on this thread: remote embedders are not reentrant.
  std::vector<std::string> prediction_texts;
  std::vector<std::size_t> prediction_counts(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rec.users[i].ok) continue;
    auto texts = metrics::prediction_texts(ranked[i], corpus_.catalog);
    prediction_counts[i] = texts.size();
    for (auto& t : texts) prediction_texts.push_back(std::move(t));
  }
  std::vector<embed::EmbeddingVector> prediction_vectors;
  if (!prediction_texts.empty()) prediction_vectors = embedder_.embed(prediction_texts);

  std::vector<kernels::UserEvalInput> inputs;
  std::vector<std::size_t> input_user;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rec.users[i].ok) continue;
    kernels::UserEvalInput in;
    in.ranked = &ranked[i];
    in.relevance = &ctx.split.ground_truth.at(rec.users[i].user_id);
    in.prediction_vectors = std::span(prediction_vectors).subspan(pos, prediction_counts[i]);
    in.truth_vectors = ctx.truth_vectors[i];
    pos += prediction_counts[i];
    inputs.push_back(in);
    input_user.push_back(i);
  }
  const auto scores = kernels::evaluate_batch(inputs, config_.coherence);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    auto& eval = rec.users[input_user[j]].eval;
    eval.precision_at_5 = scores[j].precision_at_5;
    eval.ndcg_at_10 = scores[j].ndcg_at_10;
    eval.semantic_coherence = scores[j].semantic_coherence;
  }

  std::size_t failed_users = 0;
  const UserRecord* first_failure = nullptr;
  for (const auto& u : rec.users) {
    if (u.cache_hit) ++rec.cache_hits;
    else if (u.ok) ++rec.generate_calls;
    if (!u.ok) {
      ++failed_users;
      if (!first_failure) first_failure = &u;
    }
  }
  if (n == 0) {
    rec.failed = true;
    rec.failure = "no test users";
  } else if (static_cast<double>(failed_users) > config_.failure_budget * static_cast<double>(n)) {
    rec.failed = true;
    rec.failure = std::to_string(failed_users) + " of " + std::to_string(n) + " users failed; first: " +
                  first_failure->user_id + ": " + first_failure->error;
  }
  rec.stats = compute_stats(rec.users);
  rec.wall_clock_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

ResultsTable build_table(std::vector<RunRecord> records, std::string dataset, std::string model_id,
                         bool profile_oracle) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) { return a.key < b.key; });
  ResultsTable table;
  table.dataset = std::move(dataset);
  table.model_id = std::move(model_id);
  table.profile_oracle = profile_oracle;

  using RowKey = std::tuple<Variant, int, int>;
  std::map<RowKey, std::map<std::uint64_t, std::vector<metrics::EvalResult>>> by_row;
  std::map<RowKey, std::pair<std::size_t, std::size_t>> counts;  // present, failed
  for (const auto& r : records) {
    const RowKey rk{r.key.variant, r.key.l, r.key.k};
    auto& c = counts[rk];
    auto& seeds = by_row[rk];
    if (r.failed) {
      ++c.second;
      continue;
    }
    ++c.first;
    auto& results = seeds[r.key.seed];
    for (const auto& u : r.users)
      if (u.ok) results.push_back(u.eval);
  }
  for (const auto& [rk, seeds] : by_row) {
    TableRow row;
    std::tie(row.variant, row.l, row.k) = rk;
    row.summary = metrics::aggregate(seeds);
    row.cells_present = counts[rk].first;
    row.cells_failed = counts[rk].second;
    table.rows.push_back(std::move(row));
  }
  table.records = std::move(records);
  return table;
}

void write_results_csv(const ResultsTable& table, std::ostream& out) {
  csv::write_row(out, {"dataset", "model_id", "l", "k", "seed", "user_id", "p5", "ndcg10", "coherence",
                       "lines_seen", "entries_parsed", "unmatched", "duplicates_dropped", "variant", "status"});
  for (const auto& r : table.records) {
    for (const auto& u : r.users) {
      const char* status = !u.ok ? "failed" : (r.failed ? "cell_failed" : "ok");
      csv::write_row(out, {table.dataset, table.model_id, std::to_string(r.key.l), std::to_string(r.key.k),
                           std::to_string(r.key.seed), u.user_id, fixed6(u.eval.precision_at_5),
                           fixed6(u.eval.ndcg_at_10), fixed6(u.eval.semantic_coherence),
                           std::to_string(u.eval.parse.lines_seen), std::to_string(u.eval.parse.entries_parsed),
                           std::to_string(u.eval.parse.unmatched_count),
                           std::to_string(u.eval.parse.duplicates_dropped), std::string(to_string(r.key.variant)),
                           status});
    }
  }
}

std::unique_ptr<model::Adapter> make_adapter(const SweepConfig& config, const corpus::Catalog& catalog,
                                             std::ostream* trace) {
  if (config.adapter == AdapterKind::mock) {
    model::MockNoise noise;
    noise.item_noise = config.mock_item_noise;
    noise.output_noise = config.mock_output_noise;
    noise.seed = config.mock_noise_seed;
    if (noise.item_noise > 0 || noise.output_noise > 0)
      for (const auto& item : catalog.items()) noise.pool.push_back(item.title);
    return std::make_unique<model::MockAdapter>(std::move(noise));
  }
  std::optional<std::string> token;
  if (const char* env = std::getenv(config.api_key_env.c_str()); env && *env) token = env;
  model::RetryPolicy policy;
  policy.max_attempts = config.max_attempts;
  policy.base_delay = std::chrono::milliseconds(config.retry_base_ms);
  policy.timeout = std::chrono::milliseconds(config.timeout_ms);
  std::shared_ptr<model::RateLimiter> limiter;
  if (config.requests_per_second > 0) limiter = std::make_shared<model::RateLimiter>(config.requests_per_second);
  auto client = std::make_shared<model::HttpClient>(config.base_url, token, policy, limiter, trace);
  return std::make_unique<model::RemoteAdapter>(std::move(client));
}

std::vector<CellKey> expand_cells(const SweepConfig& config, std::uint64_t seed) {
  std::vector<CellKey> cells;
  for (int l : config.l_grid)
    for (int k : config.k_grid) cells.push_back({Variant::optimized, l, k, seed});
  if (config.no_header)
    for (int l : config.l_grid)
      for (int k : config.k_grid) cells.push_back({Variant::no_header, l, k, seed});
  if (config.zero_shot)
    for (int l : config.l_grid) cells.push_back({Variant::zero_shot, l, 0, seed});
  return cells;
}

SweepOutcome run_sweep(const SweepConfig& config, model::Adapter* adapter_override, std::ostream* log) {
  config.validate();
  const std::string started_at = utc_now();
  const corpus::Corpus corpus = corpus::read_bundle(config.bundle);
  const std::string dataset =
      config.dataset_label.empty() ? std::string(corpus::to_string(corpus.kind)) : config.dataset_label;

  const fs::path out = config.output_dir;
  fs::create_directories(out / "cells");
  fs::create_directories(out / "splits");

  prompt::PromptTemplate tmpl =
      config.template_path.empty() ? prompt::PromptTemplate{} : prompt::load_template(config.template_path);

  embed::EmbedderConfig ec;
  ec.kind = config.embedder;
  ec.dimension = config.embed_dimension;
  ec.base_url = config.embed_base_url;
  ec.model = config.embed_model;
  ec.token_env = config.embed_api_key_env;
  ec.cache_dir = out / "cache" / "embeddings";
  auto embedder = embed::make_embedder(ec);

  std::ofstream trace_file;
  std::ostream* trace = nullptr;
  if (config.trace) {
    trace_file.open(out / "trace.log", std::ios::app);
    trace = &trace_file;
  }
  std::unique_ptr<model::Adapter> owned_adapter;
  model::Adapter* adapter = adapter_override;
  if (!adapter) {
    owned_adapter = make_adapter(config, corpus.catalog, trace);
    adapter = owned_adapter.get();
  }

  model::TranscriptCache cache(out / "cache" / "transcripts");
  CellRunner runner(config, corpus, tmpl, *adapter, *embedder, cache);
  const corpus::RelevanceRule rule{config.rating_threshold, config.r_min};

  SweepOutcome outcome;
  std::vector<RunRecord> records;
  for (std::uint64_t seed : config.seeds) {
    auto split = corpus::make_coldstart_split(corpus.interactions, corpus.metadata, corpus.kind,
                                              config.test_fraction, seed, rule);
    corpus::write_split(split, out / "splits" / ("seed_" + std::to_string(seed) + ".json"));
    const SeedContext ctx = prepare_seed(corpus, std::move(split), *embedder, config.min_pool_interactions);
    if (log)
      *log << "seed " << seed << ": " << ctx.test_users.size() << " test users, pool " << ctx.pool.size() << "\n";

    for (const auto& key : expand_cells(config, seed)) {
      RunRecord rec = runner.run(ctx, key);
      const fs::path cell_dir = out / "cells" / key.dir_name();
      write_text(cell_dir / "record.json", to_json(rec).dump(2) + "\n");
      json users = json::array();
      for (const auto& u : rec.users) {
        json entry{{"user_id", u.user_id}, {"cache_hit", u.cache_hit}, {"attempts", u.attempts}};
        if (u.adapter_token_count) entry["adapter_token_count"] = *u.adapter_token_count;
        users.push_back(std::move(entry));
      }
      write_text(cell_dir / "timing.json", json{{"wall_clock_ms", rec.wall_clock_ms},
                                                {"generate_calls", rec.generate_calls},
                                                {"cache_hits", rec.cache_hits},
                                                {"users", std::move(users)}}
                                                   .dump(2) +
                                               "\n");
      outcome.generate_calls += rec.generate_calls;
      outcome.cache_hits += rec.cache_hits;
      if (rec.failed) {
        ++outcome.failed_cells;
        if (log) *log << "cell " << key.dir_name() << " failed: " << rec.failure << "\n";
      } else if (log) {
        *log << "cell " << key.dir_name() << " done (" << rec.generate_calls << " calls, " << rec.cache_hits
             << " cached)\n";
      }
      records.push_back(std::move(rec));
    }
  }

  outcome.table = build_table(std::move(records), dataset, config.model_id, corpus.profile_oracle);
  {
    std::ostringstream csv_out;
    write_results_csv(outcome.table, csv_out);
    write_text(out / "results.csv", csv_out.str());
  }

  const std::string config_text = format_config(config);
  report::ReportContext context;
  context.config_sha256 = sha256_hex(config_text);
  context.relevance_rule = corpus::is_ratings_kind(corpus.kind)
                               ? "rating >= " + corpus::format_real(config.rating_threshold)
                               : std::string("play count >= the user's median play count");
  report::write_report_files(outcome.table, context, out);

  json manifest{{"code_version", kCodeVersion},
                {"dataset", dataset},
                {"model_id", config.model_id},
                {"config", config_text},
                {"config_sha256", context.config_sha256},
                {"bundle_manifest_sha256", sha256_file(config.bundle / "manifest.json")},
                {"profile_oracle", corpus.profile_oracle},
                {"relevance_rule", context.relevance_rule},
                {"cells", outcome.table.records.size()},
                {"failed_cells", outcome.failed_cells},
                {"generate_calls", outcome.generate_calls},
                {"cache_hits", outcome.cache_hits},
                {"started_at", started_at},
                {"finished_at", utc_now()}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

std::vector<RunRecord> load_records(const fs::path& output_dir) {
  const fs::path cells = output_dir / "cells";
  if (!fs::is_directory(cells)) throw InputError("no cells directory under " + output_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cells)) {
    const fs::path file = entry.path() / "record.json";
    if (entry.is_directory() && fs::exists(file)) files.push_back(file);
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> records;
  for (const auto& file : files) {
    std::ifstream in(file);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw InputError(file.string() + ": " + e.what());
    }
    records.push_back(run_record_from_json(doc));
  }
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) { return a.key < b.key; });
  return records;
}

}  // namespace coldrec::sweep
