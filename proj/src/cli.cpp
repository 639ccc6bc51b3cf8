#include "coldrec/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "coldrec/bundle.hpp"
#include "coldrec/config.hpp"
#include "coldrec/corpus.hpp"
#include "coldrec/error.hpp"
#include "coldrec/metrics.hpp"
#include "coldrec/report.hpp"
#include "coldrec/sweep.hpp"
#include "coldrec/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace coldrec::cli {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct IngestArgs {
  std::string kind;
  std::string input;
  std::string out;
};

struct SynthArgs {
  std::string out;
  std::string shape = "synthetic";
  std::size_t users = 400;
  std::uint64_t seed = 7;
};

struct SplitArgs {
  std::string bundle;
  std::uint64_t seed = 1;
  double test_fraction = 0.1;
  double rating_threshold = 4.0;
  std::size_t r_min = 5;
  std::string out;
};

// Options shared by `run` and `sweep`; each one overrides the config file.
struct RunArgs {
  std::string config;
  std::string bundle;
  std::string out;
  std::string adapter;
  std::string model;
  std::string base_url;
  std::string template_path;
  std::vector<std::string> settings;
  bool zero_shot = false;
  bool no_header = false;
  bool trace = false;
  std::optional<int> concurrency;
  // run only
  int l = 1024;
  int k = 6;
  std::uint64_t seed = 1;
};

struct GainArgs {
  double baseline_p5 = 0;
  double baseline_ndcg = 0;
  double proposed_p5 = 0;
  double proposed_ndcg = 0;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--config", a.config, "Sweep config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--bundle", a.bundle, "Corpus bundle directory");
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--adapter", a.adapter, "Model adapter")->check(CLI::IsMember({"mock", "remote"}));
  cmd->add_option("--model", a.model, "Model identifier sent to the backend");
  cmd->add_option("--base-url", a.base_url, "Chat-completions base URL for the remote adapter");
  cmd->add_option("--template", a.template_path, "Prompt template file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.settings, "Extra config setting KEY=VALUE (repeatable)");
  cmd->add_flag("--zero-shot", a.zero_shot, "Add zero-shot (k = 0) ablation cells");
  cmd->add_flag("--no-header", a.no_header, "Add header-removed ablation cells");
  cmd->add_flag("--trace", a.trace, "Log redacted request/response bodies to <out>/trace.log");
  cmd->add_option("--concurrency", a.concurrency, "In-flight model requests per cell")->check(CLI::PositiveNumber);
}

sweep::SweepConfig resolve_config(const RunArgs& a) {
  sweep::SweepConfig c;
  try {
    if (!a.config.empty()) c = sweep::load_config(a.config);
    if (!a.bundle.empty()) c.bundle = a.bundle;
    if (!a.out.empty()) c.output_dir = a.out;
    if (!a.adapter.empty()) sweep::apply_setting(c, "adapter", a.adapter);
    if (!a.model.empty()) c.model_id = a.model;
    if (!a.base_url.empty()) c.base_url = a.base_url;
    if (!a.template_path.empty()) c.template_path = a.template_path;
    if (a.zero_shot) c.zero_shot = true;
    if (a.no_header) c.no_header = true;
    if (a.trace) c.trace = true;
    if (a.concurrency) c.concurrency = *a.concurrency;
    for (const auto& s : a.settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got: " + s);
      sweep::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (c.bundle.empty()) throw UsageError("no bundle: pass --bundle or set `bundle` in the config");
    c.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  if (!fs::is_directory(c.bundle)) throw Error("bundle not found: " + c.bundle.string());
  return c;
}

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  if (!fs::exists(a.input)) {
    err << "error: input not found: " << a.input << "\n";
    return kExitFailure;
  }
  const auto kind = corpus::parse_dataset_kind(a.kind);
  const corpus::Corpus corpus = corpus::parse_dataset(kind, a.input);
  corpus::write_bundle(corpus, a.out, json{{"input", a.input}});
  for (const auto& r : corpus.reports) {
    err << r.source << ": " << r.rows_parsed << " rows parsed, " << r.rows_skipped << " skipped, " << r.warnings
        << " warnings\n";
  }
  out << json{{"bundle", a.out},
              {"kind", corpus::to_string(kind)},
              {"items", corpus.catalog.size()},
              {"interactions", corpus.interactions.size()},
              {"users_with_metadata", corpus.metadata.size()},
              {"profile_oracle", corpus.profile_oracle}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  corpus::Corpus corpus;
  json params{{"generator", a.shape}};
  if (a.shape == "analytic") {
    corpus::AnalyticSpec spec;
    spec.users_per_cluster = std::max<std::size_t>(1, a.users / spec.clusters);
    params["users_per_cluster"] = spec.users_per_cluster;
    corpus = corpus::make_analytic(spec);
  } else {
    corpus::SyntheticSpec spec;
    spec.users = a.users;
    spec.seed = a.seed;
    params["users"] = spec.users;
    params["seed"] = spec.seed;
    corpus = corpus::make_synthetic(spec);
  }
  corpus::write_bundle(corpus, a.out, params);
  out << json{{"bundle", a.out}, {"items", corpus.catalog.size()}, {"interactions", corpus.interactions.size()}}.dump()
      << "\n";
  return kExitOk;
}

int cmd_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(a.bundle)) {
    err << "error: bundle not found: " << a.bundle << "\n";
    return kExitFailure;
  }
  const auto corpus = corpus::read_bundle(a.bundle);
  const auto split = corpus::make_coldstart_split(corpus.interactions, corpus.metadata, corpus.kind,
                                                  a.test_fraction, a.seed, {a.rating_threshold, a.r_min});
  if (a.out.empty()) {
    out << corpus::to_json(split).dump(2) << "\n";
  } else {
    corpus::write_split(split, a.out);
    err << "split: " << split.train_user_ids.size() << " train, " << split.test_user_ids.size() << " test users\n";
  }
  return kExitOk;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  sweep::SweepConfig c = resolve_config(a);
  if (a.l <= 0) throw UsageError("--l must be positive");
  if (!a.zero_shot && a.k <= 0) throw UsageError("--k must be positive");
  const auto corpus = corpus::read_bundle(c.bundle);
  const fs::path out_dir = c.output_dir;
  fs::create_directories(out_dir);

  auto tmpl = c.template_path.empty() ? prompt::PromptTemplate{} : prompt::load_template(c.template_path);
  embed::EmbedderConfig ec;
  ec.kind = c.embedder;
  ec.dimension = c.embed_dimension;
  ec.base_url = c.embed_base_url;
  ec.model = c.embed_model;
  ec.token_env = c.embed_api_key_env;
  ec.cache_dir = out_dir / "cache" / "embeddings";
  auto embedder = embed::make_embedder(ec);
  std::ofstream trace_file;
  if (c.trace) trace_file.open(out_dir / "trace.log", std::ios::app);
  auto adapter = sweep::make_adapter(c, corpus.catalog, c.trace ? &trace_file : nullptr);
  model::TranscriptCache cache(out_dir / "cache" / "transcripts");

  auto split = corpus::make_coldstart_split(corpus.interactions, corpus.metadata, corpus.kind, c.test_fraction,
                                            a.seed, {c.rating_threshold, c.r_min});
  const auto ctx = sweep::prepare_seed(corpus, std::move(split), *embedder, c.min_pool_interactions);
  sweep::CellKey key{sweep::Variant::optimized, a.l, a.k, a.seed};
  if (a.zero_shot) key = {sweep::Variant::zero_shot, a.l, 0, a.seed};
  else if (a.no_header) key.variant = sweep::Variant::no_header;

  sweep::CellRunner runner(c, corpus, tmpl, *adapter, *embedder, cache);
  const auto rec = runner.run(ctx, key);
  {
    std::ofstream f(out_dir / "record.json");
    f << sweep::to_json(rec).dump(2) << "\n";
  }
  const std::string dataset =
      c.dataset_label.empty() ? std::string(corpus::to_string(corpus.kind)) : c.dataset_label;
  const auto table = sweep::build_table({rec}, dataset, c.model_id, corpus.profile_oracle);
  {
    std::ofstream f(out_dir / "results.csv");
    sweep::write_results_csv(table, f);
  }
  if (rec.failed) {
    err << "cell " << key.dir_name() << " failed: " << rec.failure << "\n";
    return kExitFailure;
  }
  const auto& s = table.rows.front().summary;
  out << json{{"cell", key.dir_name()},
              {"precision_at_5", s.precision_at_5.mean},
              {"ndcg_at_10", s.ndcg_at_10.mean},
              {"semantic_coherence", s.semantic_coherence.mean},
              {"users", s.users},
              {"generate_calls", rec.generate_calls},
              {"cache_hits", rec.cache_hits}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_sweep(const RunArgs& a, std::ostream& out, std::ostream& err) {
  const sweep::SweepConfig c = resolve_config(a);
  const auto outcome = sweep::run_sweep(c, nullptr, &err);
  out << json{{"output_dir", c.output_dir.string()},
              {"cells", outcome.table.records.size()},
              {"failed_cells", outcome.failed_cells},
              {"generate_calls", outcome.generate_calls},
              {"cache_hits", outcome.cache_hits}}
             .dump()
      << "\n";
  if (outcome.failed_cells > 0) {
    err << outcome.failed_cells << " cell(s) failed; see " << (c.output_dir / "report.md").string() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_report(const std::string& dir, std::ostream& out) {
  const fs::path root = dir;
  json manifest = json::object();
  if (std::ifstream in(root / "manifest.json"); in) {
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw Error("manifest.json: " + std::string(e.what()));
    }
  }
  auto records = sweep::load_records(root);
  const auto table = sweep::build_table(std::move(records), manifest.value("dataset", std::string("unknown")),
                                        manifest.value("model_id", std::string("unknown")),
                                        manifest.value("profile_oracle", false));
  report::ReportContext context;
  context.config_sha256 = manifest.value("config_sha256", std::string());
  context.relevance_rule = manifest.value("relevance_rule", std::string());
  {
    std::ofstream f(root / "results.csv");
    sweep::write_results_csv(table, f);
  }
  report::write_report_files(table, context, root);
  out << (root / "report.md").string() << "\n";
  return kExitOk;
}

// 49 -> "49.0", 43.65 -> "43.65"
std::string input_value(double v) {
  return metrics::round_half_up(v, 1) == v ? metrics::format_percent(v) : corpus::format_real(v);
}

int cmd_gains(const GainArgs& a, std::ostream& out) {
  if (a.baseline_p5 <= 0 || a.baseline_ndcg <= 0 || a.proposed_p5 <= 0 || a.proposed_ndcg <= 0)
    throw UsageError("gains: all inputs must be > 0");
  const auto g = metrics::GainReport::make("", a.baseline_p5, a.baseline_ndcg, a.proposed_p5, a.proposed_ndcg);
  out << "baseline P@5 / NDCG: " << input_value(g.baseline_p5) << " / " << input_value(g.baseline_ndcg) << "\n"
      << "proposed P@5 / NDCG: " << input_value(g.proposed_p5) << " / " << input_value(g.proposed_ndcg) << "\n"
      << "gains: " << metrics::format_percent(g.gain_p5_pct) << " / " << metrics::format_percent(g.gain_ndcg_pct)
      << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cold-start recommendation prompt harness", "coldrec"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse a raw dataset into a corpus bundle");
  c_ingest->add_option("--kind", ingest.kind, "Dataset kind")
      ->required()
      ->check(CLI::IsMember({"movielens", "lastfm", "amazon"}));
  c_ingest->add_option("--input", ingest.input, "Dataset file or directory")->required();
  c_ingest->add_option("--out", ingest.out, "Bundle directory to write")->required();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a generated corpus bundle");
  c_synth->add_option("--out", synth.out, "Bundle directory to write")->required();
  c_synth->add_option("--shape", synth.shape, "Generator")->check(CLI::IsMember({"synthetic", "analytic"}));
  c_synth->add_option("--users", synth.users, "Number of users")->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth.seed, "Generator seed");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Sample a cold-start split from a bundle");
  c_split->add_option("--bundle", split.bundle, "Corpus bundle directory")->required();
  c_split->add_option("--seed", split.seed, "Sampling seed");
  c_split->add_option("--test-fraction", split.test_fraction, "Share of eligible users held out")
      ->check(CLI::Range(0.0, 1.0));
  c_split->add_option("--rating-threshold", split.rating_threshold, "Minimum relevant rating");
  c_split->add_option("--r-min", split.r_min, "Minimum relevant items for a test user");
  c_split->add_option("--out", split.out, "Split JSON file (default: stdout)");

  RunArgs run_args;
  auto* c_run = app.add_subcommand("run", "Evaluate a single (l, k, seed) cell");
  add_run_options(c_run, run_args);
  c_run->add_option("--l", run_args.l, "Token budget");
  c_run->add_option("--k", run_args.k, "Exemplar count");
  c_run->add_option("--seed", run_args.seed, "Split seed");

  RunArgs sweep_args;
  auto* c_sweep = app.add_subcommand("sweep", "Run the full (l, k, seed) grid");
  add_run_options(c_sweep, sweep_args);

  std::string report_dir;
  auto* c_report = app.add_subcommand("report", "Rebuild tables and report.md from a sweep directory");
  c_report->add_option("--out", report_dir, "Sweep output directory")->required()->check(CLI::ExistingDirectory);

  GainArgs gains;
  auto* c_gains = app.add_subcommand("gains", "Relative gains of a proposed method over a baseline");
  c_gains->add_option("baseline_p5", gains.baseline_p5, "Baseline P@5 (percent)")->required();
  c_gains->add_option("baseline_ndcg", gains.baseline_ndcg, "Baseline NDCG@10 (percent)")->required();
  c_gains->add_option("proposed_p5", gains.proposed_p5, "Proposed P@5 (percent)")->required();
  c_gains->add_option("proposed_ndcg", gains.proposed_ndcg, "Proposed NDCG@10 (percent)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest, out, err);
    if (c_synth->parsed()) return cmd_synth(synth, out);
    if (c_split->parsed()) return cmd_split(split, out, err);
    if (c_run->parsed()) return cmd_run(run_args, out, err);
    if (c_sweep->parsed()) return cmd_sweep(sweep_args, out, err);
    if (c_report->parsed()) return cmd_report(report_dir, out);
    if (c_gains->parsed()) return cmd_gains(gains, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"coldrec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace coldrec::cli
