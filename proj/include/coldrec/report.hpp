#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coldrec/metrics.hpp"
#include "coldrec/sweep.hpp"

namespace coldrec::report {

enum class Metric { precision_at_5, ndcg_at_10, semantic_coherence };
std::string_view to_string(Metric metric);
double metric_mean(const metrics::Summary& summary, Metric metric);

// Highest mean among optimized rows with at least one run; ties keep the
// smaller (l, k).
std::optional<sweep::TableRow> best_row(const sweep::ResultsTable& table, Metric metric);

struct CurvePoint {
  int x = 0;
  double mean = 0;
  std::size_t rows = 0;
};

// Optimized rows averaged over the other grid axis, each row weighted once.
std::vector<CurvePoint> marginal_over_k(const sweep::ResultsTable& table, Metric metric);
std::vector<CurvePoint> marginal_over_l(const sweep::ResultsTable& table, Metric metric);

// First point after which no later point improves by `threshold` or more;
// nullopt for an empty curve.
std::optional<int> knee(const std::vector<CurvePoint>& curve, double threshold = 0.005);

// Best optimized cell (by NDCG@10, then P@5) against the zero-shot row at
// the same budget. Values are percentages; gains are nullopt when the
// baseline is 0.
struct GainLine {
  std::string dataset;
  int l = 0;
  int k = 0;
  double baseline_p5 = 0;
  double baseline_ndcg = 0;
  double proposed_p5 = 0;
  double proposed_ndcg = 0;
  std::optional<double> gain_p5;
  std::optional<double> gain_ndcg;
};

std::optional<GainLine> headline_gain(const sweep::ResultsTable& table);

struct ReportContext {
  std::string relevance_rule;
  std::string unmatched_policy = "unmatched model entries count as misses";
  std::string config_sha256;
};

// Cells whose largest prompt exceeded their budget; 0 in a correct run.
std::size_t budget_violations(const sweep::ResultsTable& table);

nlohmann::json summary_json(const sweep::ResultsTable& table);

// series/vs_k.csv, vs_l.csv, vs_k_marginal.csv, vs_l_marginal.csv
void write_series(const sweep::ResultsTable& table, const std::filesystem::path& dir);

std::string render_markdown(const sweep::ResultsTable& table, const ReportContext& context);

// summary.json, series/ and report.md under `out_dir`.
void write_report_files(const sweep::ResultsTable& table, const ReportContext& context,
                        const std::filesystem::path& out_dir);

}  // namespace coldrec::report
