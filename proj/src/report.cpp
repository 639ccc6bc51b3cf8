#include "coldrec/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "coldrec/csv.hpp"
#include "coldrec/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace coldrec::report {

namespace {

constexpr Metric kMetrics[] = {Metric::precision_at_5, Metric::ndcg_at_10, Metric::semantic_coherence};

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::string pct(double fraction) { return metrics::format_percent(fraction * 100.0); }

std::vector<CurvePoint> marginal(const sweep::ResultsTable& table, Metric metric, bool over_k) {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto& row : table.rows) {
    if (row.variant != sweep::Variant::optimized || row.summary.runs == 0) continue;
    auto& a = acc[over_k ? row.k : row.l];
    a.first += metric_mean(row.summary, metric);
    ++a.second;
  }
  std::vector<CurvePoint> out;
  for (const auto& [x, a] : acc) out.push_back({x, a.first / static_cast<double>(a.second), a.second});
  return out;
}

const sweep::TableRow* find_row(const sweep::ResultsTable& table, sweep::Variant v, int l, int k) {
  for (const auto& row : table.rows)
    if (row.variant == v && row.l == l && row.k == k && row.summary.runs > 0) return &row;
  return nullptr;
}

void write_file(const fs::path& file, const std::string& contents) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  out << contents;
}

std::vector<std::string> summary_cells(const metrics::Summary& s) {
  return {fixed(s.precision_at_5.mean, 6),     fixed(s.precision_at_5.stddev, 6),
          fixed(s.ndcg_at_10.mean, 6),         fixed(s.ndcg_at_10.stddev, 6),
          fixed(s.semantic_coherence.mean, 6), fixed(s.semantic_coherence.stddev, 6),
          std::to_string(s.runs)};
}

json summary_to_json(const metrics::Summary& s) {
  auto ms = [](const metrics::MetricSummary& m) { return json{{"mean", m.mean}, {"stddev", m.stddev}}; };
  return {{"precision_at_5", ms(s.precision_at_5)},
          {"ndcg_at_10", ms(s.ndcg_at_10)},
          {"semantic_coherence", ms(s.semantic_coherence)},
          {"runs", s.runs},
          {"users", s.users}};
}

}  // namespace

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::precision_at_5: return "precision_at_5";
    case Metric::ndcg_at_10: return "ndcg_at_10";
    case Metric::semantic_coherence: return "semantic_coherence";
  }
  return "precision_at_5";
}

double metric_mean(const metrics::Summary& summary, Metric metric) {
  switch (metric) {
    case Metric::precision_at_5: return summary.precision_at_5.mean;
    case Metric::ndcg_at_10: return summary.ndcg_at_10.mean;
    case Metric::semantic_coherence: return summary.semantic_coherence.mean;
  }
  return 0;
}

std::optional<sweep::TableRow> best_row(const sweep::ResultsTable& table, Metric metric) {
  const sweep::TableRow* best = nullptr;
  for (const auto& row : table.rows) {
    if (row.variant != sweep::Variant::optimized || row.summary.runs == 0) continue;
    if (!best || metric_mean(row.summary, metric) > metric_mean(best->summary, metric)) best = &row;
  }
  if (!best) return std::nullopt;
  return *best;
}

std::vector<CurvePoint> marginal_over_k(const sweep::ResultsTable& table, Metric metric) {
  return marginal(table, metric, true);
}

std::vector<CurvePoint> marginal_over_l(const sweep::ResultsTable& table, Metric metric) {
  return marginal(table, metric, false);
}

std::optional<int> knee(const std::vector<CurvePoint>& curve, double threshold) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    bool flat = true;
    for (std::size_t j = i + 1; j < curve.size(); ++j)
      if (curve[j].mean - curve[i].mean >= threshold) flat = false;
    if (flat) return curve[i].x;
  }
  return std::nullopt;
}

std::optional<GainLine> headline_gain(const sweep::ResultsTable& table) {
  const sweep::TableRow* best = nullptr;
  for (const auto& row : table.rows) {
    if (row.variant != sweep::Variant::optimized || row.summary.runs == 0) continue;
    if (!find_row(table, sweep::Variant::zero_shot, row.l, 0)) continue;
    if (!best) {
      best = &row;
      continue;
    }
    const double a = row.summary.ndcg_at_10.mean, b = best->summary.ndcg_at_10.mean;
    if (a > b || (a == b && row.summary.precision_at_5.mean > best->summary.precision_at_5.mean)) best = &row;
  }
  if (!best) return std::nullopt;
  const auto* base = find_row(table, sweep::Variant::zero_shot, best->l, 0);
  GainLine g;
  g.dataset = table.dataset;
  g.l = best->l;
  g.k = best->k;
  g.baseline_p5 = base->summary.precision_at_5.mean * 100.0;
  g.baseline_ndcg = base->summary.ndcg_at_10.mean * 100.0;
  g.proposed_p5 = best->summary.precision_at_5.mean * 100.0;
  g.proposed_ndcg = best->summary.ndcg_at_10.mean * 100.0;
  if (g.baseline_p5 > 0) g.gain_p5 = metrics::relative_gain(g.baseline_p5, g.proposed_p5);
  if (g.baseline_ndcg > 0) g.gain_ndcg = metrics::relative_gain(g.baseline_ndcg, g.proposed_ndcg);
  return g;
}

std::size_t budget_violations(const sweep::ResultsTable& table) {
  std::size_t n = 0;
  for (const auto& r : table.records)
    if (r.stats.max_token_count > r.key.l) ++n;
  return n;
}

json summary_json(const sweep::ResultsTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"variant", sweep::to_string(row.variant)},
                    {"l", row.l},
                    {"k", row.k},
                    {"cells_present", row.cells_present},
                    {"cells_failed", row.cells_failed},
                    {"summary", summary_to_json(row.summary)}});
  }
  json best = json::object();
  for (Metric m : kMetrics) {
    if (auto row = best_row(table, m))
      best[std::string(to_string(m))] = {{"l", row->l}, {"k", row->k}, {"mean", metric_mean(row->summary, m)}};
  }
  json doc{{"dataset", table.dataset},
           {"model_id", table.model_id},
           {"profile_oracle", table.profile_oracle},
           {"rows", std::move(rows)},
           {"best", std::move(best)},
           {"budget_violations", budget_violations(table)}};
  if (auto g = headline_gain(table)) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    doc["gain"] = {{"l", g->l},
                   {"k", g->k},
                   {"baseline_p5", g->baseline_p5},
                   {"baseline_ndcg", g->baseline_ndcg},
                   {"proposed_p5", g->proposed_p5},
                   {"proposed_ndcg", g->proposed_ndcg},
                   {"gain_p5_pct", opt(g->gain_p5)},
                   {"gain_ndcg_pct", opt(g->gain_ndcg)}};
  }
  return doc;
}

void write_series(const sweep::ResultsTable& table, const fs::path& dir) {
  const std::vector<std::string> stats{"p5_mean", "p5_std", "ndcg10_mean", "ndcg10_std",
                                       "coherence_mean", "coherence_std", "runs"};
  std::vector<const sweep::TableRow*> rows;
  for (const auto& row : table.rows)
    if (row.variant == sweep::Variant::optimized) rows.push_back(&row);

  auto grid = [&](bool k_major) {
    auto sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(), [&](const auto* a, const auto* b) {
      return k_major ? std::pair(a->l, a->k) < std::pair(b->l, b->k) : std::pair(a->k, a->l) < std::pair(b->k, b->l);
    });
    std::ostringstream out;
    std::vector<std::string> header{k_major ? "l" : "k", k_major ? "k" : "l"};
    header.insert(header.end(), stats.begin(), stats.end());
    csv::write_row(out, header);
    for (const auto* row : sorted) {
      std::vector<std::string> cells{std::to_string(k_major ? row->l : row->k),
                                     std::to_string(k_major ? row->k : row->l)};
      auto s = summary_cells(row->summary);
      cells.insert(cells.end(), s.begin(), s.end());
      csv::write_row(out, cells);
    }
    return out.str();
  };
  // vs_k: one curve over k per budget; vs_l: one curve over l per k
  write_file(dir / "vs_k.csv", grid(true));
  write_file(dir / "vs_l.csv", grid(false));

  auto marginal_csv = [&](bool over_k) {
    std::ostringstream out;
    csv::write_row(out, {over_k ? "k" : "l", "p5_mean", "ndcg10_mean", "coherence_mean", "rows"});
    const auto p5 = marginal(table, Metric::precision_at_5, over_k);
    const auto nd = marginal(table, Metric::ndcg_at_10, over_k);
    const auto co = marginal(table, Metric::semantic_coherence, over_k);
    for (std::size_t i = 0; i < p5.size(); ++i)
      csv::write_row(out, {std::to_string(p5[i].x), fixed(p5[i].mean, 6), fixed(nd[i].mean, 6),
                           fixed(co[i].mean, 6), std::to_string(p5[i].rows)});
    return out.str();
  };
  write_file(dir / "vs_k_marginal.csv", marginal_csv(true));
  write_file(dir / "vs_l_marginal.csv", marginal_csv(false));
}

std::string render_markdown(const sweep::ResultsTable& table, const ReportContext& context) {
  std::ostringstream md;
  md << "# Sweep report: " << table.dataset << "\n\n";
  md << "- model: `" << table.model_id << "`\n";
  if (!context.config_sha256.empty()) md << "- config sha256: `" << context.config_sha256 << "`\n";
  md << "- cells: " << table.records.size();
  std::size_t failed = 0;
  for (const auto& r : table.records) failed += r.failed ? 1 : 0;
  md << " (" << failed << " failed)\n";
  if (!context.relevance_rule.empty()) md << "- relevance: " << context.relevance_rule << "\n";
  md << "- unmatched items: " << context.unmatched_policy << "\n";
  if (table.profile_oracle)
    md << "- **profile oracle**: interest tags were derived from the users' own interactions; "
          "target metadata is not independent of the ground truth\n";
  md << "- budget compliance: " << budget_violations(table) << " cells exceeded their token budget\n\n";

  md << "## Best cells\n\n| metric | l | k | mean |\n|---|---|---|---|\n";
  for (Metric m : kMetrics) {
    if (auto row = best_row(table, m))
      md << "| " << to_string(m) << " | " << row->l << " | " << row->k << " | " << fixed(metric_mean(row->summary, m), 4)
         << " |\n";
  }
  md << "\n";

  md << "## Grid (mean ± sd over seeds, percent)\n\n"
        "| variant | l | k | P@5 | NDCG@10 | coherence | runs | failed cells |\n"
        "|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : table.rows) {
    const auto& s = row.summary;
    md << "| " << sweep::to_string(row.variant) << " | " << row.l << " | " << row.k << " | ";
    if (s.runs == 0) {
      md << "absent | absent | absent | 0 | " << row.cells_failed << " |\n";
      continue;
    }
    md << pct(s.precision_at_5.mean) << " ± " << pct(s.precision_at_5.stddev) << " | " << pct(s.ndcg_at_10.mean)
       << " ± " << pct(s.ndcg_at_10.stddev) << " | " << fixed(s.semantic_coherence.mean, 3) << " | " << s.runs
       << " | " << row.cells_failed << " |\n";
  }
  md << "\n";

  md << "## Curves\n\n";
  const auto over_k = marginal_over_k(table, Metric::ndcg_at_10);
  const auto over_l = marginal_over_l(table, Metric::ndcg_at_10);
  if (!over_k.empty()) {
    const auto peak = std::max_element(over_k.begin(), over_k.end(),
                                       [](const auto& a, const auto& b) { return a.mean < b.mean; });
    md << "- NDCG@10 averaged over l peaks at k = " << peak->x << " (" << pct(peak->mean) << ")\n";
  }
  if (!over_l.empty()) {
    const auto k_point = knee(over_l);
    if (k_point && *k_point != over_l.back().x)
      md << "- knee over l: returns flatten after l = " << *k_point << "\n";
    else
      md << "- knee over l: no plateau inside the grid\n";
  }
  md << "- series: `series/vs_k.csv`, `series/vs_l.csv`, `series/vs_k_marginal.csv`, `series/vs_l_marginal.csv`\n\n";

  md << "## Gain over zero-shot\n\n";
  if (auto g = headline_gain(table)) {
    auto gain = [](const std::optional<double>& v) { return v ? metrics::format_percent(*v) : std::string("n/a"); };
    md << "Best optimized cell (l = " << g->l << ", k = " << g->k << ") against zero-shot at the same budget.\n\n"
       << "| | P@5 | NDCG@10 |\n|---|---|---|\n"
       << "| zero-shot | " << metrics::format_percent(g->baseline_p5) << " | "
       << metrics::format_percent(g->baseline_ndcg) << " |\n"
       << "| optimized | " << metrics::format_percent(g->proposed_p5) << " | "
       << metrics::format_percent(g->proposed_ndcg) << " |\n"
       << "| relative gain (%) | " << gain(g->gain_p5) << " | " << gain(g->gain_ndcg) << " |\n\n";
  } else {
    md << "No zero-shot cells in this sweep.\n\n";
  }

  bool header_section = false;
  for (const auto& row : table.rows) {
    if (row.variant != sweep::Variant::no_header || row.summary.runs == 0) continue;
    const auto* with = find_row(table, sweep::Variant::optimized, row.l, row.k);
    if (!with) continue;
    if (!header_section) {
      md << "## Header ablation\n\n| l | k | NDCG@10 with header | without | difference |\n|---|---|---|---|---|\n";
      header_section = true;
    }
    md << "| " << row.l << " | " << row.k << " | " << pct(with->summary.ndcg_at_10.mean) << " | "
       << pct(row.summary.ndcg_at_10.mean) << " | "
       << metrics::format_percent((with->summary.ndcg_at_10.mean - row.summary.ndcg_at_10.mean) * 100.0) << " |\n";
  }
  if (header_section) md << "\n";

  bool failures = false;
  for (const auto& r : table.records) {
    if (!r.failed) continue;
    if (!failures) md << "## Failed cells\n\n";
    failures = true;
    md << "- `" << r.key.dir_name() << "`: " << r.failure << "\n";
  }
  return md.str();
}

void write_report_files(const sweep::ResultsTable& table, const ReportContext& context, const fs::path& out_dir) {
  write_file(out_dir / "summary.json", summary_json(table).dump(2) + "\n");
  write_series(table, out_dir / "series");
  write_file(out_dir / "report.md", render_markdown(table, context));
}

}  // namespace coldrec::report
