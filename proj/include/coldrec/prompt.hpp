#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coldrec/support_set.hpp"

namespace coldrec::prompt {

inline constexpr std::string_view kDefaultHeader =
    "Given the following examples of users and their ranked preferences, recommend the top five "
    "items for the target user, considering contextual similarity and thematic relevance.";

// Prompt layout: header, blank line, exemplar lines, blank line, target
// section (prefix line, metadata sentence, request line).
struct PromptTemplate {
  std::string header_text{kDefaultHeader};
  // Slots: {label} and {items}; items render as "1) A, 2) B, ...".
  std::string exemplar_line_format = "User {label}: {items}.";
  std::string target_prefix = "Target user:";
  // Slot: {n}, the number of items requested.
  std::string request_format = "Recommend the top {n} items for User Z as a numbered list, one title per line.";
  int top_n_requested = 5;
  // Ablation switch; header_text stays valid when disabled.
  bool include_header = true;

  // Throws InputError on an empty header or a format missing a slot.
  void validate() const;
};

// Plain-text template file. Sections are separated by lines holding only
// `---`; the first line of a section is its name (HEADER, EXEMPLAR_FORMAT,
// TARGET_PREFIX, and optionally REQUEST and TOP_N), the rest its content.
PromptTemplate parse_template(std::string_view contents);
PromptTemplate load_template(const std::filesystem::path& path);
std::string format_template(const PromptTemplate& tmpl);

// Whitespace-separated runs where every punctuation character is a token
// of its own: "1) Kindle, 2) Echo" -> 7.
int count_tokens(std::string_view text);

struct RenderedPrompt {
  std::string text;
  int token_count = 0;
  int included_exemplars = 0;
  int dropped_exemplars = 0;
  int budget = 0;
};

std::string render_items(const std::vector<std::string>& titles);
std::string render_exemplar_line(const PromptTemplate& tmpl, const Exemplar& exemplar);
std::string render_target_section(const PromptTemplate& tmpl, std::string_view target_metadata_text);

// Includes the most similar exemplars that fit; whole lines are dropped from
// the least-similar end until the token count is within budget. Throws
// BudgetInfeasible when header and target section alone exceed it.
RenderedPrompt render_prompt(const PromptTemplate& tmpl, const SupportSet& support,
                             std::string_view target_metadata_text, int budget);

RenderedPrompt zero_shot_prompt(const PromptTemplate& tmpl, std::string_view target_metadata_text,
                                int budget = 1'000'000'000);

}  // namespace coldrec::prompt
