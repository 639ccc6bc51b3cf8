#include "coldrec/prompt.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "coldrec/error.hpp"
#include "coldrec/text.hpp"

namespace coldrec::prompt {

namespace {

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

}  // namespace

void PromptTemplate::validate() const {
  if (text::trim(header_text).empty()) throw InputError("prompt template: header is empty");
  if (exemplar_line_format.find("{label}") == std::string::npos ||
      exemplar_line_format.find("{items}") == std::string::npos) {
    throw InputError("prompt template: exemplar format needs {label} and {items}");
  }
  if (exemplar_line_format.find('\n') != std::string::npos) {
    throw InputError("prompt template: exemplar format must be a single line");
  }
  if (top_n_requested < 1) throw InputError("prompt template: top_n must be >= 1");
}

PromptTemplate parse_template(std::string_view contents) {
  std::map<std::string, std::string> sections;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::string name;
  std::vector<std::string> body;
  auto flush = [&] {
    if (!name.empty()) {
      std::string value = std::string(text::trim(text::join(body, "\n")));
      if (!sections.emplace(name, value).second) throw InputError("prompt template: duplicate section " + name);
    }
    name.clear();
    body.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line) == "---") {
      flush();
    } else if (name.empty()) {
      if (!text::trim(line).empty()) name = std::string(text::trim(line));
    } else {
      body.push_back(line);
    }
  }
  flush();

  PromptTemplate tmpl;
  for (const auto& [key, value] : sections) {
    if (key == "HEADER") tmpl.header_text = value;
    else if (key == "EXEMPLAR_FORMAT") tmpl.exemplar_line_format = value;
    else if (key == "TARGET_PREFIX") tmpl.target_prefix = value;
    else if (key == "REQUEST") tmpl.request_format = value;
    else if (key == "TOP_N") {
      int n = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc{} || ptr != value.data() + value.size()) throw InputError("prompt template: bad TOP_N " + value);
      tmpl.top_n_requested = n;
    } else {
      throw InputError("prompt template: unknown section " + key);
    }
  }
  for (const char* required : {"HEADER", "EXEMPLAR_FORMAT", "TARGET_PREFIX"}) {
    if (!sections.count(required)) throw InputError(std::string("prompt template: missing section ") + required);
  }
  tmpl.validate();
  return tmpl;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open template file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_template(ss.str());
}

std::string format_template(const PromptTemplate& tmpl) {
  std::ostringstream out;
  out << "HEADER\n" << tmpl.header_text << "\n---\n"
      << "EXEMPLAR_FORMAT\n" << tmpl.exemplar_line_format << "\n---\n"
      << "TARGET_PREFIX\n" << tmpl.target_prefix << "\n---\n"
      << "REQUEST\n" << tmpl.request_format << "\n---\n"
      << "TOP_N\n" << tmpl.top_n_requested << "\n";
  return out.str();
}

int count_tokens(std::string_view s) {
  int count = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    if (text::is_space(c)) {
      in_word = false;
    } else if (text::is_word_byte(c)) {
      if (!in_word) ++count;
      in_word = true;
    } else {
      ++count;
      in_word = false;
    }
  }
  return count;
}

std::string render_items(const std::vector<std::string>& titles) {
  std::string out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(i + 1) + ") " + titles[i];
  }
  return out;
}

std::string render_exemplar_line(const PromptTemplate& tmpl, const Exemplar& exemplar) {
  // Items go in last so titles containing "{label}" are left alone.
  std::string line = replace_all(tmpl.exemplar_line_format, "{label}", exemplar.label);
  return replace_all(line, "{items}", render_items(exemplar.ranked_item_titles));
}

std::string render_target_section(const PromptTemplate& tmpl, std::string_view target_metadata_text) {
  std::string out;
  if (!tmpl.target_prefix.empty()) out += tmpl.target_prefix + "\n";
  out += std::string(target_metadata_text);
  const std::string request = replace_all(tmpl.request_format, "{n}", std::to_string(tmpl.top_n_requested));
  if (!request.empty()) out += "\n" + request;
  return out;
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const SupportSet& support,
                             std::string_view target_metadata_text, int budget) {
  tmpl.validate();
  const std::string target = render_target_section(tmpl, target_metadata_text);
  const int fixed = (tmpl.include_header ? count_tokens(tmpl.header_text) : 0) + count_tokens(target);
  if (fixed > budget) throw BudgetInfeasible(budget, fixed);

  // Sections are joined by whitespace, so token counts add up exactly.
  std::vector<std::string> lines;
  int used = fixed;
  for (const auto& exemplar : support.exemplars) {
    std::string line = render_exemplar_line(tmpl, exemplar);
    const int cost = count_tokens(line);
    if (used + cost > budget) break;
    used += cost;
    lines.push_back(std::move(line));
  }

  std::vector<std::string> sections;
  if (tmpl.include_header) sections.push_back(tmpl.header_text);
  if (!lines.empty()) sections.push_back(text::join(lines, "\n"));
  sections.push_back(target);

  RenderedPrompt out;
  out.text = text::join(sections, "\n\n");
  out.token_count = count_tokens(out.text);
  out.included_exemplars = static_cast<int>(lines.size());
  out.dropped_exemplars = static_cast<int>(support.exemplars.size() - lines.size());
  out.budget = budget;
  return out;
}

RenderedPrompt zero_shot_prompt(const PromptTemplate& tmpl, std::string_view target_metadata_text, int budget) {
  return render_prompt(tmpl, SupportSet{}, target_metadata_text, budget);
}

}  // namespace coldrec::prompt
