#include "coldrec/csv.hpp"

#include "coldrec/error.hpp"

namespace coldrec::csv {

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

std::optional<std::vector<std::string>> read_row(std::istream& in) {
  if (in.peek() == std::char_traits<char>::eof()) return std::nullopt;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool after_quote = false;
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else if (c == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw InputError("csv: unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace coldrec::csv
