#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace coldrec::csv {

// RFC 4180 quoting: fields containing a comma, quote, CR or LF are quoted
// and embedded quotes doubled.
std::string escape(const std::string& field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Reads one logical record (quoted fields may span lines). Returns nullopt
// at end of input.
std::optional<std::vector<std::string>> read_row(std::istream& in);

}  // namespace coldrec::csv
