#pragma once

#include <string>
#include <vector>

namespace coldrec {

// One (u_i, r_i) demonstration: an exemplar user and their top-ranked titles.
struct Exemplar {
  std::string user_id;
  std::string label;  // "A", "B", ...; rendered through the exemplar line format
  std::vector<std::string> ranked_item_titles;
  double similarity = 0.0;

  friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

// Exemplars in descending similarity order.
struct SupportSet {
  std::vector<Exemplar> exemplars;
  bool short_support = false;  // the pool held fewer than k candidates

  friend bool operator==(const SupportSet&, const SupportSet&) = default;
};

// Display label of the exemplar at `position`: A..Y, then numbers. Z is
// reserved for the target user.
std::string exemplar_label(std::size_t position);

}  // namespace coldrec
