#pragma once

#include <sstream>
#include <string>

#include "mbseg/corpus.hpp"

namespace testing {

inline mbseg::PreferenceGraph graph_from(const std::string& csv, const mbseg::ParseOptions& options = {}) {
  std::istringstream in(csv);
  return mbseg::read_csv(in, options);
}

// Single-category binary graph where every customer rates item j with like iff likes[i] > j.
inline mbseg::PreferenceGraph counts_graph(const std::vector<std::pair<int, int>>& likes_dislikes) {
  std::ostringstream csv;
  csv << "customer,item,label\n";
  for (std::size_t i = 0; i < likes_dislikes.size(); ++i) {
    const auto [likes, dislikes] = likes_dislikes[i];
    for (int j = 0; j < likes + dislikes; ++j) csv << "u" << i << ",i" << j << ',' << (j < likes ? "+1" : "-1") << '\n';
  }
  return graph_from(csv.str());
}

}  // namespace testing
