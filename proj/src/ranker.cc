// Copyright 2026 The qgen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qgen/ranker.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "graph_json.h"

namespace qgen {

double ScorePattern(const std::vector<bool>& pattern,
                    const ProbabilityMap& probs,
                    const SubstructureCatalog& catalog,
                    const ScoreOptions& options) {
  const auto& frequent = catalog.frequent();
  if (pattern.size() != frequent.size()) {
    throw std::invalid_argument("containment pattern has the wrong size");
  }
  double log_score = 0;
  for (std::size_t j = 0; j < frequent.size(); ++j) {
    auto it = probs.find(frequent[j].key);
    if (it == probs.end()) {
      throw MissingProbability("no probability for frequent substructure " +
                               frequent[j].key.canonical);
    }
    const double p =
        std::clamp(it->second, options.clamp, 1.0 - options.clamp);
    log_score += pattern[j] ? std::log(p) : std::log1p(-p);
  }
  return std::exp(log_score);
}

double ScoreStructure(const QueryGraph& structure, const ProbabilityMap& probs,
                      const SubstructureCatalog& catalog,
                      const ScoreOptions& options) {
  return ScorePattern(catalog.ContainmentPattern(structure), probs, catalog,
                      options);
}

void SortScored(std::vector<ScoredStructure>& list) {
  std::sort(list.begin(), list.end(),
            [](const ScoredStructure& a, const ScoredStructure& b) {
              return std::make_tuple(-a.score, -static_cast<long>(a.count),
                                     a.key.triple_count, a.key.canonical) <
                     std::make_tuple(-b.score, -static_cast<long>(b.count),
                                     b.key.triple_count, b.key.canonical);
            });
}

std::vector<ScoredStructure> RankExisting(const ProbabilityMap& probs,
                                          const SubstructureCatalog& catalog,
                                          const ScoreOptions& options) {
  std::vector<ScoredStructure> out;
  const auto& ts = catalog.structures();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out.push_back({ts[i].key, ts[i].representative,
                   ScorePattern(catalog.containment()[i], probs, catalog,
                                options),
                   Provenance::kExisting, ts[i].count});
  }
  SortScored(out);
  return out;
}

std::string RankingToJsonLines(const std::vector<ScoredStructure>& list) {
  std::string out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const nlohmann::json j = {
        {"rank", i + 1},
        {"key", list[i].key.canonical},
        {"score", list[i].score},
        {"provenance",
         list[i].provenance == Provenance::kExisting ? "existing" : "merged"},
        {"representative", DebugString(list[i].representative)}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace qgen
