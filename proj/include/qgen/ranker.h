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

// Joint-probability scoring of query structures from substructure
// predictions.

#ifndef QGEN_RANKER_H_
#define QGEN_RANKER_H_

#include <stdexcept>
#include <string>
#include <vector>

#include "qgen/mining.h"
#include "qgen/query_graph.h"

namespace qgen {

enum class Provenance { kExisting, kMerged };

struct ScoredStructure {
  StructureKey key;
  QueryGraph representative;
  double score = 0;
  Provenance provenance = Provenance::kExisting;
  std::size_t count = 0;  // training queries with this structure
};

class MissingProbability : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct ScoreOptions {
  // Probabilities are clamped to [clamp, 1 - clamp] before taking logs so
  // one confident mistake cannot zero a product. 0 disables clamping.
  double clamp = 1e-6;
};

// prod_{S* in S} Pr[S*] * prod_{S* not in S} (1 - Pr[S*]) over FS*, given the
// containment bits of S against catalog.frequent(). Accumulated in log space.
double ScorePattern(const std::vector<bool>& pattern,
                    const ProbabilityMap& probs,
                    const SubstructureCatalog& catalog,
                    const ScoreOptions& options = {});

double ScoreStructure(const QueryGraph& structure, const ProbabilityMap& probs,
                      const SubstructureCatalog& catalog,
                      const ScoreOptions& options = {});

// Sorts by score descending, then training count descending, then fewer
// triples, then key.
void SortScored(std::vector<ScoredStructure>& list);

// Every structure in TS, scored and sorted.
std::vector<ScoredStructure> RankExisting(const ProbabilityMap& probs,
                                          const SubstructureCatalog& catalog,
                                          const ScoreOptions& options = {});

// {rank, key, score, provenance, representative} per line.
std::string RankingToJsonLines(const std::vector<ScoredStructure>& list);

}  // namespace qgen

#endif  // QGEN_RANKER_H_
