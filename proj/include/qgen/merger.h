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

// Builds unseen query structures by merging frequent substructures that the
// predictors believe the question contains.

#ifndef QGEN_MERGER_H_
#define QGEN_MERGER_H_

#include <cstddef>
#include <string>
#include <vector>

#include "qgen/mining.h"
#include "qgen/query_graph.h"
#include "qgen/ranker.h"

namespace qgen {

struct MergeConfig {
  int K = 2;             // merge rounds
  double theta = 0.3;    // minimum score of kept structures
  std::size_t tau = 5;   // maximum triples
  std::size_t delta = 2; // maximum aggregation built-ins
  // Whether MAXATN/MINATN count towards delta.
  bool delta_counts_ranking = true;
  // Unification choices per merge_pair call.
  std::size_t max_vertex_pairs = 2;
  std::size_t max_label_pairs = 1;
  // Best-scoring members kept per round.
  std::size_t max_members = 200;
  ScoreOptions score;
};

// All structures obtained from the disjoint union of a and b by unifying up
// to max_vertex_pairs vertex pairs (same kind; aggregate results never;
// ranking literals only with equal N) and up to max_label_pairs pairs of
// user-defined labels. Deduplicated, in placeholder form, without target.
// The disjoint union itself is included.
std::vector<QueryGraph> MergePair(const QueryGraph& a, const QueryGraph& b,
                                  std::size_t max_vertex_pairs = 2,
                                  std::size_t max_label_pairs = 1);

// Connected, at most tau triples and at most delta aggregations.
bool SatisfiesRestrictions(const QueryGraph& g, const MergeConfig& config);

struct MergeTrace {
  // rounds[i] holds M(i) in score order.
  std::vector<std::vector<ScoredStructure>> rounds;
  std::string ToJson() const;
};

// Seeds M(0) with frequent substructures scoring above theta, then for K
// rounds merges every substructure with probability above 0.5 into every
// member of the previous round, keeping results that satisfy the
// restrictions and score above theta. Returns the deduplicated union of all
// rounds, sorted.
std::vector<ScoredStructure> MergeSubstructures(
    const ProbabilityMap& probs, const SubstructureCatalog& catalog,
    const MergeConfig& config, MergeTrace* trace = nullptr);

}  // namespace qgen

#endif  // QGEN_MERGER_H_
