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

// Turns ranked query structures into executable queries by filling their
// placeholders with linking candidates and validating the result.

#ifndef QGEN_GROUNDING_H_
#define QGEN_GROUNDING_H_

#include <cstddef>
#include <map>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgen/kb.h"
#include "qgen/linking.h"
#include "qgen/ranker.h"

namespace qgen {

class NoValidGrounding : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundingConfig {
  std::size_t top_k = 5;
  // Assignments tried per structure.
  std::size_t budget = 10000;
  // Structures grounded speculatively in parallel; results are committed in
  // rank order. 0 means hardware concurrency.
  std::size_t threads = 1;
  // Queries kept per structure (its best valid groundings); 0 keeps up to
  // top_k from one structure.
  std::size_t per_structure = 1;
};

struct GroundingResult {
  QueryGraph query;
  StructureKey key;
  std::size_t structure_rank = 0;
  // Placeholder (Ent1, Prop1, ...) to KB symbol.
  std::map<std::string, std::string> assignment;
  // Product of the chosen candidates' scores.
  double score = 0;
  AnswerSet answers;
};

// A placeholder position in a structure: a vertex or a user-defined label.
struct Slot {
  std::string placeholder;
  LinkKind kind = LinkKind::kEntity;
  std::optional<std::size_t> vertex;  // nullopt for labels
};

std::vector<Slot> SlotsOf(const QueryGraph& structure);

struct Assignment {
  // Per slot: the mention index and the candidate index within it.
  std::vector<std::pair<std::size_t, std::size_t>> choices;
  double score = 0;
};

// Best-first enumeration of slot assignments in non-increasing score order.
// No mention fills two slots.
class AssignmentEnumerator {
 public:
  AssignmentEnumerator(const std::vector<Slot>& slots, const Linking& links);

  // Next assignment, or nullopt when exhausted or `budget` candidates have
  // been examined.
  std::optional<Assignment> Next(std::size_t budget);
  std::size_t examined() const { return examined_; }

 private:
  struct Option {
    std::size_t mention;
    std::size_t candidate;
    double score;
  };
  double Score(const std::vector<std::size_t>& idx) const;

  std::vector<std::vector<Option>> options_;
  // Ordered by score descending, then index vector, for a deterministic
  // order among ties.
  std::set<std::pair<double, std::vector<std::size_t>>,
           std::greater<>> frontier_;
  std::set<std::vector<std::size_t>> seen_;
  std::size_t examined_ = 0;
};

// Built-in argument kinds, classes only as ISA objects, aggregate results
// used once, positive integer ranking offsets, connectivity, and a target
// (or ASK) that occurs in the graph.
bool ValidateGrammar(const QueryGraph& q);

// Per-structure bookkeeping for inspection.
struct GroundingTrace {
  std::vector<std::size_t> examined;  // parallel to the ranked list
};

// Structures are tried in rank order. Within a structure, assignments come
// best first and each is checked for grammar, domain/range and a non-empty
// answer; every target choice that passes yields a result. Stops after
// top_k results. Throws NoValidGrounding when nothing passes.
std::vector<GroundingResult> Ground(const std::vector<ScoredStructure>& ranked,
                                    const Linking& links,
                                    const KnowledgeBase& kb,
                                    const GroundingConfig& config = {},
                                    GroundingTrace* trace = nullptr);

}  // namespace qgen

#endif  // QGEN_GROUNDING_H_
