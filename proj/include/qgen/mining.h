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

// Query structure collection and frequent substructure mining over
// question/query training pairs.

#ifndef QGEN_MINING_H_
#define QGEN_MINING_H_

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgen/query_graph.h"

namespace qgen {

// What a question mention links to.
enum class LinkKind { kEntity, kProperty, kClass, kLiteral };

// A gold mention: byte span [begin, end) of the question plus the KB symbol
// it refers to.
struct Mention {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string symbol;
  LinkKind kind = LinkKind::kEntity;
};

struct TrainingPair {
  std::string question;
  QueryGraph query;
  std::vector<Mention> mentions;
};

class EmptyTrainingData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class QueryTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Queries above this size are rejected by the exhaustive enumeration.
inline constexpr std::size_t kMaxEnumerableTriples = 12;

// Pr[S* is contained in the question's query] for each S* in FS*.
using ProbabilityMap = std::map<StructureKey, double>;

struct CatalogEntry {
  StructureKey key;
  QueryGraph representative;  // placeholder form, canonically numbered
  std::size_t count = 0;
};

// One entry per distinct structure, in order of first appearance. Counts sum
// to the number of pairs.
std::vector<CatalogEntry> CollectStructures(
    const std::vector<TrainingPair>& pairs);

// One representative per distinct key among the connected non-empty triple
// subsets of g, including g itself. Representatives carry no target.
std::vector<QueryGraph> EnumerateSubstructures(const QueryGraph& g);

class SubstructureCatalog {
 public:
  SubstructureCatalog() = default;

  std::size_t gamma() const { return gamma_; }

  // TS, sorted by key.
  const std::vector<CatalogEntry>& structures() const { return structures_; }
  // Every connected substructure seen, with the number of training queries
  // containing it, sorted by key.
  const std::vector<CatalogEntry>& substructures() const {
    return substructures_;
  }
  // FS*: substructures contained in more than gamma queries, sorted by key.
  const std::vector<CatalogEntry>& frequent() const { return frequent_; }

  // containment()[i][j]: frequent()[j] is a substructure of structures()[i].
  const std::vector<std::vector<bool>>& containment() const {
    return containment_;
  }

  const CatalogEntry* FindStructure(const StructureKey& key) const;
  const CatalogEntry* FindSubstructure(const StructureKey& key) const;
  // Index into frequent(), or -1.
  long FrequentIndex(const StructureKey& key) const;

  // Containment bits against FS* for any structure: the stored row for
  // members of TS, computed with IsSubstructure otherwise.
  std::vector<bool> ContainmentPattern(const QueryGraph& structure) const;

  // A copy with FS* recomputed for another threshold.
  SubstructureCatalog WithGamma(std::size_t gamma) const;

  void Save(const std::string& path) const;
  static SubstructureCatalog Load(const std::string& path);

 private:
  friend SubstructureCatalog Mine(const std::vector<TrainingPair>&,
                                  std::size_t);
  void Finalize();

  std::size_t gamma_ = 0;
  std::vector<CatalogEntry> structures_;
  std::vector<CatalogEntry> substructures_;
  std::vector<CatalogEntry> frequent_;
  std::vector<std::vector<bool>> containment_;
  std::map<std::string, std::size_t> structure_index_;
  std::map<std::string, std::size_t> substructure_index_;
  std::map<std::string, std::size_t> frequent_index_;
};

// Builds TS and the substructure tally; FS* = {S : count > gamma}.
// Throws EmptyTrainingData for an empty corpus and QueryTooLarge for a
// query above kMaxEnumerableTriples.
SubstructureCatalog Mine(const std::vector<TrainingPair>& pairs,
                         std::size_t gamma);

}  // namespace qgen

#endif  // QGEN_MINING_H_
