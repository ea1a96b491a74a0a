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

// Entity/property/class linking candidates, a dictionary linker standing in
// for an external one, and distractor injection.

#ifndef QGEN_LINKING_H_
#define QGEN_LINKING_H_

#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qgen/kb.h"
#include "qgen/mining.h"
#include "qgen/query_graph.h"
#include "qgen/sparql.h"

namespace qgen {

std::string_view LinkKindName(LinkKind kind);
std::optional<LinkKind> LinkKindFromName(std::string_view name);

struct Candidate {
  std::string symbol;
  double score = 1.0;

  bool operator==(const Candidate&) const = default;
};

// Candidates for one mention, best first.
struct MentionLinks {
  std::string mention;
  std::size_t begin = 0;
  std::size_t end = 0;
  LinkKind kind = LinkKind::kEntity;
  std::vector<Candidate> candidates;

  bool operator==(const MentionLinks&) const = default;
};

using Linking = std::vector<MentionLinks>;

// Surface form to symbol dictionary. Matching is case-insensitive,
// leftmost-longest and respects word boundaries; every hit scores 1.0.
class Gazetteer {
 public:
  // Lines `surface<TAB>kind<TAB>symbol` with kind one of entity, property,
  // class.
  static Gazetteer FromFile(const std::string& path,
                            const PrefixTable& prefixes =
                                PrefixTable::Default());
  static Gazetteer FromString(std::string_view text,
                              const PrefixTable& prefixes =
                                  PrefixTable::Default());

  void Add(std::string_view surface, LinkKind kind, std::string symbol);
  std::size_t size() const { return size_; }

  Linking Link(std::string_view question) const;

  // The top candidate of each linked mention.
  std::vector<Mention> Mentions(std::string_view question) const;

 private:
  std::map<std::string, std::vector<std::pair<LinkKind, std::string>>>
      entries_;
  std::size_t size_ = 0;
};

// One mention per constant of the query (entities, classes, non-ranking
// literals) and per property, each with a single candidate of score 1.
Linking GoldLinking(const QueryGraph& query);

// Numbers and double-quoted strings in the question, as literal candidates.
// A quoted string yields both a plain and an @en form.
Linking ExtractLiterals(std::string_view question);

// KB symbols by role, used to draw distractors.
struct DistractorPool {
  std::map<LinkKind, std::vector<std::string>> symbols;

  static DistractorPool FromKb(const KnowledgeBase& kb);
};

// Adds up to n distinct wrong candidates of the same kind to each entity,
// property and class mention, each scored ratio times the mention's best
// score. Literal mentions are left alone.
Linking AddDistractors(const Linking& linking, const DistractorPool& pool,
                       std::size_t n, double ratio, std::mt19937_64& rng);

// JSON array of {mention, kind, begin, end, candidates: [{symbol, score}]}.
std::string LinkingToJson(const Linking& linking);
Linking LinkingFromJson(std::string_view text);

}  // namespace qgen

#endif  // QGEN_LINKING_H_
