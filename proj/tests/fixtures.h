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

// Synthetic fixtures shared by the unit tests and the acceptance binary.

#ifndef QGEN_TESTS_FIXTURES_H_
#define QGEN_TESTS_FIXTURES_H_

#include <random>
#include <string>
#include <vector>

#include "qgen/mining.h"
#include "qgen/sparql.h"
#include "test_graphs.h"

namespace qgen::testing {

// Training data: films with one constraint plus a type, simple lookups and
// counts. The gold query (a film with two constraints) never occurs whole.
struct PlantedMerge {
  std::vector<TrainingPair> pairs;
  QueryGraph gold;
};

inline PlantedMerge MakePlantedMerge() {
  PlantedMerge m;
  auto add = [&](const QueryGraph& q, int n) {
    for (int i = 0; i < n; ++i) m.pairs.push_back({"", q, {}});
  };
  add(G({{"?x", "ISA", "#Film"}, {"?x", "director", "D"}}, "?x"), 5);
  add(G({{"?x", "starring", "A"}}, "?x"), 4);
  add(G({{"A", "spouse", "?x"}}, "?x"), 4);
  add(G({{"?x", "ISA", "#Film"}, {"?x", "COUNT", "?c"}}, "?c"), 4);
  m.gold = G({{"?x", "ISA", "#Film"},
              {"?x", "director", "D"},
              {"?x", "starring", "A"}},
             "?x");
  return m;
}

// Questions whose structure is announced by a few template words hidden
// among random filler. Entity names are marked as mentions.
inline std::vector<TrainingPair> KeywordQuestions(std::uint64_t seed,
                                                  std::size_t n) {
  struct Template {
    std::vector<std::string> words;  // "@" marks an entity slot
    std::string sparql;              // "@0", "@1" are the entities
  };
  const std::vector<Template> templates = {
      {{"who", "directed", "@"}, "SELECT ?x WHERE { :@0 :director ?x }"},
      {{"films", "by", "director", "@"},
       "SELECT ?x WHERE { ?x :director :@0 }"},
      {{"how", "many", "films", "did", "@", "direct"},
       "SELECT (COUNT(?x) AS ?c) WHERE { ?x a :Film . ?x :director :@0 }"},
      {{"films", "starring", "@", "directed", "by", "@"},
       "SELECT ?x WHERE { ?x :starring :@0 . ?x :director :@1 }"},
      {{"birthplace", "of", "the", "director", "of", "@"},
       "SELECT ?x WHERE { :@0 :director ?y . ?y :birthPlace ?x }"},
      {{"tallest", "person", "born", "in", "@"},
       "SELECT ?x WHERE { ?x :birthPlace :@0 . ?x :height ?h } "
       "ORDER BY DESC(?h) LIMIT 1"},
      {{"average", "height", "of", "people", "born", "in", "@"},
       "SELECT (AVG(?h) AS ?a) WHERE { ?x :birthPlace :@0 . ?x :height ?h }"},
  };
  const std::vector<std::string> filler = {
      "please", "tell", "me", "the", "a", "what", "is", "known", "about",
      "now", "i", "wonder", "so", "list", "show", "quickly", "again", "all"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_filler(0, filler.size() - 1);
  std::uniform_int_distribution<int> num_filler(0, 4);
  std::uniform_int_distribution<int> pick_entity(0, 199);

  std::vector<TrainingPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Template& t = templates[i % templates.size()];
    std::vector<std::string> words = t.words;
    for (int k = num_filler(rng); k > 0; --k) {
      std::uniform_int_distribution<std::size_t> at(0, words.size());
      words.insert(words.begin() + static_cast<long>(at(rng)),
                   filler[pick_filler(rng)]);
    }
    TrainingPair pair;
    std::string sparql = t.sparql;
    int slot = 0;
    for (const std::string& w : words) {
      if (!pair.question.empty()) pair.question += ' ';
      if (w != "@") {
        pair.question += w;
        continue;
      }
      const std::string entity = "E" + std::to_string(pick_entity(rng));
      const std::string marker = "@" + std::to_string(slot++);
      sparql.replace(sparql.find(marker), marker.size(), entity);
      pair.mentions.push_back({pair.question.size(),
                               pair.question.size() + entity.size(),
                               ":" + entity, LinkKind::kEntity});
      pair.question += entity;
    }
    pair.query = ParseQuery(sparql);
    out.push_back(std::move(pair));
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace qgen::testing

#endif  // QGEN_TESTS_FIXTURES_H_
