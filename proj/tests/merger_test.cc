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

#include "qgen/merger.h"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.h"
#include "graph_oracle.h"
#include "test_graphs.h"

namespace qgen {
namespace {

using testing::G;

bool ContainsKey(const std::vector<QueryGraph>& gs, const QueryGraph& want) {
  const StructureKey k = CanonicalKey(want);
  return std::any_of(gs.begin(), gs.end(),
                     [&](const QueryGraph& g) { return CanonicalKey(g) == k; });
}

TEST(MergePair, CountIsaWithSimpleTripleGivesHowManyMovies) {
  const auto merged = MergePair(testing::HowManyMoviesSubstructure(),
                                G({{"?v", "Prop1", "Ent1"}}));
  EXPECT_TRUE(ContainsKey(merged, testing::HowManyMoviesQuery()));
}

TEST(MergePair, NothingUnifiableLeavesDisjointUnion) {
  const QueryGraph a = G({{"Ent1", "Prop1", "\"lit\""}});
  const QueryGraph b = G({{"?v", "ISA", "#Class1"}});
  const auto merged = MergePair(a, b);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_FALSE(merged[0].IsConnected());
  EXPECT_EQ(merged[0].num_triples(), 2u);
}

TEST(MergePair, AggregateResultsNeverUnify) {
  const QueryGraph a = G({{"?x", "COUNT", "?c"}});
  for (const QueryGraph& m : MergePair(a, a, 3, 1)) {
    std::size_t aggregates = 0;
    for (const Vertex& v : m.vertices()) {
      aggregates += v.kind == VertexKind::kAggregateResult;
    }
    EXPECT_EQ(aggregates, 2u) << DebugString(m);
  }
}

TEST(MergePair, RankingLiteralsUnifyOnlyWhenEqual) {
  const QueryGraph a = G({{"?x", "MAXATN", "1"}});
  const QueryGraph b = G({{"?y", "MAXATN", "2"}});
  for (const QueryGraph& m : MergePair(a, b)) EXPECT_EQ(m.num_vertices() >= 3, true);
  // Equal N may share the literal vertex.
  bool shared = false;
  for (const QueryGraph& m : MergePair(a, a)) shared |= m.num_vertices() == 3 && m.num_triples() == 2;
  EXPECT_TRUE(shared);
}

// Exhaustive oracle: every partial vertex matching and every partial label
// matching, built by hand from string triples and deduplicated by brute force.
std::vector<QueryGraph> OracleMerges(const std::array<std::string, 3>& ta,
                                     const std::array<std::string, 3>& tb) {
  std::vector<QueryGraph> reps;
  auto kind = [](const std::string& s) {
    return s[0] == '?' ? 'v' : s[0] == '#' ? 'c' : s[0] == '"' ? 'l' : 'e';
  };
  const std::vector<std::string> va = {ta[0], ta[2]};
  const std::vector<std::string> vb = {tb[0], tb[2]};
  // choice[k] for vb[k]: -1 keep apart, else index into va.
  for (int c0 = -1; c0 < 2; ++c0) {
    for (int c1 = -1; c1 < 2; ++c1) {
      if (c0 >= 0 && c0 == c1) continue;
      const int choice[2] = {c0, c1};
      bool ok = true;
      std::array<std::string, 3> nb = {"", tb[1], ""};
      for (int k = 0; k < 2; ++k) {
        std::string renamed = vb[k];
        if (choice[k] >= 0) {
          ok &= kind(vb[k]) == kind(va[choice[k]]);
          renamed = va[choice[k]];
        } else {
          renamed = renamed[0] == '?' || renamed[0] == '#' || renamed[0] == '"'
                        ? std::string(1, renamed[0]) + "b_" + renamed.substr(1)
                        : "b_" + renamed;
        }
        nb[k == 0 ? 0 : 2] = renamed;
      }
      if (!ok) continue;
      const bool builtin_a = BuiltInFromName(ta[1]).has_value();
      const bool builtin_b = BuiltInFromName(tb[1]).has_value();
      for (bool unify_label : {false, true}) {
        if (unify_label && (builtin_a || builtin_b)) continue;
        nb[1] = builtin_b ? tb[1] : unify_label ? ta[1] : "b_" + tb[1];
        const QueryGraph g = G({ta, nb});
        const bool known = std::any_of(reps.begin(), reps.end(), [&](const auto& r) {
          return oracle::BruteForceEquivalent(r, g);
        });
        if (!known) reps.push_back(g);
      }
    }
  }
  return reps;
}

TEST(MergePair, OneTriplePairsMatchExhaustiveOracle) {
  const std::vector<std::array<std::string, 3>> shapes = {
      {"?x", "P", "E"}, {"E", "P", "?x"}, {"?x", "P", "?y"},
      {"?x", "P", "\"l\""}, {"?x", "ISA", "#C"}};
  for (const auto& a : shapes) {
    for (auto b : shapes) {
      for (auto& t : b) {
        if (t == "P") t = "Q";
        else if (t == "E") t = "F";
      }
      const auto got = MergePair(G({a}), G({b}));
      const auto want = OracleMerges(a, b);
      EXPECT_EQ(got.size(), want.size()) << a[0] << a[1] << a[2] << " + " << b[0] << b[1] << b[2];
      for (const QueryGraph& w : want) {
        EXPECT_EQ(std::count_if(got.begin(), got.end(), [&](const auto& g) {
                    return oracle::BruteForceEquivalent(g, w);
                  }), 1) << DebugString(w);
      }
    }
  }
}

TEST(MergePair, OutputsContainBothInputs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const QueryGraph a = ToStructure(oracle::RandomConnectedGraph(rng, 3));
    const QueryGraph b = ToStructure(oracle::RandomConnectedGraph(rng, 2));
    const auto merged = MergePair(a, b);
    std::set<std::string> keys;
    for (const QueryGraph& m : merged) {
      EXPECT_TRUE(IsSubstructure(a, m)) << DebugString(a) << " in " << DebugString(m);
      EXPECT_TRUE(IsSubstructure(b, m)) << DebugString(b) << " in " << DebugString(m);
      EXPECT_TRUE(keys.insert(CanonicalKey(m).canonical).second);
    }
  }
}

struct PlantedMerge {
  SubstructureCatalog catalog;
  QueryGraph gold;
};

PlantedMerge MakePlantedMerge() {
  testing::PlantedMerge f = testing::MakePlantedMerge();
  return {Mine(f.pairs, 2), f.gold};
}

ProbabilityMap PerfectProbabilities(const SubstructureCatalog& c, const QueryGraph& gold) {
  ProbabilityMap probs;
  for (const auto& f : c.frequent()) {
    probs[f.key] = IsSubstructure(f.representative, gold) ? 1.0 : 0.0;
  }
  return probs;
}

TEST(MergeSubstructures, PlantedGoldIsProduced) {
  const PlantedMerge m = MakePlantedMerge();
  ASSERT_EQ(m.catalog.FindStructure(CanonicalKey(m.gold)), nullptr);
  MergeConfig config;
  MergeTrace trace;
  const auto out = MergeSubstructures(PerfectProbabilities(m.catalog, m.gold),
                                      m.catalog, config, &trace);
  const StructureKey gold = CanonicalKey(m.gold);
  EXPECT_TRUE(std::any_of(out.begin(), out.end(),
                          [&](const auto& s) { return s.key == gold; }));
  EXPECT_EQ(trace.rounds.size(), 3u);
  EXPECT_NE(trace.ToJson().find("rounds"), std::string::npos);
  std::set<std::string> keys;
  for (const auto& s : out) {
    EXPECT_TRUE(SatisfiesRestrictions(s.representative, config));
    EXPECT_GT(s.score, config.theta);
    EXPECT_EQ(s.provenance, Provenance::kMerged);
    EXPECT_TRUE(keys.insert(s.key.canonical).second);
  }
  for (const auto& s : trace.rounds[0]) EXPECT_TRUE(keys.count(s.key.canonical));
}

TEST(MergeSubstructures, NoPositivePredictionsKeepsSeedsOnly) {
  const PlantedMerge m = MakePlantedMerge();
  ProbabilityMap probs;
  for (const auto& f : m.catalog.frequent()) probs[f.key] = 0.5;
  MergeConfig config;
  config.theta = 0.0;
  MergeTrace trace;
  const auto out = MergeSubstructures(probs, m.catalog, config, &trace);
  EXPECT_EQ(out.size(), trace.rounds[0].size());
  EXPECT_TRUE(trace.rounds[1].empty());
  EXPECT_EQ(out.size(), m.catalog.frequent().size());
}

TEST(MergeSubstructures, RestrictionsAreEnforced) {
  const PlantedMerge m = MakePlantedMerge();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    ProbabilityMap probs;
    for (const auto& f : m.catalog.frequent()) probs[f.key] = u(rng);
    MergeConfig config;
    config.theta = 0.01;
    config.tau = 3;
    config.delta = 1;
    for (const auto& s : MergeSubstructures(probs, m.catalog, config)) {
      EXPECT_TRUE(s.representative.IsConnected());
      EXPECT_LE(s.representative.num_triples(), 3u);
      EXPECT_LE(s.representative.AggregationCount(), 1u);
      EXPECT_GT(s.score, 0.01);
    }
  }
}

TEST(SatisfiesRestrictions, DeltaCanExcludeRanking) {
  const QueryGraph g = G({{"?x", "MAXATN", "1"}, {"?x", "COUNT", "?c"}, {"?x", "MINATN", "2"}});
  MergeConfig config;
  EXPECT_FALSE(SatisfiesRestrictions(g, config));
  config.delta_counts_ranking = false;
  EXPECT_TRUE(SatisfiesRestrictions(g, config));
}

}  // namespace
}  // namespace qgen
