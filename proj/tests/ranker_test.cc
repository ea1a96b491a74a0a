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

#include <gtest/gtest.h>

#include <random>

#include "test_graphs.h"

namespace qgen {
namespace {

using testing::G;

std::vector<TrainingPair> Copies(const QueryGraph& q, int n) {
  return std::vector<TrainingPair>(n, TrainingPair{"", q, {}});
}

std::vector<TrainingPair> Concat(std::vector<std::vector<TrainingPair>> parts) {
  std::vector<TrainingPair> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const QueryGraph kForward = G({{"?x", "p", "E"}}, "?x");
const QueryGraph kBackward = G({{"E", "p", "?x"}}, "?x");

TEST(ScoreStructure, TwoSubstructureArithmetic) {
  const auto c = Mine(Concat({Copies(kForward, 3), Copies(kBackward, 3)}), 2);
  ASSERT_EQ(c.frequent().size(), 2u);
  ProbabilityMap probs = {{CanonicalKey(kForward), 0.9},
                          {CanonicalKey(kBackward), 0.2}};
  EXPECT_NEAR(ScoreStructure(kForward, probs, c), 0.9 * 0.8, 1e-12);
  EXPECT_NEAR(ScoreStructure(kBackward, probs, c), 0.1 * 0.2, 1e-12);
}

TEST(ScoreStructure, MissingProbabilityThrows) {
  const auto c = Mine(Concat({Copies(kForward, 3), Copies(kBackward, 3)}), 2);
  EXPECT_THROW(ScoreStructure(kForward, {{CanonicalKey(kForward), 0.5}}, c),
               MissingProbability);
}

TEST(ScoreStructure, IdealConditionWithoutClamping) {
  const QueryGraph count = G({{"?x", "p", "E"}, {"?x", "COUNT", "?c"}}, "?c");
  const auto c = Mine(Concat({Copies(kForward, 3), Copies(kBackward, 3),
                              Copies(count, 3)}), 0);
  for (const auto& gold : c.structures()) {
    ProbabilityMap probs;
    const auto pattern = c.ContainmentPattern(gold.representative);
    for (std::size_t j = 0; j < c.frequent().size(); ++j) {
      probs[c.frequent()[j].key] = pattern[j] ? 1.0 : 0.0;
    }
    for (const auto& other : c.structures()) {
      const double s = ScoreStructure(other.representative, probs, c, {.clamp = 0});
      if (c.ContainmentPattern(other.representative) == pattern) {
        EXPECT_EQ(s, 1.0);
      } else {
        EXPECT_EQ(s, 0.0);
      }
    }
    // The default clamp keeps every score strictly inside (0, 1).
    EXPECT_GT(ScoreStructure(gold.representative, probs, c), 0.999);
    EXPECT_LT(ScoreStructure(gold.representative, probs, c), 1.0);
  }
}

TEST(ScoreStructure, MatchesDirectProductOnFortySubstructures) {
  const QueryGraph big1 = G({{"?a", "p", "?b"}, {"?b", "q", "E"}, {"?a", "ISA", "#C"},
                             {"?a", "r", "F"}, {"?b", "COUNT", "?n"}});
  const QueryGraph big2 = G({{"?a", "p", "?b"}, {"?c", "p", "?b"}, {"?c", "s", "\"x\""},
                             {"?a", "MAXATN", "1"}, {"G", "t", "?c"}});
  const QueryGraph big3 = G({{"?a", "p", "?b"}, {"?b", "q", "?c"}, {"?c", "r", "?d"},
                             {"?d", "s", "E"}, {"?a", "ISA", "#C"}});
  const auto c = Mine(Concat({Copies(big1, 1), Copies(big2, 1), Copies(big3, 1)}), 0);
  ASSERT_GE(c.frequent().size(), 40u);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 20; ++trial) {
    ProbabilityMap probs;
    for (const auto& f : c.frequent()) probs[f.key] = u(rng);
    for (const auto& s : c.structures()) {
      const auto pattern = c.ContainmentPattern(s.representative);
      double direct = 1;
      for (std::size_t j = 0; j < pattern.size(); ++j) {
        const double p = probs.at(c.frequent()[j].key);
        direct *= pattern[j] ? p : 1 - p;
      }
      const double got = ScoreStructure(s.representative, probs, c, {.clamp = 0});
      EXPECT_NEAR(got / direct, 1.0, 1e-12);
    }
  }
}

TEST(RankExisting, SingleStructure) {
  const auto c = Mine(Copies(kForward, 2), 5);
  const auto ranked = RankExisting({}, c);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].key, CanonicalKey(kForward));
}

TEST(RankExisting, EqualPatternsTieBreakByCount) {
  const QueryGraph two = G({{"?x", "p", "E"}, {"?x", "q", "F"}}, "?x");
  const auto c = Mine(Concat({Copies(two, 2), Copies(kForward, 3)}), 2);
  ASSERT_EQ(c.frequent().size(), 1u);
  const auto ranked = RankExisting({{CanonicalKey(kForward), 0.7}}, c);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].score, ranked[1].score);
  EXPECT_EQ(ranked[0].key, CanonicalKey(kForward));
  EXPECT_EQ(ranked[0].count, 3u);
}

TEST(RankExisting, MonotoneAndOrderIndependent) {
  const QueryGraph count = G({{"?x", "p", "E"}, {"?x", "COUNT", "?c"}}, "?c");
  const QueryGraph chain = G({{"?x", "p", "?y"}, {"?y", "q", "E"}}, "?x");
  const auto c = Mine(Concat({Copies(kForward, 3), Copies(kBackward, 4),
                              Copies(count, 3), Copies(chain, 2)}), 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    ProbabilityMap probs;
    for (const auto& f : c.frequent()) probs[f.key] = u(rng);
    auto ranked = RankExisting(probs, c);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      EXPECT_GE(ranked[i - 1].score, ranked[i].score);
    }
    auto shuffled = ranked;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    SortScored(shuffled);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      EXPECT_EQ(shuffled[i].key, ranked[i].key);
    }
    // Raising a contained substructure's probability never lowers a score.
    for (const auto& s : c.structures()) {
      const auto pattern = c.ContainmentPattern(s.representative);
      for (std::size_t j = 0; j < pattern.size(); ++j) {
        if (!pattern[j]) continue;
        ProbabilityMap raised = probs;
        raised[c.frequent()[j].key] = std::min(1.0, probs[c.frequent()[j].key] + 0.1);
        EXPECT_GE(ScoreStructure(s.representative, raised, c),
                  ScoreStructure(s.representative, probs, c));
      }
    }
  }
}

TEST(RankingToJsonLines, OneLinePerStructure) {
  const auto c = Mine(Concat({Copies(kForward, 3), Copies(kBackward, 3)}), 2);
  const auto ranked = RankExisting({{CanonicalKey(kForward), 0.9},
                                    {CanonicalKey(kBackward), 0.2}}, c);
  const std::string text = RankingToJsonLines(ranked);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("\"rank\":1"), std::string::npos);
  EXPECT_NE(text.find("\"provenance\":\"existing\""), std::string::npos);
}

}  // namespace
}  // namespace qgen
