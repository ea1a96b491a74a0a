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

#include "qgen/eval.h"

#include <gtest/gtest.h>

#include <set>

namespace qgen {
namespace {

const std::string kMini = std::string(QGEN_DATA_DIR) + "/mini";

struct Mini {
  Gazetteer gazetteer = Gazetteer::FromFile(kMini + "/gazetteer.tsv");
  Dataset dataset =
      LoadDataset(kMini + "/dataset.json", PrefixTable::Default(), &gazetteer);
  KnowledgeBase kb = [] {
    KnowledgeBase kb = KnowledgeBase::FromFile(kMini + "/kb.tsv");
    kb.LoadSchemaFile(kMini + "/schema.txt");
    return kb;
  }();
};

const Mini& GetMini() {
  static const Mini* mini = new Mini();
  return *mini;
}

EvalConfig OracleConfig() {
  EvalConfig c;
  c.predictor = PredictorKind::kOracle;
  c.gamma = 2;
  return c;
}

AnswerSet Set(std::set<std::string> v) { return {std::move(v), false}; }

TEST(AnswerF1, Basics) {
  EXPECT_DOUBLE_EQ(AnswerF1(Set({"a", "b"}), Set({"a", "b"})), 1.0);
  EXPECT_DOUBLE_EQ(AnswerF1(Set({"a"}), Set({"b"})), 0.0);
  EXPECT_DOUBLE_EQ(AnswerF1(Set({"a", "b"}), Set({"b", "c"})), 0.5);
  EXPECT_DOUBLE_EQ(AnswerF1(Set({}), Set({"b"})), 0.0);
  EXPECT_DOUBLE_EQ(AnswerF1(Set({}), Set({})), 0.0);
  EXPECT_DOUBLE_EQ(AnswerF1(Set({}), Set({}), true), 1.0);
}

TEST(LoadDataset, MiniFixture) {
  const Mini& m = GetMini();
  EXPECT_EQ(m.dataset.pairs.size(), 40u);
  EXPECT_EQ(m.dataset.skipped, 0u);
  std::set<std::string> keys;
  for (const TrainingPair& p : m.dataset.pairs) {
    keys.insert(CanonicalKey(p.query).canonical);
    EXPECT_FALSE(p.mentions.empty()) << p.question;
    EXPECT_FALSE(Execute(p.query, m.kb).empty()) << p.question;
  }
  EXPECT_GE(keys.size(), 6u);
}

TEST(LoadDataset, SkipsUnsupportedRecords) {
  const Dataset d = ParseDataset(
      R"([{"question": "a", "sparql": "SELECT ?x WHERE { ?x :p :E }"},
          {"question": "b", "sparql":
             "SELECT ?x WHERE { { ?x :p :A } UNION { ?x :p :B } }"},
          {"question": "c", "sparql": "SELECT ?x WHERE { ?x :p }"},
          {"question": "Who is X?", "sparql": "SELECT ?x WHERE { ?x :p :X }",
           "mentions": [{"mention": "X", "symbol": ":X"}]}])",
      "inline");
  EXPECT_EQ(d.pairs.size(), 2u);
  EXPECT_EQ(d.skipped, 2u);
  ASSERT_EQ(d.errors.size(), 2u);
  EXPECT_NE(d.errors[0].find("unsupported"), std::string::npos);
  ASSERT_EQ(d.pairs[1].mentions.size(), 1u);
  EXPECT_EQ(d.pairs[1].mentions[0].begin, 7u);
}

TEST(MakeFolds, PartitionAndProportions) {
  const Mini& m = GetMini();
  for (bool stratify : {true, false}) {
    const auto folds = MakeFolds(m.dataset.pairs, 5, 11, stratify);
    ASSERT_EQ(folds.size(), 5u);
    std::multiset<std::size_t> tested;
    for (const Fold& f : folds) {
      tested.insert(f.test.begin(), f.test.end());
      EXPECT_EQ(f.test.size(), 8u);
      EXPECT_EQ(f.dev.size(), 4u);
      EXPECT_EQ(f.train.size(), 28u);
      std::set<std::size_t> all(f.train.begin(), f.train.end());
      all.insert(f.dev.begin(), f.dev.end());
      all.insert(f.test.begin(), f.test.end());
      EXPECT_EQ(all.size(), 40u);
    }
    EXPECT_EQ(tested.size(), 40u);
    EXPECT_EQ(std::set<std::size_t>(tested.begin(), tested.end()).size(), 40u);
  }
}

TEST(MakeFolds, Deterministic) {
  const Mini& m = GetMini();
  const auto a = MakeFolds(m.dataset.pairs, 5, 3);
  const auto b = MakeFolds(m.dataset.pairs, 5, 3);
  const auto c = MakeFolds(m.dataset.pairs, 5, 4);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].test, b[i].test);
    EXPECT_EQ(a[i].train, b[i].train);
  }
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) differs |= a[i].test != c[i].test;
  EXPECT_TRUE(differs);
}

TEST(MakeFolds, StratifiedKeepsEveryStructureInTraining) {
  const Mini& m = GetMini();
  for (const Fold& f : MakeFolds(m.dataset.pairs, 5, 1)) {
    std::set<std::string> train_keys;
    for (std::size_t i : f.train) {
      train_keys.insert(CanonicalKey(m.dataset.pairs[i].query).canonical);
    }
    for (std::size_t i : f.test) {
      EXPECT_TRUE(
          train_keys.count(CanonicalKey(m.dataset.pairs[i].query).canonical));
    }
  }
}

TEST(RunPipeline, OraclePredictorsAreExact) {
  const Mini& m = GetMini();
  const EvalReport r = RunPipeline(m.dataset, m.kb, OracleConfig());
  EXPECT_EQ(r.records.size(), 40u);
  EXPECT_DOUBLE_EQ(r.f1.mean, 1.0);
  EXPECT_DOUBLE_EQ(r.precision_at_1.mean, 1.0);
  EXPECT_TRUE(r.Verify());
  for (const QuestionRecord& q : r.records) {
    EXPECT_EQ(q.f1, 1.0) << q.question << " -> " << q.predicted_query;
  }
}

TEST(RunPipeline, SameSeedSameReport) {
  const Mini& m = GetMini();
  EvalConfig c = OracleConfig();
  c.distractors = 4;
  EXPECT_EQ(RunPipeline(m.dataset, m.kb, c).ToJson(),
            RunPipeline(m.dataset, m.kb, c).ToJson());
}

TEST(RunPipeline, FullAtLeastMergeOnly) {
  const Mini& m = GetMini();
  EvalConfig c = OracleConfig();
  const double full = RunPipeline(m.dataset, m.kb, c).f1.mean;
  c.setting = Setting::kMergeOnly;
  const double merge_only = RunPipeline(m.dataset, m.kb, c).f1.mean;
  EXPECT_GE(full, merge_only);
}

TEST(RunPipeline, NoisyLinkingKeepsCorrectQueryInTopFive) {
  const Mini& m = GetMini();
  EvalConfig c = OracleConfig();
  c.distractors = 4;
  const EvalReport r = RunPipeline(m.dataset, m.kb, c);
  EXPECT_GE(r.precision_at_k.mean, 0.85);
}

TEST(RunPipeline, OracleStructureClassifier) {
  const Mini& m = GetMini();
  EvalConfig c = OracleConfig();
  c.setting = Setting::kRankWithoutSub;
  EXPECT_DOUBLE_EQ(RunPipeline(m.dataset, m.kb, c).f1.mean, 1.0);
}

TEST(RunPipeline, RejectsConflictingConfig) {
  const Mini& m = GetMini();
  EvalConfig c = OracleConfig();
  c.train_fraction = 0;
  EXPECT_THROW(RunPipeline(m.dataset, m.kb, c), std::invalid_argument);
  c = OracleConfig();
  c.setting = Setting::kRankWithoutSub;
  c.predictor = PredictorKind::kBagOfWords;
  EXPECT_THROW(RunPipeline(m.dataset, m.kb, c), std::invalid_argument);
}

TEST(EvalReport, VerifyDetectsTampering) {
  const Mini& m = GetMini();
  EvalConfig c = OracleConfig();
  c.max_folds = 2;
  EvalReport r = RunPipeline(m.dataset, m.kb, c);
  EXPECT_EQ(r.folds.size(), 2u);
  EXPECT_TRUE(r.Verify());
  r.records[0].f1 = 0.25;
  EXPECT_FALSE(r.Verify());
}

TEST(Summarize, SampleStdev) {
  const MeanStd m = Summarize({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.0);
  EXPECT_DOUBLE_EQ(m.stdev, 1.0);
  EXPECT_DOUBLE_EQ(Summarize({0.5}).stdev, 0.0);
}

}  // namespace
}  // namespace qgen
