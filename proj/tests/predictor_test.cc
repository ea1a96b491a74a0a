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

#include "qgen/predictor.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "bilstm_oracle.h"
#include "gradient_check.h"
#include "test_graphs.h"

namespace qgen {
namespace {

Mention At(std::string_view text, std::string_view surface) {
  const std::size_t begin = text.find(surface);
  return {begin, begin + surface.size(), "", LinkKind::kEntity};
}

TEST(Preprocess, ReplacesMentions) {
  const std::string q = "How many movies did Stanley Kubrick direct?";
  EXPECT_EQ(Preprocess(q, {At(q, "Stanley Kubrick")}),
            (TokenSequence{"how", "many", "movies", "did", "<entity>", "direct"}));
}

TEST(Preprocess, NoMentions) {
  EXPECT_EQ(Preprocess("Who is the spouse of X, Y?", {}),
            (TokenSequence{"who", "is", "the", "spouse", "of", "x", "y"}));
}

TEST(Preprocess, AdjacentMentions) {
  const std::string q = "Is AB married?";
  EXPECT_EQ(Preprocess(q, {{3, 4, "", LinkKind::kEntity},
                           {4, 5, "", LinkKind::kEntity}}),
            (TokenSequence{"is", "<entity>", "<entity>", "married"}));
}

TEST(Preprocess, RejectsBadSpans) {
  EXPECT_THROW(Preprocess("abc", {{1, 9, "", LinkKind::kEntity}}),
               std::out_of_range);
  EXPECT_THROW(Preprocess("abcdef", {{0, 3, "", LinkKind::kEntity},
                                     {2, 4, "", LinkKind::kEntity}}),
               std::invalid_argument);
}

TEST(Vocabulary, ReservedTokensAndUnknowns) {
  const Vocabulary v = Vocabulary::Build({{"a", "b", "a"}});
  EXPECT_EQ(v.Index("<unk>"), 0);
  EXPECT_EQ(v.Index("<entity>"), 1);
  EXPECT_EQ(v.Index("zzz"), 0);
  EXPECT_TRUE(v.IsSingleton(v.Index("b")));
  EXPECT_FALSE(v.IsSingleton(v.Index("a")));
  EXPECT_EQ(v.Encode({}), std::vector<int>{0});
}

class BiLstmTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng_{42};
};

TEST_F(BiLstmTest, ZeroOutputLayerGivesOneHalf) {
  BiLstmParams p = testing::RandomParams(rng_, 6, 4, 4, 1);
  p.out_w.setZero();
  p.out_b.setZero();
  EXPECT_DOUBLE_EQ(Sigmoid(AttentionBiLstm(p).Forward({2, 3, 4}).logits(0)), 0.5);
}

TEST_F(BiLstmTest, SingleTokenAttentionIsOne) {
  const AttentionBiLstm m(testing::RandomParams(rng_, 6, 4, 4, 1));
  const auto r = m.Forward({3});
  ASSERT_EQ(r.attention.size(), 1);
  EXPECT_DOUBLE_EQ(r.attention(0), 1.0);
}

TEST_F(BiLstmTest, ForwardMatchesReference) {
  for (int trial = 0; trial < 20; ++trial) {
    const BiLstmParams p = testing::RandomParams(rng_, 7, 5, 3, trial % 2 ? 1 : 3);
    std::vector<int> ids = {trial % 7, (trial + 3) % 7, (trial + 5) % 7};
    const auto got = AttentionBiLstm(p).Forward(ids);
    const auto want = oracle::ReferenceForward(p, ids);
    for (std::size_t c = 0; c < want.logits.size(); ++c) {
      EXPECT_NEAR(got.logits(c), want.logits[c], 1e-10);
    }
    for (std::size_t t = 0; t < ids.size(); ++t) {
      EXPECT_NEAR(got.attention(t), want.attention[t], 1e-10);
    }
    EXPECT_NEAR(Sigmoid(got.logits(0)), oracle::Sig(want.logits[0]), 1e-10);
  }
}

TEST_F(BiLstmTest, BatchedLossMatchesReference) {
  const BiLstmParams p = testing::RandomParams(rng_, 9, 4, 4, 1);
  const std::vector<std::vector<int>> batch = {{1, 2, 3}, {4, 5, 6}, {7, 8, 0}};
  const std::vector<int> labels = {1, 0, 1};
  EXPECT_NEAR(AttentionBiLstm(p).Loss(batch, labels, nullptr),
              oracle::ReferenceBce(p, batch, labels), 1e-10);
}

TEST_F(BiLstmTest, LossAtOneHalfIsNLn2) {
  BiLstmParams p = testing::RandomParams(rng_, 5, 4, 4, 1);
  p.out_w.setZero();
  p.out_b.setZero();
  const double loss = AttentionBiLstm(p).Loss({{1, 2}, {3, 4}, {0, 1}, {2, 2}},
                                              {1, 0, 0, 1}, nullptr);
  EXPECT_NEAR(loss, 4 * std::log(2.0), 1e-12);
}

TEST_F(BiLstmTest, ConfidentCorrectLossNearZero) {
  BiLstmParams p = testing::RandomParams(rng_, 5, 4, 4, 1);
  p.out_w.setZero();
  p.out_b(0, 0) = 40;
  EXPECT_LT(AttentionBiLstm(p).Loss({{1}, {2}}, {1, 1}, nullptr), 1e-15);
  p.out_b(0, 0) = -40;
  EXPECT_LT(AttentionBiLstm(p).Loss({{1}, {2}}, {0, 0}, nullptr), 1e-15);
  // The softplus form stays finite on extreme logits.
  p.out_b(0, 0) = 1000;
  EXPECT_NEAR(AttentionBiLstm(p).Loss({{1}}, {0}, nullptr), 1000, 1e-9);
}

TEST_F(BiLstmTest, GradientCheckBinary) {
  const BiLstmParams p = testing::RandomParams(rng_, 6, 4, 4, 1);
  const auto errors = testing::GradientErrors(p, {{1, 2, 3, 4, 5}, {5, 4, 0, 2, 1}},
                                              {1, 0});
  for (const auto& [name, err] : errors) EXPECT_LE(err, 1e-3) << name;
  EXPECT_EQ(errors.size(), 12u);
}

TEST_F(BiLstmTest, GradientCheckSoftmax) {
  const BiLstmParams p = testing::RandomParams(rng_, 6, 4, 4, 3);
  const auto errors = testing::GradientErrors(p, {{1, 2, 3}, {5, 4, 0}}, {2, 0});
  for (const auto& [name, err] : errors) EXPECT_LE(err, 1e-3) << name;
}

TEST_F(BiLstmTest, AttentionSumsToOne) {
  const AttentionBiLstm m(testing::RandomParams(rng_, 20, 4, 4, 1));
  std::uniform_int_distribution<int> len(1, 12), tok(0, 19);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> ids(len(rng_));
    for (int& id : ids) id = tok(rng_);
    const auto a = m.Forward(ids).attention;
    EXPECT_NEAR(a.sum(), 1.0, 1e-6);
    EXPECT_GE(a.minCoeff(), 0.0);
  }
}

TEST_F(BiLstmTest, RejectsOutOfVocabularyIds) {
  const AttentionBiLstm m(testing::RandomParams(rng_, 3, 4, 4, 1));
  EXPECT_THROW(m.Forward({5}), std::out_of_range);
  EXPECT_THROW(m.Forward({}), std::invalid_argument);
}

// Keyword fixture: label is 1 iff "alpha" occurs.
std::vector<LabeledSequence> KeywordData(std::mt19937_64& rng, int n) {
  const std::vector<std::string> filler = {"what", "is", "the", "of", "a",
                                           "<entity>", "which", "show"};
  std::vector<LabeledSequence> out;
  std::uniform_int_distribution<int> len(3, 7), pick(0, filler.size() - 1);
  for (int i = 0; i < n; ++i) {
    LabeledSequence s;
    for (int k = len(rng); k > 0; --k) s.tokens.push_back(filler[pick(rng)]);
    s.label = i % 2;
    if (s.label) s.tokens.insert(s.tokens.begin() + pick(rng) % s.tokens.size(), "alpha");
    out.push_back(std::move(s));
  }
  return out;
}

TrainConfig Small() {
  TrainConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 8;
  c.epochs = 30;
  c.learning_rate = 1e-2;
  c.threads = 1;
  return c;
}

TEST(TrainBinary, LearnsKeyword) {
  std::mt19937_64 rng(3);
  const auto train = KeywordData(rng, 200);
  const auto dev = KeywordData(rng, 40);
  for (PredictorType type : {PredictorType::kBiLstm, PredictorType::kBagOfWords}) {
    TrainStats stats;
    auto model = TrainBinary(train, dev, type, Small(), &stats);
    EXPECT_GE(stats.dev_accuracy, 0.95) << model->Type();
    EXPECT_GT(model->Probability({"what", "alpha", "is"}), 0.9) << model->Type();
    EXPECT_LT(model->Probability({"what", "is", "the"}), 0.1) << model->Type();
  }
}

TEST(TrainBinary, ZeroLearningRateKeepsParameters) {
  std::mt19937_64 rng(3);
  const auto train = KeywordData(rng, 20);
  TrainConfig c = Small();
  c.learning_rate = 0;
  c.epochs = 1;
  auto model = TrainBinary(train, {}, PredictorType::kBiLstm, c);
  const auto& trained = dynamic_cast<const BiLstmPredictor&>(*model);
  std::mt19937_64 init(c.seed);
  BiLstmParams fresh(static_cast<int>(trained.vocab().size()), c.embed_dim,
                     c.hidden_dim, 1);
  fresh.InitRandom(init);
  const auto a = trained.model().params().Tensors();
  const auto b = static_cast<const BiLstmParams&>(fresh).Tensors();
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(*a[k].second, *b[k].second) << a[k].first;
  }
}

TEST(TrainBinary, DegenerateLabelsGiveClampedConstant) {
  std::vector<LabeledSequence> all_pos = {{{"a"}, 1}, {{"b"}, 1}};
  TrainStats stats;
  auto m = TrainBinary(all_pos, {}, PredictorType::kBiLstm, Small(), &stats);
  EXPECT_TRUE(stats.degenerate);
  EXPECT_DOUBLE_EQ(m->Probability({"x"}), 0.95);
  std::vector<LabeledSequence> all_neg = {{{"a"}, 0}};
  EXPECT_DOUBLE_EQ(TrainBinary(all_neg, {}, PredictorType::kBagOfWords, Small())
                       ->Probability({}),
                   0.05);
}

TEST(TrainBinary, DeterministicForFixedSeed) {
  std::mt19937_64 rng(5);
  const auto train = KeywordData(rng, 60);
  TrainConfig c = Small();
  c.epochs = 3;
  auto a = TrainBinary(train, {}, PredictorType::kBiLstm, c);
  auto b = TrainBinary(train, {}, PredictorType::kBiLstm, c);
  const auto& pa = dynamic_cast<const BiLstmPredictor&>(*a).model().params();
  const auto& pb = dynamic_cast<const BiLstmPredictor&>(*b).model().params();
  const auto ta = pa.Tensors();
  const auto tb = pb.Tensors();
  for (std::size_t k = 0; k < ta.size(); ++k) EXPECT_EQ(*ta[k].second, *tb[k].second);
}

std::vector<TrainingPair> KeywordPairs(int n) {
  // Questions mentioning "count" have a COUNT structure.
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < n; ++i) {
    const std::string e = "E" + std::to_string(i % 5);
    if (i % 2) {
      pairs.push_back({"how many things count " + e, testing::G({{"?x", "p", e}, {"?x", "COUNT", "?c"}}, "?c"), {}});
    } else {
      pairs.push_back({"which thing has " + e, testing::G({{"?x", "p", e}}, "?x"), {}});
    }
  }
  return pairs;
}

TEST(TrainPredictors, IndependentOfThreadCount) {
  const auto pairs = KeywordPairs(40);
  const SubstructureCatalog catalog = Mine(pairs, 5);
  ASSERT_EQ(catalog.frequent().size(), 3u);
  TrainConfig c = Small();
  c.epochs = 4;
  const PredictorSet serial = TrainPredictors(pairs, {}, catalog, PredictorType::kBiLstm, c);
  c.threads = 3;
  const PredictorSet parallel = TrainPredictors(pairs, {}, catalog, PredictorType::kBiLstm, c);
  const TokenSequence q = {"how", "many", "count"};
  EXPECT_EQ(serial.PredictAll(q), parallel.PredictAll(q));
  // One of the three substructures occurs in every query.
  int degenerate = 0;
  for (const auto& m : serial.models()) degenerate += m.stats.degenerate;
  EXPECT_EQ(degenerate, 1);
}

TEST(PredictorSet, EmptySetPredictsNothing) {
  EXPECT_TRUE(PredictorSet().PredictAll({"a"}).empty());
}

TEST(PredictorSet, SaveLoadRoundTrip) {
  const auto pairs = KeywordPairs(30);
  const SubstructureCatalog catalog = Mine(pairs, 5);
  TrainConfig c = Small();
  c.epochs = 2;
  const auto dir = std::filesystem::temp_directory_path() / "qgen_models_test";
  for (PredictorType type : {PredictorType::kBiLstm, PredictorType::kBagOfWords}) {
    const PredictorSet set = TrainPredictors(pairs, {}, catalog, type, c);
    set.Save(dir.string(), c);
    const PredictorSet loaded = PredictorSet::Load(dir.string());
    const TokenSequence q = {"how", "many", "count", "zzz"};
    const auto a = set.PredictAll(q);
    const auto b = loaded.PredictAll(q);
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [k, p] : a) {
      EXPECT_NEAR(b.at(k), p, 1e-12);
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
    std::filesystem::remove_all(dir);
  }
}

TEST(StructureClassifier, PicksKeywordStructure) {
  const auto pairs = KeywordPairs(60);
  const SubstructureCatalog catalog = Mine(pairs, 5);
  TrainConfig c = Small();
  const StructureClassifier clf = TrainStructureClassifier(pairs, {}, catalog, c);
  ASSERT_EQ(clf.classes().size(), 2u);
  const auto dist = clf.Distribution({"how", "many", "things", "count", "<entity>"});
  const StructureKey count_key = CanonicalKey(testing::G({{"?x", "p", "E"}, {"?x", "COUNT", "?c"}}));
  const std::size_t best = std::max_element(dist.begin(), dist.end()) - dist.begin();
  EXPECT_EQ(clf.classes()[best], count_key);
  EXPECT_NEAR(dist[0] + dist[1], 1.0, 1e-12);
}

}  // namespace
}  // namespace qgen
