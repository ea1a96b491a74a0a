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

// Dataset loading, cross-validation and end-to-end metrics.

#ifndef QGEN_EVAL_H_
#define QGEN_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qgen/grounding.h"
#include "qgen/kb.h"
#include "qgen/linking.h"
#include "qgen/merger.h"
#include "qgen/mining.h"
#include "qgen/predictor.h"
#include "qgen/ranker.h"

namespace qgen {

struct Dataset {
  std::string name;
  std::vector<TrainingPair> pairs;
  std::vector<std::string> ids;  // parallel to pairs
  std::size_t skipped = 0;
  std::vector<std::string> errors;  // one per skipped record
};

// JSON array of {question, sparql, id?, mentions?}. A mention is
// {symbol, kind?, begin, end} or {symbol, kind?, mention} (located by
// search). Without mentions the gazetteer, if any, supplies them. Records
// that fail to parse are skipped and reported, not fatal.
Dataset ParseDataset(std::string_view json_text, std::string name,
                     const PrefixTable& prefixes = PrefixTable::Default(),
                     const Gazetteer* gazetteer = nullptr);
Dataset LoadDataset(const std::string& path,
                    const PrefixTable& prefixes = PrefixTable::Default(),
                    const Gazetteer* gazetteer = nullptr);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

// k folds whose test parts partition the pairs. Each fold tests on one
// part, develops on half of the next part and trains on the rest (70/10/20
// for k = 5). With stratify, pairs of one structure are spread evenly over
// the parts.
std::vector<Fold> MakeFolds(const std::vector<TrainingPair>& pairs,
                            std::size_t k, std::uint64_t seed,
                            bool stratify = true);

// Set F1 over answer elements. Two empty sets score 1 only when the gold
// query is empty by construction.
double AnswerF1(const AnswerSet& predicted, const AnswerSet& gold,
                bool gold_empty_by_construction = false);

enum class Setting { kFull, kRankWithoutSub, kRankWithSub, kMergeOnly };
std::string_view SettingName(Setting setting);
std::optional<Setting> SettingFromName(std::string_view name);

enum class PredictorKind { kBiLstm, kBagOfWords, kOracle };
std::string_view PredictorKindName(PredictorKind kind);
std::optional<PredictorKind> PredictorKindFromName(std::string_view name);

// Trained state for one fold.
struct Model {
  SubstructureCatalog catalog;
  PredictorSet predictors;
  StructureClassifier classifier;  // only for kRankWithoutSub
};

// Containment indicators of the gold query: the ideal predictor.
ProbabilityMap OracleProbabilities(const QueryGraph& gold,
                                   const SubstructureCatalog& catalog);

// Candidate structures for one question in rank order. `distribution` is
// the classifier output and is only read for kRankWithoutSub.
std::vector<ScoredStructure> RankForSetting(
    Setting setting, const ProbabilityMap& probs,
    const std::vector<double>& distribution, const SubstructureCatalog& catalog,
    const MergeConfig& merge, MergeTrace* trace = nullptr);

struct EvalConfig {
  Setting setting = Setting::kFull;
  PredictorKind predictor = PredictorKind::kBiLstm;
  std::size_t gamma = 30;
  MergeConfig merge;
  TrainConfig train;
  GroundingConfig grounding;
  std::size_t folds = 5;
  // Run only the first n folds; 0 runs all.
  std::size_t max_folds = 0;
  std::uint64_t seed = 1;
  bool stratify = true;
  // Share of each fold's training part that is used.
  double train_fraction = 1.0;
  // Distractors added to every entity/property/class mention.
  std::size_t distractors = 0;
  double distractor_ratio = 0.9;
};

struct QuestionRecord {
  std::size_t fold = 0;
  std::string id;
  std::string question;
  std::string gold_query;
  std::string predicted_query;  // empty when nothing was generated
  std::vector<std::string> gold_answers;
  std::vector<std::string> predicted_answers;
  double f1 = 0;
  bool hit_at_1 = false;
  bool hit_at_k = false;
  bool complex = false;
  bool structure_in_train = false;
};

struct FoldMetrics {
  std::size_t questions = 0;
  double f1 = 0;
  double precision_at_1 = 0;
  double precision_at_k = 0;
};

struct MeanStd {
  double mean = 0;
  double stdev = 0;
};

struct EvalReport {
  std::string setting;
  std::string predictor;
  std::size_t top_k = 5;
  std::vector<QuestionRecord> records;
  std::vector<FoldMetrics> folds;
  MeanStd f1;
  MeanStd precision_at_1;
  MeanStd precision_at_k;
  // Questions with at least two triples or an aggregate.
  std::size_t complex_questions = 0;
  double complex_f1 = 0;

  // Recomputes fold and summary metrics from the records; true if they
  // agree with the stored ones.
  bool Verify() const;
  std::string ToJson() const;
  std::string Summary() const;
};

// Complex if the query has at least two triples or any aggregation.
bool IsComplex(const QueryGraph& query);

MeanStd Summarize(const std::vector<double>& values);

EvalReport RunPipeline(const Dataset& dataset, const KnowledgeBase& kb,
                       const EvalConfig& config);

// Fills the aggregate fields of a report from its records.
void ComputeMetrics(EvalReport& report, std::size_t folds);

}  // namespace qgen

#endif  // QGEN_EVAL_H_
