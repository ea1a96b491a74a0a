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

// Per-substructure probability predictors and the structure classifier used
// by the rank-without-substructures ablation.

#ifndef QGEN_PREDICTOR_H_
#define QGEN_PREDICTOR_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qgen/bilstm.h"
#include "qgen/mining.h"
#include "qgen/query_graph.h"

namespace qgen {

inline constexpr std::string_view kEntityToken = "<entity>";
inline constexpr std::string_view kUnknownToken = "<unk>";

using TokenSequence = std::vector<std::string>;

// Lowercases, strips punctuation and splits on whitespace; every mention of
// kind Entity collapses to one kEntityToken. Spans are byte offsets and must
// not overlap.
TokenSequence Preprocess(std::string_view question,
                         const std::vector<Mention>& mentions);

class Vocabulary {
 public:
  // Index 0 is kUnknownToken and index 1 is kEntityToken.
  Vocabulary();
  static Vocabulary Build(const std::vector<TokenSequence>& corpus);

  int Index(std::string_view token) const;
  std::vector<int> Encode(const TokenSequence& tokens) const;
  bool IsSingleton(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocabulary FromTokens(std::vector<std::string> tokens);

 private:
  std::vector<std::string> tokens_;
  std::vector<int> counts_;
  std::unordered_map<std::string, int> index_;
};

struct TrainConfig {
  int embed_dim = 100;
  int hidden_dim = 128;
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 32;
  int patience = 5;
  // Dev-loss improvements smaller than this count as no improvement.
  double min_delta = 1e-4;
  std::uint64_t seed = 1;
  // Chance that a training-set singleton is replaced by kUnknownToken.
  double unk_replace = 0.5;
  // Concurrent training jobs; 0 picks the hardware concurrency.
  int threads = 0;
};

// Estimates Pr[substructure | question] from a token sequence.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double Probability(const TokenSequence& tokens) const = 0;
  virtual std::string Type() const = 0;
};

enum class PredictorType { kBiLstm, kBagOfWords };

class BiLstmPredictor : public Predictor {
 public:
  BiLstmPredictor(Vocabulary vocab, AttentionBiLstm model)
      : vocab_(std::move(vocab)), model_(std::move(model)) {}
  double Probability(const TokenSequence& tokens) const override;
  std::string Type() const override { return "bilstm"; }
  // Attention weights over tokens (an empty sequence reads as one <unk>).
  Eigen::VectorXd Attention(const TokenSequence& tokens) const;

  const Vocabulary& vocab() const { return vocab_; }
  const AttentionBiLstm& model() const { return model_; }

 private:
  Vocabulary vocab_;
  AttentionBiLstm model_;
};

// Logistic regression over binary token-presence features.
class BagOfWordsPredictor : public Predictor {
 public:
  BagOfWordsPredictor(Vocabulary vocab, Eigen::VectorXd weights, double bias)
      : vocab_(std::move(vocab)), weights_(std::move(weights)), bias_(bias) {}
  double Probability(const TokenSequence& tokens) const override;
  std::string Type() const override { return "bow"; }

  const Vocabulary& vocab() const { return vocab_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  Vocabulary vocab_;
  Eigen::VectorXd weights_;
  double bias_;
};

// Fallback for a substructure whose training labels are all equal.
class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(double p) : p_(p) {}
  double Probability(const TokenSequence&) const override { return p_; }
  std::string Type() const override { return "constant"; }

 private:
  double p_;
};

struct LabeledSequence {
  TokenSequence tokens;
  int label = 0;
};

struct TrainStats {
  double dev_accuracy = 0;
  double dev_loss = 0;
  int epochs_run = 0;
  bool degenerate = false;
};

std::unique_ptr<Predictor> TrainBinary(const std::vector<LabeledSequence>& train,
                                       const std::vector<LabeledSequence>& dev,
                                       PredictorType type,
                                       const TrainConfig& config,
                                       TrainStats* stats = nullptr);

struct SubstructureModel {
  StructureKey key;
  std::shared_ptr<const Predictor> predictor;
  TrainStats stats;
};

class PredictorSet {
 public:
  PredictorSet() = default;
  explicit PredictorSet(std::vector<SubstructureModel> models)
      : models_(std::move(models)) {}

  const std::vector<SubstructureModel>& models() const { return models_; }
  ProbabilityMap PredictAll(const TokenSequence& tokens) const;
  double MeanDevAccuracy() const;

  // One JSON file per model plus manifest.json in dir.
  void Save(const std::string& dir, const TrainConfig& config) const;
  static PredictorSet Load(const std::string& dir);

 private:
  std::vector<SubstructureModel> models_;
};

// Token sequence of a training pair (gold mentions replaced).
TokenSequence PairTokens(const TrainingPair& pair);

// Trains one predictor per member of FS*. Labels come from the catalog's
// containment of each pair's structure. Models are trained independently,
// each with a seed derived from config.seed and the substructure key, so
// results do not depend on scheduling.
PredictorSet TrainPredictors(const std::vector<TrainingPair>& train,
                             const std::vector<TrainingPair>& dev,
                             const SubstructureCatalog& catalog,
                             PredictorType type, const TrainConfig& config);

// Multi-class classifier over TS sharing the BiLSTM encoder.
class StructureClassifier {
 public:
  StructureClassifier() = default;
  StructureClassifier(std::vector<StructureKey> classes,
                      std::shared_ptr<const BiLstmPredictor> model)
      : classes_(std::move(classes)), model_(std::move(model)) {}

  // Softmax distribution over classes().
  std::vector<double> Distribution(const TokenSequence& tokens) const;
  const std::vector<StructureKey>& classes() const { return classes_; }

 private:
  std::vector<StructureKey> classes_;
  std::shared_ptr<const BiLstmPredictor> model_;
};

StructureClassifier TrainStructureClassifier(
    const std::vector<TrainingPair>& train,
    const std::vector<TrainingPair>& dev, const SubstructureCatalog& catalog,
    const TrainConfig& config);

// Stable 64-bit seed for one job.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view key);

}  // namespace qgen

#endif  // QGEN_PREDICTOR_H_
