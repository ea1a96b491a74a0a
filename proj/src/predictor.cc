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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "graph_json.h"

namespace qgen {
namespace {

constexpr int kModelVersion = 1;

struct Encoded {
  std::vector<int> ids;
  int target = 0;
};

std::vector<Encoded> EncodeAll(const Vocabulary& vocab,
                               const std::vector<LabeledSequence>& data) {
  std::vector<Encoded> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back({vocab.Encode(d.tokens), d.label});
  return out;
}

// Groups indices into batches of equal sequence length, at most max_size
// each. Order within a length follows `order`.
std::vector<std::vector<std::size_t>> LengthBatches(
    const std::vector<Encoded>& data, std::vector<std::size_t> order,
    int max_size) {
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return data[a].ids.size() < data[b].ids.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t idx : order) {
    if (batches.empty() ||
        batches.back().size() >= static_cast<std::size_t>(max_size) ||
        data[batches.back().front()].ids.size() != data[idx].ids.size()) {
      batches.emplace_back();
    }
    batches.back().push_back(idx);
  }
  return batches;
}

struct EvalResult {
  double mean_loss = 0;
  double accuracy = 0;
};

EvalResult Evaluate(const AttentionBiLstm& model,
                    const std::vector<Encoded>& data) {
  if (data.empty()) return {};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  double loss = 0;
  std::size_t correct = 0;
  for (const auto& batch : LengthBatches(data, order, 64)) {
    std::vector<std::vector<int>> ids;
    std::vector<int> targets;
    for (std::size_t i : batch) {
      ids.push_back(data[i].ids);
      targets.push_back(data[i].target);
    }
    loss += model.Loss(ids, targets, nullptr);
    for (std::size_t i : batch) {
      const Eigen::VectorXd z = model.Forward(data[i].ids).logits;
      Eigen::Index best = 0;
      if (z.size() == 1) {
        best = z(0) > 0 ? 1 : 0;
      } else {
        z.maxCoeff(&best);
      }
      correct += best == data[i].target;
    }
  }
  return {loss / data.size(), static_cast<double>(correct) / data.size()};
}

AttentionBiLstm FitBiLstm(const Vocabulary& vocab,
                          const std::vector<Encoded>& train,
                          const std::vector<Encoded>& dev, int outputs,
                          const TrainConfig& config, TrainStats* stats) {
  std::mt19937_64 rng(config.seed);
  BiLstmParams params(static_cast<int>(vocab.size()), config.embed_dim,
                      config.hidden_dim, outputs);
  params.InitRandom(rng);
  AttentionBiLstm model(params);
  AdamOptimizer adam(params, {.learning_rate = config.learning_rate});
  BiLstmParams grad = params;
  BiLstmParams best = params;
  // Without a dev set, early stopping watches the training loss.
  const std::vector<Encoded>& watch = dev.empty() ? train : dev;
  double best_loss = Evaluate(model, watch).mean_loss;
  int bad_epochs = 0;
  int epoch = 0;
  std::bernoulli_distribution replace(config.unk_replace);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    auto batches = LengthBatches(train, order, config.batch_size);
    std::shuffle(batches.begin(), batches.end(), rng);
    for (const auto& batch : batches) {
      std::vector<std::vector<int>> ids;
      std::vector<int> targets;
      for (std::size_t i : batch) {
        std::vector<int> seq = train[i].ids;
        for (int& id : seq) {
          if (vocab.IsSingleton(id) && replace(rng)) id = 0;
        }
        ids.push_back(std::move(seq));
        targets.push_back(train[i].target);
      }
      grad.SetZero();
      model.Loss(ids, targets, &grad);
      adam.Step(model.mutable_params(), grad, 1.0 / batch.size());
    }
    const double loss = Evaluate(model, watch).mean_loss;
    if (loss < best_loss) {
      best = model.params();
      bad_epochs = loss < best_loss - config.min_delta ? 0 : bad_epochs + 1;
      best_loss = loss;
    } else {
      ++bad_epochs;
    }
    if (bad_epochs >= config.patience) {
      ++epoch;
      break;
    }
  }
  model.mutable_params() = best;
  if (stats) {
    const EvalResult r = Evaluate(model, watch);
    stats->dev_loss = r.mean_loss;
    stats->dev_accuracy = r.accuracy;
    stats->epochs_run = epoch;
  }
  return model;
}

std::unique_ptr<Predictor> FitBagOfWords(const Vocabulary& vocab,
                                         const std::vector<Encoded>& train,
                                         const TrainConfig& config) {
  // Full-batch Adam on L2-regularized logistic loss over token presence.
  constexpr int kSteps = 300;
  constexpr double kL2 = 1e-3;
  const Eigen::Index v = static_cast<Eigen::Index>(vocab.size());
  std::vector<std::vector<int>> features;
  for (const Encoded& e : train) {
    std::vector<int> f = e.ids;
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    features.push_back(std::move(f));
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(v + 1);  // last entry is bias
  Eigen::VectorXd m = Eigen::VectorXd::Zero(v + 1);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(v + 1);
  const double lr = config.learning_rate > 0 ? 0.05 : 0.0;
  for (int step = 1; step <= kSteps; ++step) {
    Eigen::VectorXd g = kL2 * w;
    g(v) = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      double z = w(v);
      for (int f : features[i]) z += w(f);
      const double d = (Sigmoid(z) - train[i].target) / train.size();
      for (int f : features[i]) g(f) += d;
      g(v) += d;
    }
    m = 0.9 * m + 0.1 * g;
    s = 0.999 * s + 0.001 * g.cwiseProduct(g);
    const double c1 = 1 - std::pow(0.9, step);
    const double c2 = 1 - std::pow(0.999, step);
    w.array() -= lr * (m.array() / c1) / ((s.array() / c2).sqrt() + 1e-8);
  }
  return std::make_unique<BagOfWordsPredictor>(vocab, w.head(v), w(v));
}

nlohmann::json MatrixToJson(const Eigen::MatrixXd& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd MatrixFromJson(const nlohmann::json& j) {
  const auto data = j.at("data").get<std::vector<double>>();
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(),
                    j.at("cols").get<Eigen::Index>());
  if (static_cast<std::size_t>(m.size()) != data.size()) {
    throw std::runtime_error("tensor size mismatch");
  }
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

nlohmann::json ConfigToJson(const TrainConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"patience", c.patience},
          {"min_delta", c.min_delta},
          {"seed", c.seed},
          {"unk_replace", c.unk_replace}};
}

nlohmann::json PredictorToJson(const Predictor& p) {
  nlohmann::json j = {{"type", p.Type()}};
  if (auto* b = dynamic_cast<const BiLstmPredictor*>(&p)) {
    j["vocab"] = b->vocab().tokens();
    for (const auto& [name, t] : b->model().params().Tensors()) {
      j["parameters"][name] = MatrixToJson(*t);
    }
  } else if (auto* w = dynamic_cast<const BagOfWordsPredictor*>(&p)) {
    j["vocab"] = w->vocab().tokens();
    j["parameters"]["weights"] = MatrixToJson(w->weights());
    j["parameters"]["bias"] = w->bias();
  } else {
    j["probability"] = p.Probability({});
  }
  return j;
}

std::shared_ptr<const Predictor> PredictorFromJson(const nlohmann::json& j) {
  const std::string type = j.at("type");
  if (type == "constant") {
    return std::make_shared<ConstantPredictor>(j.at("probability").get<double>());
  }
  Vocabulary vocab =
      Vocabulary::FromTokens(j.at("vocab").get<std::vector<std::string>>());
  if (type == "bow") {
    return std::make_shared<BagOfWordsPredictor>(
        std::move(vocab), MatrixFromJson(j["parameters"]["weights"]).col(0),
        j["parameters"]["bias"].get<double>());
  }
  if (type != "bilstm") throw std::runtime_error("unknown model type " + type);
  BiLstmParams params;
  for (auto& [name, t] : params.Tensors()) {
    *t = MatrixFromJson(j.at("parameters").at(name));
  }
  return std::make_shared<BiLstmPredictor>(std::move(vocab),
                                           AttentionBiLstm(std::move(params)));
}

int ThreadCount(const TrainConfig& config) {
  if (config.threads > 0) return config.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs jobs with at most `threads` in flight, preserving result order.
template <typename T>
std::vector<T> RunJobs(std::vector<std::function<T()>> jobs, int threads) {
  std::vector<T> out;
  out.reserve(jobs.size());
  if (threads <= 1) {
    for (auto& job : jobs) out.push_back(job());
    return out;
  }
  for (std::size_t start = 0; start < jobs.size(); start += threads) {
    std::vector<std::future<T>> running;
    for (std::size_t i = start; i < std::min(jobs.size(), start + threads); ++i) {
      running.push_back(std::async(std::launch::async, jobs[i]));
    }
    for (auto& f : running) out.push_back(f.get());
  }
  return out;
}

}  // namespace

TokenSequence Preprocess(std::string_view question,
                         const std::vector<Mention>& mentions) {
  std::vector<const Mention*> spans;
  for (const Mention& m : mentions) {
    if (m.kind != LinkKind::kEntity) continue;
    if (m.begin > m.end || m.end > question.size()) {
      throw std::out_of_range("mention span outside the question");
    }
    spans.push_back(&m);
  }
  std::sort(spans.begin(), spans.end(),
            [](auto* a, auto* b) { return a->begin < b->begin; });
  TokenSequence tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  std::size_t pos = 0;
  std::size_t next = 0;
  while (pos < question.size()) {
    if (next < spans.size() && pos == spans[next]->begin) {
      flush();
      tokens.emplace_back(kEntityToken);
      pos = std::max(pos, spans[next]->end);
      ++next;
      continue;
    }
    if (next < spans.size() && spans[next]->begin < pos) {
      throw std::invalid_argument("overlapping mention spans");
    }
    const unsigned char c = question[pos++];
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Vocabulary::Vocabulary() {
  for (std::string_view t : {kUnknownToken, kEntityToken}) {
    index_.emplace(std::string(t), static_cast<int>(tokens_.size()));
    tokens_.emplace_back(t);
    counts_.push_back(0);
  }
}

Vocabulary Vocabulary::Build(const std::vector<TokenSequence>& corpus) {
  Vocabulary v;
  for (const TokenSequence& seq : corpus) {
    for (const std::string& t : seq) {
      auto [it, inserted] =
          v.index_.emplace(t, static_cast<int>(v.tokens_.size()));
      if (inserted) {
        v.tokens_.push_back(t);
        v.counts_.push_back(0);
      }
      ++v.counts_[it->second];
    }
  }
  return v;
}

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_.clear();
  v.counts_.clear();
  v.index_.clear();
  for (std::string& t : tokens) {
    v.index_.emplace(t, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(std::move(t));
    v.counts_.push_back(0);
  }
  if (v.tokens_.size() < 2 || v.tokens_[0] != kUnknownToken ||
      v.tokens_[1] != kEntityToken) {
    throw std::runtime_error("vocabulary must start with <unk>, <entity>");
  }
  return v;
}

int Vocabulary::Index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::Encode(const TokenSequence& tokens) const {
  std::vector<int> ids;
  for (const std::string& t : tokens) ids.push_back(Index(t));
  if (ids.empty()) ids.push_back(0);
  return ids;
}

bool Vocabulary::IsSingleton(int id) const {
  return id > 1 && counts_[id] == 1;
}

double BiLstmPredictor::Probability(const TokenSequence& tokens) const {
  return Sigmoid(model_.Forward(vocab_.Encode(tokens)).logits(0));
}

Eigen::VectorXd BiLstmPredictor::Attention(const TokenSequence& tokens) const {
  return model_.Forward(vocab_.Encode(tokens)).attention;
}

double BagOfWordsPredictor::Probability(const TokenSequence& tokens) const {
  std::vector<int> ids = vocab_.Encode(tokens);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  double z = bias_;
  for (int id : ids) z += weights_(id);
  return Sigmoid(z);
}

std::unique_ptr<Predictor> TrainBinary(const std::vector<LabeledSequence>& train,
                                       const std::vector<LabeledSequence>& dev,
                                       PredictorType type,
                                       const TrainConfig& config,
                                       TrainStats* stats) {
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  const std::size_t positives = std::count_if(
      train.begin(), train.end(), [](const auto& d) { return d.label == 1; });
  if (train.empty() || positives == 0 || positives == train.size()) {
    const double prevalence =
        train.empty() ? 0.5 : static_cast<double>(positives) / train.size();
    const double p = std::clamp(prevalence, 0.05, 0.95);
    st.degenerate = true;
    const auto& watch = dev.empty() ? train : dev;
    std::size_t correct = 0;
    for (const auto& d : watch) correct += (p > 0.5) == (d.label == 1);
    st.dev_accuracy = watch.empty() ? 0 : static_cast<double>(correct) / watch.size();
    return std::make_unique<ConstantPredictor>(p);
  }
  std::vector<TokenSequence> corpus;
  for (const auto& d : train) corpus.push_back(d.tokens);
  const Vocabulary vocab = Vocabulary::Build(corpus);
  const std::vector<Encoded> tr = EncodeAll(vocab, train);
  const std::vector<Encoded> dv = EncodeAll(vocab, dev);
  if (type == PredictorType::kBagOfWords) {
    auto model = FitBagOfWords(vocab, tr, config);
    const auto& watch = dev.empty() ? train : dev;
    std::size_t correct = 0;
    for (const auto& d : watch) {
      correct += (model->Probability(d.tokens) > 0.5) == (d.label == 1);
    }
    st.dev_accuracy = static_cast<double>(correct) / watch.size();
    return model;
  }
  AttentionBiLstm model = FitBiLstm(vocab, tr, dv, 1, config, &st);
  return std::make_unique<BiLstmPredictor>(vocab, std::move(model));
}

ProbabilityMap PredictorSet::PredictAll(const TokenSequence& tokens) const {
  ProbabilityMap out;
  for (const SubstructureModel& m : models_) {
    out[m.key] = m.predictor->Probability(tokens);
  }
  return out;
}

double PredictorSet::MeanDevAccuracy() const {
  if (models_.empty()) return 0;
  double sum = 0;
  for (const auto& m : models_) sum += m.stats.dev_accuracy;
  return sum / models_.size();
}

void PredictorSet::Save(const std::string& dir, const TrainConfig& config) const {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = {{"version", kModelVersion},
                             {"train_config", ConfigToJson(config)},
                             {"models", nlohmann::json::array()}};
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const SubstructureModel& m = models_[i];
    const std::string file = fmt::format("model_{:03d}.json", i);
    nlohmann::json j = PredictorToJson(*m.predictor);
    j["version"] = kModelVersion;
    j["substructure_key"] = KeyToJson(m.key);
    j["train_config"] = ConfigToJson(config);
    j["dev_accuracy"] = m.stats.dev_accuracy;
    WriteJsonFile((std::filesystem::path(dir) / file).string(), j);
    manifest["models"].push_back({{"file", file},
                                  {"key", KeyToJson(m.key)},
                                  {"type", m.predictor->Type()},
                                  {"dev_accuracy", m.stats.dev_accuracy},
                                  {"degenerate", m.stats.degenerate},
                                  {"epochs", m.stats.epochs_run}});
  }
  WriteJsonFile((std::filesystem::path(dir) / "manifest.json").string(),
                manifest);
}

PredictorSet PredictorSet::Load(const std::string& dir) {
  const nlohmann::json manifest =
      ReadJsonFile((std::filesystem::path(dir) / "manifest.json").string());
  if (manifest.value("version", 0) != kModelVersion) {
    throw std::runtime_error("unsupported model manifest version");
  }
  std::vector<SubstructureModel> models;
  for (const auto& entry : manifest.at("models")) {
    const nlohmann::json j = ReadJsonFile(
        (std::filesystem::path(dir) / entry.at("file").get<std::string>())
            .string());
    SubstructureModel m;
    m.key = KeyFromJson(j.at("substructure_key"));
    m.predictor = PredictorFromJson(j);
    m.stats.dev_accuracy = entry.value("dev_accuracy", 0.0);
    m.stats.degenerate = entry.value("degenerate", false);
    m.stats.epochs_run = entry.value("epochs", 0);
    models.push_back(std::move(m));
  }
  return PredictorSet(std::move(models));
}

TokenSequence PairTokens(const TrainingPair& pair) {
  return Preprocess(pair.question, pair.mentions);
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view key) {
  // FNV-1a over the seed bytes and the key.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : key) mix(static_cast<unsigned char>(c));
  return h;
}

PredictorSet TrainPredictors(const std::vector<TrainingPair>& train,
                             const std::vector<TrainingPair>& dev,
                             const SubstructureCatalog& catalog,
                             PredictorType type, const TrainConfig& config) {
  auto label_rows = [&](const std::vector<TrainingPair>& pairs) {
    std::map<std::string, std::vector<bool>> cache;
    std::vector<std::vector<bool>> rows;
    for (const TrainingPair& p : pairs) {
      const std::string key = CanonicalKey(p.query).canonical;
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache.emplace(key, catalog.ContainmentPattern(p.query)).first;
      }
      rows.push_back(it->second);
    }
    return rows;
  };
  const auto train_rows = label_rows(train);
  const auto dev_rows = label_rows(dev);
  std::vector<TokenSequence> train_tokens, dev_tokens;
  for (const auto& p : train) train_tokens.push_back(PairTokens(p));
  for (const auto& p : dev) dev_tokens.push_back(PairTokens(p));

  std::vector<std::function<SubstructureModel()>> jobs;
  for (std::size_t j = 0; j < catalog.frequent().size(); ++j) {
    jobs.push_back([&, j] {
      const StructureKey& key = catalog.frequent()[j].key;
      std::vector<LabeledSequence> tr, dv;
      for (std::size_t i = 0; i < train.size(); ++i) {
        tr.push_back({train_tokens[i], train_rows[i][j] ? 1 : 0});
      }
      for (std::size_t i = 0; i < dev.size(); ++i) {
        dv.push_back({dev_tokens[i], dev_rows[i][j] ? 1 : 0});
      }
      TrainConfig cfg = config;
      cfg.seed = DeriveSeed(config.seed, key.canonical);
      SubstructureModel m;
      m.key = key;
      m.predictor = TrainBinary(tr, dv, type, cfg, &m.stats);
      if (m.stats.degenerate) {
        spdlog::warn("degenerate label set for substructure {}; using a "
                     "constant model", key.canonical);
      }
      return m;
    });
  }
  return PredictorSet(RunJobs(std::move(jobs), ThreadCount(config)));
}

std::vector<double> StructureClassifier::Distribution(
    const TokenSequence& tokens) const {
  // A single-class catalog still trains two outputs; only real classes
  // are reported.
  const Eigen::VectorXd z = model_->model()
                                .Forward(model_->vocab().Encode(tokens))
                                .logits.head(classes_.size());
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp().matrix();
  const Eigen::VectorXd p = e / e.sum();
  return {p.data(), p.data() + p.size()};
}

StructureClassifier TrainStructureClassifier(
    const std::vector<TrainingPair>& train,
    const std::vector<TrainingPair>& dev, const SubstructureCatalog& catalog,
    const TrainConfig& config) {
  std::vector<StructureKey> classes;
  std::map<std::string, int> index;
  for (const auto& s : catalog.structures()) {
    index[s.key.canonical] = static_cast<int>(classes.size());
    classes.push_back(s.key);
  }
  std::vector<TokenSequence> corpus;
  for (const auto& p : train) corpus.push_back(PairTokens(p));
  const Vocabulary vocab = Vocabulary::Build(corpus);
  auto encode = [&](const std::vector<TrainingPair>& pairs) {
    std::vector<Encoded> out;
    for (const auto& p : pairs) {
      auto it = index.find(CanonicalKey(p.query).canonical);
      if (it != index.end()) out.push_back({vocab.Encode(PairTokens(p)), it->second});
    }
    return out;
  };
  TrainConfig cfg = config;
  cfg.seed = DeriveSeed(config.seed, "structure-classifier");
  const int outputs = std::max<int>(2, static_cast<int>(classes.size()));
  AttentionBiLstm model =
      FitBiLstm(vocab, encode(train), encode(dev), outputs, cfg, nullptr);
  auto predictor = std::make_shared<BiLstmPredictor>(vocab, std::move(model));
  return StructureClassifier(std::move(classes), std::move(predictor));
}

}  // namespace qgen
