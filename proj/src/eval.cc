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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "qgen/sparql.h"

namespace qgen {
namespace {

using nlohmann::json;

std::vector<Mention> ParseMentions(const json& list,
                                   const std::string& question) {
  std::vector<Mention> out;
  for (const json& j : list) {
    Mention m;
    m.symbol = j.value("symbol", std::string());
    const auto kind = LinkKindFromName(j.value("kind", std::string("entity")));
    if (!kind) throw std::invalid_argument("unknown mention kind");
    m.kind = *kind;
    if (j.contains("begin")) {
      m.begin = j.at("begin").get<std::size_t>();
      m.end = j.at("end").get<std::size_t>();
    } else {
      const std::string surface = j.at("mention").get<std::string>();
      const auto pos = question.find(surface);
      if (pos == std::string::npos) {
        throw std::invalid_argument("mention '" + surface +
                                    "' not found in question");
      }
      m.begin = pos;
      m.end = pos + surface.size();
    }
    if (m.begin > m.end || m.end > question.size()) {
      throw std::invalid_argument("mention span outside the question");
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

Dataset ParseDataset(std::string_view json_text, std::string name,
                     const PrefixTable& prefixes, const Gazetteer* gazetteer) {
  const json records = json::parse(json_text);
  if (!records.is_array()) {
    throw std::invalid_argument("dataset must be a JSON array");
  }
  Dataset d;
  d.name = std::move(name);
  std::size_t unsupported = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& r = records[i];
    const std::string id = r.contains("id")
                               ? (r["id"].is_string()
                                      ? r["id"].get<std::string>()
                                      : r["id"].dump())
                               : std::to_string(i);
    try {
      TrainingPair pair;
      pair.question = r.at("question").get<std::string>();
      pair.query = ParseQuery(r.at("sparql").get<std::string>(), prefixes);
      if (pair.query.num_triples() > kMaxEnumerableTriples) {
        throw QueryTooLarge("query has too many triples");
      }
      if (r.contains("mentions")) {
        pair.mentions = ParseMentions(r["mentions"], pair.question);
      } else if (gazetteer) {
        pair.mentions = gazetteer->Mentions(pair.question);
      }
      d.pairs.push_back(std::move(pair));
      d.ids.push_back(id);
    } catch (const UnsupportedFeature& e) {
      ++unsupported;
      ++d.skipped;
      d.errors.push_back(fmt::format("record {}: unsupported: {}", id,
                                     e.what()));
    } catch (const std::exception& e) {
      ++d.skipped;
      d.errors.push_back(fmt::format("record {}: {}", id, e.what()));
    }
  }
  if (d.skipped > 0) {
    spdlog::warn("{}: skipped {} of {} records ({} unsupported)", d.name,
                 d.skipped, records.size(), unsupported);
  }
  return d;
}

Dataset LoadDataset(const std::string& path, const PrefixTable& prefixes,
                    const Gazetteer* gazetteer) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Dataset d = ParseDataset(buf.str(), path, prefixes, gazetteer);
  spdlog::info("loaded {}: {} pairs", path, d.pairs.size());
  return d;
}

std::vector<Fold> MakeFolds(const std::vector<TrainingPair>& pairs,
                            std::size_t k, std::uint64_t seed, bool stratify) {
  if (k < 2) throw std::invalid_argument("need at least two folds");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> parts(k);
  if (stratify) {
    // Deal each structure's pairs round robin, continuing where the
    // previous structure stopped so part sizes stay balanced.
    std::map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::string> group_order;
    for (std::size_t i : order) {
      const std::string key = CanonicalKey(pairs[i].query).canonical;
      if (!groups.count(key)) group_order.push_back(key);
      groups[key].push_back(i);
    }
    std::size_t next = 0;
    for (const std::string& key : group_order) {
      for (std::size_t i : groups[key]) parts[next++ % k].push_back(i);
    }
  } else {
    for (std::size_t n = 0; n < order.size(); ++n) {
      parts[n % k].push_back(order[n]);
    }
  }

  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    Fold& fold = folds[f];
    fold.test = parts[f];
    const auto& dev_part = parts[(f + 1) % k];
    const std::size_t half = dev_part.size() / 2;
    fold.dev.assign(dev_part.begin(), dev_part.begin() + half);
    fold.train.assign(dev_part.begin() + half, dev_part.end());
    for (std::size_t p = 0; p < k; ++p) {
      if (p == f || p == (f + 1) % k) continue;
      fold.train.insert(fold.train.end(), parts[p].begin(), parts[p].end());
    }
    std::shuffle(fold.train.begin(), fold.train.end(), rng);
  }
  return folds;
}

double AnswerF1(const AnswerSet& predicted, const AnswerSet& gold,
                bool gold_empty_by_construction) {
  if (gold.empty() && predicted.empty()) {
    return gold_empty_by_construction ? 1.0 : 0.0;
  }
  if (gold.empty() || predicted.empty()) return 0.0;
  std::size_t common = 0;
  for (const std::string& v : predicted.values) common += gold.values.count(v);
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / predicted.values.size();
  const double r = static_cast<double>(common) / gold.values.size();
  return 2 * p * r / (p + r);
}

std::string_view SettingName(Setting setting) {
  switch (setting) {
    case Setting::kFull:
      return "full";
    case Setting::kRankWithoutSub:
      return "rank-wo-sub";
    case Setting::kRankWithSub:
      return "rank-w-sub";
    case Setting::kMergeOnly:
      return "merge-only";
  }
  return "?";
}

std::optional<Setting> SettingFromName(std::string_view name) {
  for (Setting s : {Setting::kFull, Setting::kRankWithoutSub,
                    Setting::kRankWithSub, Setting::kMergeOnly}) {
    if (SettingName(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view PredictorKindName(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kBiLstm:
      return "bilstm";
    case PredictorKind::kBagOfWords:
      return "bow";
    case PredictorKind::kOracle:
      return "oracle";
  }
  return "?";
}

std::optional<PredictorKind> PredictorKindFromName(std::string_view name) {
  for (PredictorKind k : {PredictorKind::kBiLstm, PredictorKind::kBagOfWords,
                          PredictorKind::kOracle}) {
    if (PredictorKindName(k) == name) return k;
  }
  return std::nullopt;
}

ProbabilityMap OracleProbabilities(const QueryGraph& gold,
                                   const SubstructureCatalog& catalog) {
  const std::vector<bool> pattern =
      catalog.ContainmentPattern(ToStructure(gold));
  ProbabilityMap probs;
  for (std::size_t j = 0; j < catalog.frequent().size(); ++j) {
    probs[catalog.frequent()[j].key] = pattern[j] ? 1.0 : 0.0;
  }
  return probs;
}

std::vector<ScoredStructure> RankForSetting(
    Setting setting, const ProbabilityMap& probs,
    const std::vector<double>& distribution, const SubstructureCatalog& catalog,
    const MergeConfig& merge, MergeTrace* trace) {
  switch (setting) {
    case Setting::kRankWithoutSub: {
      const auto& ts = catalog.structures();
      if (distribution.size() != ts.size()) {
        throw std::invalid_argument(
            "classifier distribution does not match the structure set");
      }
      std::vector<ScoredStructure> out;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        out.push_back({ts[i].key, ts[i].representative, distribution[i],
                       Provenance::kExisting, ts[i].count});
      }
      SortScored(out);
      return out;
    }
    case Setting::kRankWithSub:
      return RankExisting(probs, catalog, merge.score);
    case Setting::kMergeOnly:
      return MergeSubstructures(probs, catalog, merge, trace);
    case Setting::kFull: {
      std::vector<ScoredStructure> out =
          RankExisting(probs, catalog, merge.score);
      std::set<std::string> seen;
      for (const ScoredStructure& s : out) seen.insert(s.key.canonical);
      for (ScoredStructure& s :
           MergeSubstructures(probs, catalog, merge, trace)) {
        if (seen.insert(s.key.canonical).second) out.push_back(std::move(s));
      }
      SortScored(out);
      return out;
    }
  }
  return {};
}

bool IsComplex(const QueryGraph& query) {
  return query.num_triples() >= 2 || query.AggregationCount(true) > 0;
}

MeanStd Summarize(const std::vector<double>& values) {
  MeanStd m;
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

void ComputeMetrics(EvalReport& report, std::size_t folds) {
  report.folds.assign(folds, {});
  std::size_t complex_n = 0;
  double complex_sum = 0;
  for (const QuestionRecord& r : report.records) {
    FoldMetrics& f = report.folds.at(r.fold);
    ++f.questions;
    f.f1 += r.f1;
    f.precision_at_1 += r.hit_at_1;
    f.precision_at_k += r.hit_at_k;
    if (r.complex) {
      ++complex_n;
      complex_sum += r.f1;
    }
  }
  std::vector<double> f1, p1, pk;
  for (FoldMetrics& f : report.folds) {
    if (f.questions == 0) continue;
    const double n = static_cast<double>(f.questions);
    f.f1 /= n;
    f.precision_at_1 /= n;
    f.precision_at_k /= n;
    f1.push_back(f.f1);
    p1.push_back(f.precision_at_1);
    pk.push_back(f.precision_at_k);
  }
  report.f1 = Summarize(f1);
  report.precision_at_1 = Summarize(p1);
  report.precision_at_k = Summarize(pk);
  report.complex_questions = complex_n;
  report.complex_f1 = complex_n ? complex_sum / complex_n : 0.0;
}

bool EvalReport::Verify() const {
  EvalReport copy = *this;
  ComputeMetrics(copy, folds.size());
  auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (copy.folds[i].questions != folds[i].questions ||
        !close(copy.folds[i].f1, folds[i].f1) ||
        !close(copy.folds[i].precision_at_1, folds[i].precision_at_1) ||
        !close(copy.folds[i].precision_at_k, folds[i].precision_at_k)) {
      return false;
    }
  }
  return close(copy.f1.mean, f1.mean) && close(copy.f1.stdev, f1.stdev) &&
         close(copy.precision_at_1.mean, precision_at_1.mean) &&
         close(copy.precision_at_k.mean, precision_at_k.mean) &&
         copy.complex_questions == complex_questions &&
         close(copy.complex_f1, complex_f1);
}

std::string EvalReport::ToJson() const {
  json j;
  j["setting"] = setting;
  j["predictor"] = predictor;
  j["top_k"] = top_k;
  j["f1"] = {{"mean", f1.mean}, {"stdev", f1.stdev}};
  j["precision_at_1"] = {{"mean", precision_at_1.mean},
                         {"stdev", precision_at_1.stdev}};
  j["precision_at_k"] = {{"mean", precision_at_k.mean},
                         {"stdev", precision_at_k.stdev}};
  j["complex"] = {{"questions", complex_questions}, {"f1", complex_f1}};
  json fj = json::array();
  for (const FoldMetrics& f : folds) {
    fj.push_back({{"questions", f.questions},
                  {"f1", f.f1},
                  {"precision_at_1", f.precision_at_1},
                  {"precision_at_k", f.precision_at_k}});
  }
  j["folds"] = fj;
  json rj = json::array();
  for (const QuestionRecord& r : records) {
    rj.push_back({{"fold", r.fold},
                  {"id", r.id},
                  {"question", r.question},
                  {"gold_query", r.gold_query},
                  {"predicted_query", r.predicted_query},
                  {"gold_answers", r.gold_answers},
                  {"predicted_answers", r.predicted_answers},
                  {"f1", r.f1},
                  {"hit_at_1", r.hit_at_1},
                  {"hit_at_k", r.hit_at_k},
                  {"complex", r.complex},
                  {"structure_in_train", r.structure_in_train}});
  }
  j["records"] = rj;
  return j.dump(1);
}

std::string EvalReport::Summary() const {
  std::string out = fmt::format("{:<12} {:<8} {:>15} {:>15} {:>15}\n",
                                "setting", "model", "F1", "P@1",
                                fmt::format("P@{}", top_k));
  out += fmt::format(
      "{:<12} {:<8} {:>15} {:>15} {:>15}\n", setting, predictor,
      fmt::format("{:.3f} ± {:.3f}", f1.mean, f1.stdev),
      fmt::format("{:.3f} ± {:.3f}", precision_at_1.mean, precision_at_1.stdev),
      fmt::format("{:.3f} ± {:.3f}", precision_at_k.mean,
                  precision_at_k.stdev));
  out += fmt::format("questions: {}, complex: {} (F1 {:.3f})\n",
                     records.size(), complex_questions, complex_f1);
  return out;
}

namespace {

std::vector<TrainingPair> Select(const Dataset& d,
                                 const std::vector<std::size_t>& ids) {
  std::vector<TrainingPair> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(d.pairs[i]);
  return out;
}

std::vector<std::string> Values(const AnswerSet& a) {
  return {a.values.begin(), a.values.end()};
}

}  // namespace

EvalReport RunPipeline(const Dataset& dataset, const KnowledgeBase& kb,
                       const EvalConfig& config) {
  if (config.train_fraction <= 0 || config.train_fraction > 1) {
    throw std::invalid_argument("train fraction must be in (0, 1]");
  }
  if (config.setting == Setting::kRankWithoutSub &&
      config.predictor == PredictorKind::kBagOfWords) {
    throw std::invalid_argument(
        "rank-wo-sub uses the BiLSTM structure classifier; pick bilstm or "
        "oracle");
  }
  EvalReport report;
  report.setting = std::string(SettingName(config.setting));
  report.predictor = std::string(PredictorKindName(config.predictor));
  report.top_k = config.grounding.top_k;

  const std::vector<Fold> folds =
      MakeFolds(dataset.pairs, config.folds, config.seed, config.stratify);
  const std::size_t run_folds =
      config.max_folds ? std::min(config.max_folds, folds.size())
                       : folds.size();
  const DistractorPool pool = config.distractors
                                  ? DistractorPool::FromKb(kb)
                                  : DistractorPool{};

  for (std::size_t f = 0; f < run_folds; ++f) {
    std::vector<std::size_t> train_ids = folds[f].train;
    train_ids.resize(static_cast<std::size_t>(std::ceil(
        config.train_fraction * static_cast<double>(train_ids.size()))));
    const std::vector<TrainingPair> train = Select(dataset, train_ids);
    const std::vector<TrainingPair> dev = Select(dataset, folds[f].dev);

    Model model;
    model.catalog = Mine(train, config.gamma);
    spdlog::info("fold {}: {} train, {} dev, {} test, |TS|={}, |FS*|={}", f,
                 train.size(), dev.size(), folds[f].test.size(),
                 model.catalog.structures().size(),
                 model.catalog.frequent().size());
    const bool trained = config.predictor != PredictorKind::kOracle;
    if (trained && config.setting == Setting::kRankWithoutSub) {
      model.classifier =
          TrainStructureClassifier(train, dev, model.catalog, config.train);
    } else if (trained) {
      model.predictors = TrainPredictors(
          train, dev, model.catalog,
          config.predictor == PredictorKind::kBiLstm ? PredictorType::kBiLstm
                                                     : PredictorType::kBagOfWords,
          config.train);
    }

    for (std::size_t i : folds[f].test) {
      const TrainingPair& pair = dataset.pairs[i];
      QuestionRecord rec;
      rec.fold = f;
      rec.id = dataset.ids[i];
      rec.question = pair.question;
      rec.gold_query = SerializeQuery(pair.query);
      rec.complex = IsComplex(pair.query);
      const StructureKey gold_key = CanonicalKey(pair.query);
      rec.structure_in_train = model.catalog.FindStructure(gold_key) != nullptr;
      const AnswerSet gold = Execute(pair.query, kb);
      rec.gold_answers = Values(gold);

      ProbabilityMap probs;
      std::vector<double> distribution;
      const TokenSequence tokens = PairTokens(pair);
      if (config.setting == Setting::kRankWithoutSub) {
        if (trained) {
          distribution = model.classifier.Distribution(tokens);
        } else {
          for (const CatalogEntry& s : model.catalog.structures()) {
            distribution.push_back(s.key == gold_key ? 1.0 : 0.0);
          }
        }
      } else {
        probs = trained ? model.predictors.PredictAll(tokens)
                        : OracleProbabilities(pair.query, model.catalog);
      }
      const std::vector<ScoredStructure> ranked = RankForSetting(
          config.setting, probs, distribution, model.catalog, config.merge);

      Linking links = GoldLinking(pair.query);
      if (config.distractors > 0) {
        std::mt19937_64 rng(DeriveSeed(config.seed, rec.id));
        links = AddDistractors(links, pool, config.distractors,
                               config.distractor_ratio, rng);
      }
      try {
        const std::vector<GroundingResult> results =
            Ground(ranked, links, kb, config.grounding);
        rec.predicted_query = SerializeQuery(results.front().query);
        rec.predicted_answers = Values(results.front().answers);
        rec.f1 = AnswerF1(results.front().answers, gold);
        rec.hit_at_1 = rec.f1 == 1.0;
        for (const GroundingResult& r : results) {
          rec.hit_at_k = rec.hit_at_k || AnswerF1(r.answers, gold) == 1.0;
        }
      } catch (const NoValidGrounding&) {
        rec.f1 = 0;
      }
      report.records.push_back(std::move(rec));
    }
  }
  ComputeMetrics(report, run_folds);
  return report;
}

}  // namespace qgen
