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

// Command-line front end: mining, training, single-question generation
// and the evaluation runs.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qgen/eval.h"
#include "qgen/grounding.h"
#include "qgen/kb.h"
#include "qgen/linking.h"
#include "qgen/merger.h"
#include "qgen/mining.h"
#include "qgen/predictor.h"
#include "qgen/ranker.h"
#include "qgen/sparql.h"

namespace qgen {
namespace {

using nlohmann::json;

struct Options {
  std::string kb;
  std::string schema;
  std::string dataset;
  std::string gazetteer;
  std::string model;
  std::string out;
  std::string question;
  std::string linking;
  std::string setting = "full";
  std::string predictor = "bilstm";
  std::string log_level = "info";
  std::vector<double> train_fractions;
  EvalConfig eval;
  std::size_t show = 10;
};

void WriteFile(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text << '\n';
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Require(const std::string& value, const char* flag) {
  if (value.empty()) throw CLI::ValidationError(flag, "is required here");
}

KnowledgeBase LoadKb(const Options& o) {
  Require(o.kb, "--kb");
  KnowledgeBase kb = KnowledgeBase::FromFile(o.kb);
  if (!o.schema.empty()) kb.LoadSchemaFile(o.schema);
  spdlog::info("kb: {} facts, {} symbols{}", kb.num_facts(), kb.num_symbols(),
               kb.has_schema() ? ", with schema" : "");
  return kb;
}

Dataset LoadPairs(const Options& o, const Gazetteer* gazetteer) {
  Require(o.dataset, "--dataset");
  Dataset d = LoadDataset(o.dataset, PrefixTable::Default(), gazetteer);
  spdlog::info("dataset {}: {} pairs, {} skipped", d.name, d.pairs.size(),
               d.skipped);
  for (const std::string& e : d.errors) spdlog::debug("skipped: {}", e);
  return d;
}

std::optional<Gazetteer> LoadGazetteer(const Options& o) {
  if (o.gazetteer.empty()) return std::nullopt;
  return Gazetteer::FromFile(o.gazetteer);
}

void ResolveNames(Options& o) {
  const auto setting = SettingFromName(o.setting);
  if (!setting) throw CLI::ValidationError("--setting", "unknown: " + o.setting);
  o.eval.setting = *setting;
  const auto predictor = PredictorKindFromName(o.predictor);
  if (!predictor) {
    throw CLI::ValidationError("--predictor", "unknown: " + o.predictor);
  }
  o.eval.predictor = *predictor;
  o.eval.train.seed = o.eval.seed;
}

int Mine(const Options& o) {
  const std::optional<Gazetteer> gaz = LoadGazetteer(o);
  const Dataset d = LoadPairs(o, gaz ? &*gaz : nullptr);
  const SubstructureCatalog c = qgen::Mine(d.pairs, o.eval.gamma);
  fmt::print("|TS| = {}, substructures = {}, |FS*| = {} (gamma {})\n",
             c.structures().size(), c.substructures().size(),
             c.frequent().size(), c.gamma());
  std::vector<CatalogEntry> top = c.structures();
  std::stable_sort(top.begin(), top.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  for (std::size_t i = 0; i < std::min(o.show, top.size()); ++i) {
    fmt::print("{:>5}  {}\n", top[i].count, SerializeQuery(top[i].representative));
  }
  if (!o.out.empty()) {
    c.Save(o.out);
    spdlog::info("catalog written to {}", o.out);
  }
  return 0;
}

// Catalog plus predictors, trained on a seeded 90/10 train/dev split.
int Train(const Options& o) {
  Require(o.out, "--out");
  const std::optional<Gazetteer> gaz = LoadGazetteer(o);
  const Dataset d = LoadPairs(o, gaz ? &*gaz : nullptr);
  std::vector<std::size_t> order(d.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(o.eval.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_dev = d.pairs.size() / 10;
  std::vector<TrainingPair> train, dev;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_dev ? dev : train).push_back(d.pairs[order[k]]);
  }
  const SubstructureCatalog c = qgen::Mine(train, o.eval.gamma);
  if (o.eval.predictor == PredictorKind::kOracle) {
    throw CLI::ValidationError("--predictor", "oracle predictors are not trained");
  }
  const PredictorSet set = TrainPredictors(
      train, dev, c,
      o.eval.predictor == PredictorKind::kBiLstm ? PredictorType::kBiLstm
                                                 : PredictorType::kBagOfWords,
      o.eval.train);
  std::filesystem::create_directories(o.out);
  c.Save((std::filesystem::path(o.out) / "catalog.json").string());
  set.Save((std::filesystem::path(o.out) / "predictors").string(),
           o.eval.train);
  fmt::print("{} predictors, mean dev accuracy {:.3f}, saved to {}\n",
             set.models().size(), set.MeanDevAccuracy(), o.out);
  return 0;
}

std::string Describe(const ScoredStructure& s) {
  return fmt::format("{:.4f} {:<8} {}", s.score,
                     s.provenance == Provenance::kMerged ? "merged" : "existing",
                     SerializeQuery(s.representative));
}

// Walks one question through prediction, ranking, merging and grounding.
int Generate(const Options& o) {
  Require(o.model, "--model");
  Require(o.question, "--question");
  const KnowledgeBase kb = LoadKb(o);
  const std::optional<Gazetteer> gaz = LoadGazetteer(o);
  const auto dir = std::filesystem::path(o.model);
  const SubstructureCatalog catalog =
      SubstructureCatalog::Load((dir / "catalog.json").string());
  const PredictorSet predictors =
      PredictorSet::Load((dir / "predictors").string());

  Linking links;
  if (!o.linking.empty()) {
    links = LinkingFromJson(ReadFile(o.linking));
  } else if (gaz) {
    links = gaz->Link(o.question);
    for (MentionLinks& l : ExtractLiterals(o.question)) links.push_back(l);
  } else {
    throw CLI::ValidationError("--gazetteer", "or --linking is required");
  }
  std::vector<Mention> mentions;
  for (const MentionLinks& l : links) {
    if (l.kind != LinkKind::kEntity || l.candidates.empty()) continue;
    mentions.push_back({l.begin, l.end, l.candidates[0].symbol, l.kind});
  }
  const TokenSequence tokens = Preprocess(o.question, mentions);
  const ProbabilityMap probs = predictors.PredictAll(tokens);

  json trace;
  trace["question"] = o.question;
  trace["tokens"] = tokens;
  trace["linking"] = json::parse(LinkingToJson(links));
  fmt::print("question: {}\ntokens:   {}\n", o.question, fmt::join(tokens, " "));
  fmt::print("\nlinking:\n");
  for (const MentionLinks& l : links) {
    std::vector<std::string> c;
    for (const Candidate& cand : l.candidates) {
      c.push_back(fmt::format("{} ({:.2f})", cand.symbol, cand.score));
    }
    fmt::print("  [{}] \"{}\" -> {}\n", LinkKindName(l.kind), l.mention,
               fmt::join(c, ", "));
  }

  fmt::print("\nsubstructure probabilities:\n");
  std::vector<std::pair<double, const CatalogEntry*>> ordered;
  for (const CatalogEntry& f : catalog.frequent()) {
    ordered.emplace_back(probs.at(f.key), &f);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [p, f] : ordered) {
    fmt::print("  {:.3f}  {}\n", p, DebugString(f->representative));
    trace["substructures"].push_back(
        {{"probability", p}, {"structure", DebugString(f->representative)}});
  }

  MergeTrace merge_trace;
  const std::vector<ScoredStructure> ranked =
      RankForSetting(o.eval.setting, probs, {}, catalog, o.eval.merge,
                     &merge_trace);
  fmt::print("\nranked structures ({}):\n", ranked.size());
  for (std::size_t i = 0; i < std::min(o.show, ranked.size()); ++i) {
    fmt::print("  {:>2}. {}\n", i + 1, Describe(ranked[i]));
  }
  for (const ScoredStructure& s : ranked) trace["ranked"].push_back(Describe(s));
  trace["merge"] = json::parse(merge_trace.ToJson());

  GroundingTrace grounding_trace;
  fmt::print("\nqueries:\n");
  try {
    const auto results =
        Ground(ranked, links, kb, o.eval.grounding, &grounding_trace);
    for (const GroundingResult& r : results) {
      std::vector<std::string> answers(r.answers.values.begin(),
                                       r.answers.values.end());
      fmt::print("  #{} (structure {}, linking score {:.3f}) {}\n     -> {}\n",
                 &r - &results[0] + 1, r.structure_rank + 1, r.score,
                 SerializeQuery(r.query), fmt::join(answers, ", "));
      trace["queries"].push_back({{"query", SerializeQuery(r.query)},
                                  {"structure_rank", r.structure_rank},
                                  {"score", r.score},
                                  {"answers", answers}});
    }
  } catch (const NoValidGrounding& e) {
    fmt::print("  none: {}\n", e.what());
    trace["queries"] = json::array();
  }
  trace["examined"] = grounding_trace.examined;
  WriteFile(o.out, trace.dump(1));
  return 0;
}

EvalReport RunOne(const Dataset& d, const KnowledgeBase& kb,
                  const EvalConfig& config) {
  EvalReport r = RunPipeline(d, kb, config);
  if (!r.Verify()) throw std::logic_error("report metrics do not recompute");
  return r;
}

int Eval(const Options& o) {
  const KnowledgeBase kb = LoadKb(o);
  const std::optional<Gazetteer> gaz = LoadGazetteer(o);
  const Dataset d = LoadPairs(o, gaz ? &*gaz : nullptr);
  if (o.train_fractions.empty()) {
    const EvalReport r = RunOne(d, kb, o.eval);
    fmt::print("{}", r.Summary());
    WriteFile(o.out, r.ToJson());
    return 0;
  }
  json sweep = json::array();
  fmt::print("{:>9} {:>15} {:>15}\n", "fraction", "F1", "P@1");
  for (double fraction : o.train_fractions) {
    EvalConfig c = o.eval;
    c.train_fraction = fraction;
    const EvalReport r = RunOne(d, kb, c);
    fmt::print("{:>9.2f} {:>15} {:>15}\n", fraction,
               fmt::format("{:.3f} ± {:.3f}", r.f1.mean, r.f1.stdev),
               fmt::format("{:.3f} ± {:.3f}", r.precision_at_1.mean,
                           r.precision_at_1.stdev));
    sweep.push_back({{"train_fraction", fraction},
                     {"report", json::parse(r.ToJson())}});
  }
  WriteFile(o.out, sweep.dump(1));
  return 0;
}

int Ablate(const Options& o) {
  const KnowledgeBase kb = LoadKb(o);
  const std::optional<Gazetteer> gaz = LoadGazetteer(o);
  const Dataset d = LoadPairs(o, gaz ? &*gaz : nullptr);
  json all = json::array();
  std::string table;
  for (Setting s : {Setting::kRankWithoutSub, Setting::kRankWithSub,
                    Setting::kMergeOnly, Setting::kFull}) {
    EvalConfig c = o.eval;
    c.setting = s;
    if (s == Setting::kRankWithoutSub &&
        c.predictor == PredictorKind::kBagOfWords) {
      spdlog::warn("rank-wo-sub needs the BiLSTM classifier; skipped");
      continue;
    }
    const EvalReport r = RunOne(d, kb, c);
    const std::string summary = r.Summary();
    if (table.empty()) table = summary.substr(0, summary.find('\n') + 1);
    table += summary.substr(summary.find('\n') + 1,
                            summary.find('\n', summary.find('\n') + 1) -
                                summary.find('\n'));
    all.push_back(json::parse(r.ToJson()));
  }
  fmt::print("{}", table);
  WriteFile(o.out, all.dump(1));
  return 0;
}

int NoisyLinking(const Options& o) {
  const KnowledgeBase kb = LoadKb(o);
  const std::optional<Gazetteer> gaz = LoadGazetteer(o);
  const Dataset d = LoadPairs(o, gaz ? &*gaz : nullptr);
  const std::size_t n = o.eval.distractors ? o.eval.distractors : 4;
  json all = json::array();
  fmt::print("{:>11} {:>15} {:>15}\n", "distractors", "P@1",
             fmt::format("P@{}", o.eval.grounding.top_k));
  for (std::size_t k : {std::size_t{0}, n}) {
    EvalConfig c = o.eval;
    c.distractors = k;
    const EvalReport r = RunOne(d, kb, c);
    fmt::print("{:>11} {:>15} {:>15}\n", k,
               fmt::format("{:.3f} ± {:.3f}", r.precision_at_1.mean,
                           r.precision_at_1.stdev),
               fmt::format("{:.3f} ± {:.3f}", r.precision_at_k.mean,
                           r.precision_at_k.stdev));
    all.push_back({{"distractors", k}, {"report", json::parse(r.ToJson())}});
  }
  WriteFile(o.out, all.dump(1));
  return 0;
}

void AddData(CLI::App* app, Options& o, bool kb, bool dataset) {
  if (kb) {
    app->add_option("--kb", o.kb, "Knowledge base TSV")->check(CLI::ExistingFile);
    app->add_option("--schema", o.schema, "Domain/range/disjointness file")
        ->check(CLI::ExistingFile);
  }
  if (dataset) {
    app->add_option("--dataset", o.dataset, "JSON question/query pairs")
        ->check(CLI::ExistingFile);
  }
  app->add_option("--gazetteer", o.gazetteer, "surface\\tkind\\tsymbol lines")
      ->check(CLI::ExistingFile);
}

void AddModel(CLI::App* app, Options& o) {
  EvalConfig& e = o.eval;
  app->add_option("--gamma", e.gamma, "Frequency threshold for substructures")
      ->capture_default_str();
  app->add_option("--predictor", o.predictor, "bilstm, bow or oracle")
      ->capture_default_str();
  app->add_option("--embed-dim", e.train.embed_dim)->capture_default_str();
  app->add_option("--hidden-dim", e.train.hidden_dim)->capture_default_str();
  app->add_option("--epochs", e.train.epochs)->capture_default_str();
  app->add_option("--learning-rate", e.train.learning_rate)
      ->capture_default_str();
  app->add_option("--batch-size", e.train.batch_size)->capture_default_str();
  app->add_option("--threads", e.train.threads, "0 uses every core")
      ->capture_default_str();
  app->add_option("--seed", e.seed)->capture_default_str();
}

void AddSearch(CLI::App* app, Options& o) {
  EvalConfig& e = o.eval;
  app->add_option("--setting", o.setting, "full, rank-wo-sub, rank-w-sub, merge-only")
      ->capture_default_str();
  app->add_option("--K", e.merge.K, "Merge rounds")->capture_default_str();
  app->add_option("--theta", e.merge.theta, "Minimum merged score")
      ->capture_default_str();
  app->add_option("--tau", e.merge.tau, "Maximum triples")->capture_default_str();
  app->add_option("--delta", e.merge.delta, "Maximum aggregations")
      ->capture_default_str();
  app->add_option("--top-k", e.grounding.top_k)->capture_default_str();
  app->add_option("--per-structure", e.grounding.per_structure,
                  "Queries kept per structure (0: up to top-k)")
      ->capture_default_str();
  app->add_option("--budget", e.grounding.budget,
                  "Assignments tried per structure")
      ->capture_default_str();
}

void AddEval(CLI::App* app, Options& o) {
  EvalConfig& e = o.eval;
  app->add_option("--folds", e.folds)->capture_default_str();
  app->add_option("--max-folds", e.max_folds, "Run only the first n folds")
      ->capture_default_str();
  app->add_flag("!--no-stratify", e.stratify, "Plain shuffled folds");
  app->add_option("--distractors", e.distractors,
                  "Distractor candidates per mention")
      ->capture_default_str();
  app->add_option("--distractor-ratio", e.distractor_ratio)
      ->capture_default_str();
}

}  // namespace
}  // namespace qgen

int main(int argc, char** argv) {
  using namespace qgen;
  Options o;
  CLI::App app{"Query generation from frequent query substructures"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error")
      ->capture_default_str();

  CLI::App* mine = app.add_subcommand("mine", "Mine structures and substructures");
  AddData(mine, o, false, true);
  mine->add_option("--gamma", o.eval.gamma)->capture_default_str();
  mine->add_option("--show", o.show, "Structures to list")->capture_default_str();
  mine->add_option("--out", o.out, "Catalog JSON");

  CLI::App* train = app.add_subcommand("train", "Train substructure predictors");
  AddData(train, o, false, true);
  AddModel(train, o);
  train->add_option("--out", o.out, "Model directory");

  CLI::App* gen = app.add_subcommand("generate", "Generate queries for one question");
  AddData(gen, o, true, false);
  AddSearch(gen, o);
  gen->add_option("--model", o.model, "Directory written by train");
  gen->add_option("--question", o.question);
  gen->add_option("--linking", o.linking, "Linking candidates JSON");
  gen->add_option("--show", o.show, "Ranked structures to list")
      ->capture_default_str();
  gen->add_option("--out", o.out, "Trace JSON");

  CLI::App* eval = app.add_subcommand("eval", "Cross-validated evaluation");
  AddData(eval, o, true, true);
  AddModel(eval, o);
  AddSearch(eval, o);
  AddEval(eval, o);
  eval->add_option("--train-fractions", o.train_fractions,
                   "Sweep over shares of each training part")
      ->delimiter(',');
  eval->add_option("--out", o.out, "Report JSON");

  CLI::App* ablate = app.add_subcommand("ablate", "Compare the four settings");
  AddData(ablate, o, true, true);
  AddModel(ablate, o);
  AddSearch(ablate, o);
  AddEval(ablate, o);
  ablate->add_option("--out", o.out, "Reports JSON");

  CLI::App* noisy = app.add_subcommand(
      "noisy-linking", "Precision@k with and without distractor candidates");
  AddData(noisy, o, true, true);
  AddModel(noisy, o);
  AddSearch(noisy, o);
  AddEval(noisy, o);
  noisy->add_option("--out", o.out, "Reports JSON");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(o.log_level));
  try {
    ResolveNames(o);
    if (*mine) return Mine(o);
    if (*train) return Train(o);
    if (*gen) return Generate(o);
    if (*eval) return Eval(o);
    if (*ablate) return Ablate(o);
    if (*noisy) return NoisyLinking(o);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
