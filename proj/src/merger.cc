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

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "graph_json.h"

namespace qgen {
namespace {

using VertexPair = std::pair<std::size_t, std::size_t>;

bool Unifiable(const QueryGraph& a, std::size_t i, const QueryGraph& b,
               std::size_t j) {
  const Vertex& x = a.vertex(i);
  const Vertex& y = b.vertex(j);
  if (x.kind != y.kind || x.kind == VertexKind::kAggregateResult) return false;
  if (x.kind != VertexKind::kLiteral) return true;
  const bool rx = IsRankingLiteral(a, i);
  const bool ry = IsRankingLiteral(b, j);
  return rx == ry && (!rx || x.surface == y.surface);
}

// Calls fn for every injective subset of `pairs` with at most `limit`
// members (including the empty one).
template <typename Fn>
void ForEachMatching(const std::vector<VertexPair>& pairs, std::size_t limit,
                     Fn&& fn) {
  std::vector<VertexPair> chosen;
  std::set<std::size_t> used_left, used_right;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    fn(chosen);
    if (chosen.size() == limit) return;
    for (std::size_t k = from; k < pairs.size(); ++k) {
      const auto [l, r] = pairs[k];
      if (used_left.count(l) || used_right.count(r)) continue;
      chosen.push_back(pairs[k]);
      used_left.insert(l);
      used_right.insert(r);
      self(self, k + 1);
      chosen.pop_back();
      used_left.erase(l);
      used_right.erase(r);
    }
  };
  rec(rec, 0);
}

QueryGraph Unify(const QueryGraph& a, const QueryGraph& b,
                 const std::vector<VertexPair>& vertex_pairs,
                 const std::vector<VertexPair>& label_pairs,
                 const std::vector<std::string>& la,
                 const std::vector<std::string>& lb) {
  std::vector<Vertex> vertices = a.vertices();
  std::vector<std::size_t> b_to_new(b.num_vertices(), SIZE_MAX);
  for (const auto& [i, j] : vertex_pairs) b_to_new[j] = i;
  for (std::size_t j = 0; j < b.num_vertices(); ++j) {
    if (b_to_new[j] != SIZE_MAX) continue;
    b_to_new[j] = vertices.size();
    Vertex v = b.vertex(j);
    // Derived kinds are recomputed from the merged triples.
    if (v.kind == VertexKind::kAggregateResult) v.kind = VertexKind::kVariable;
    vertices.push_back(std::move(v));
  }
  for (Vertex& v : vertices) {
    if (v.kind == VertexKind::kAggregateResult) v.kind = VertexKind::kVariable;
  }
  // b's labels are renamed apart unless unified with one of a's.
  std::map<std::string, std::string> rename;
  for (const std::string& l : lb) rename[l] = "b:" + l;
  for (const auto& [i, j] : label_pairs) rename[lb[j]] = la[i];
  std::vector<Triple> triples = a.triples();
  for (const Triple& t : b.triples()) {
    triples.push_back({b_to_new[t.subject],
                       t.label.is_builtin()
                           ? t.label
                           : EdgeLabel::UserDefined(rename.at(t.label.name())),
                       b_to_new[t.object]});
  }
  return QueryGraph(std::move(vertices), std::move(triples));
}

}  // namespace

namespace {

using Keyed = std::pair<QueryGraph, StructureKey>;

// MergePair with keys attached. `keep` sees the unified graph before it is
// canonicalized, which is where most of the cost lies.
template <typename Keep>
std::vector<Keyed> MergeKeyed(const QueryGraph& a, const QueryGraph& b,
                              std::size_t max_vertex_pairs,
                              std::size_t max_label_pairs, Keep&& keep) {
  std::vector<VertexPair> vertex_options;
  for (std::size_t i = 0; i < a.num_vertices(); ++i) {
    for (std::size_t j = 0; j < b.num_vertices(); ++j) {
      if (Unifiable(a, i, b, j)) vertex_options.emplace_back(i, j);
    }
  }
  const std::vector<std::string> la = a.UserLabels();
  const std::vector<std::string> lb = b.UserLabels();
  std::vector<VertexPair> label_options;
  for (std::size_t i = 0; i < la.size(); ++i) {
    for (std::size_t j = 0; j < lb.size(); ++j) label_options.emplace_back(i, j);
  }
  std::vector<Keyed> out;
  std::set<std::string> seen;
  ForEachMatching(vertex_options, max_vertex_pairs, [&](const auto& vp) {
    ForEachMatching(label_options, max_label_pairs, [&](const auto& lp) {
      QueryGraph merged;
      try {
        merged = Unify(a, b, vp, lp, la, lb);
        if (!keep(merged)) return;
        merged = ToStructure(merged);
      } catch (const InvalidGraph&) {
        return;
      }
      StructureKey key = CanonicalKey(merged);
      if (seen.insert(key.canonical).second) {
        out.emplace_back(std::move(merged), std::move(key));
      }
    });
  });
  return out;
}

}  // namespace

std::vector<QueryGraph> MergePair(const QueryGraph& a, const QueryGraph& b,
                                  std::size_t max_vertex_pairs,
                                  std::size_t max_label_pairs) {
  std::vector<QueryGraph> out;
  for (auto& [g, key] : MergeKeyed(a, b, max_vertex_pairs, max_label_pairs,
                                   [](const QueryGraph&) { return true; })) {
    out.push_back(std::move(g));
  }
  return out;
}

bool SatisfiesRestrictions(const QueryGraph& g, const MergeConfig& config) {
  return g.IsConnected() && g.num_triples() <= config.tau &&
         g.AggregationCount(config.delta_counts_ranking) <= config.delta;
}

std::string MergeTrace::ToJson() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& round : rounds) {
    nlohmann::json r = nlohmann::json::array();
    for (const ScoredStructure& s : round) {
      r.push_back({{"key", s.key.canonical},
                   {"score", s.score},
                   {"structure", DebugString(s.representative)}});
    }
    j.push_back(r);
  }
  return nlohmann::json{{"rounds", j}}.dump(1);
}

std::vector<ScoredStructure> MergeSubstructures(
    const ProbabilityMap& probs, const SubstructureCatalog& catalog,
    const MergeConfig& config, MergeTrace* trace) {
  // Scores are cached per key: a structure reached along several merge
  // paths is scored once.
  std::map<std::string, double> score_cache;
  auto score = [&](const QueryGraph& g, const StructureKey& key) {
    auto it = score_cache.find(key.canonical);
    if (it != score_cache.end()) return it->second;
    const double s = ScoreStructure(g, probs, catalog, config.score);
    score_cache.emplace(key.canonical, s);
    return s;
  };
  auto make = [&](QueryGraph g, const StructureKey& key, double s) {
    const CatalogEntry* existing = catalog.FindStructure(key);
    return ScoredStructure{key, std::move(g), s, Provenance::kMerged,
                           existing ? existing->count : 0};
  };
  auto cap = [&](std::vector<ScoredStructure>& round) {
    SortScored(round);
    if (round.size() > config.max_members) round.resize(config.max_members);
  };

  std::vector<const CatalogEntry*> positive;
  std::vector<ScoredStructure> current;
  for (const CatalogEntry& f : catalog.frequent()) {
    auto it = probs.find(f.key);
    if (it == probs.end()) {
      throw MissingProbability("no probability for " + f.key.canonical);
    }
    if (it->second > 0.5) positive.push_back(&f);
    if (!SatisfiesRestrictions(f.representative, config)) continue;
    const double s = score(f.representative, f.key);
    if (s > config.theta) current.push_back(make(f.representative, f.key, s));
  }
  cap(current);

  std::map<std::string, ScoredStructure> all;
  if (trace) trace->rounds.clear();
  for (int round = 0;; ++round) {
    for (const ScoredStructure& s : current) all.emplace(s.key.canonical, s);
    if (trace) trace->rounds.push_back(current);
    if (round == config.K) break;
    std::vector<ScoredStructure> next;
    std::set<std::string> in_next;
    for (const CatalogEntry* f : positive) {
      for (const ScoredStructure& m : current) {
        auto merges = MergeKeyed(
            f->representative, m.representative, config.max_vertex_pairs,
            config.max_label_pairs, [&](const QueryGraph& g) {
              return SatisfiesRestrictions(g, config);
            });
        for (auto& [merged, key] : merges) {
          if (in_next.count(key.canonical)) continue;
          const double s = score(merged, key);
          if (s <= config.theta) continue;
          in_next.insert(key.canonical);
          next.push_back(make(std::move(merged), key, s));
        }
      }
    }
    cap(next);
    current = std::move(next);
  }
  std::vector<ScoredStructure> out;
  for (auto& [key, s] : all) out.push_back(std::move(s));
  SortScored(out);
  return out;
}

}  // namespace qgen
