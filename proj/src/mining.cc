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

#include "qgen/mining.h"

#include <algorithm>
#include <cstdint>
#include <set>

#include <fmt/format.h>

#include "graph_json.h"

namespace qgen {
namespace {

constexpr int kCatalogVersion = 1;

// Triple-adjacency connectivity of a subset given as a bit mask.
bool MaskConnected(std::uint32_t mask, const std::vector<std::uint32_t>& adj) {
  const std::uint32_t start = mask & (~mask + 1);
  std::uint32_t seen = start;
  std::uint32_t frontier = start;
  while (frontier) {
    const int i = __builtin_ctz(frontier);
    frontier &= frontier - 1;
    const std::uint32_t next = adj[i] & mask & ~seen;
    seen |= next;
    frontier |= next;
  }
  return seen == mask;
}

CatalogEntry MakeEntry(const QueryGraph& g, std::size_t count) {
  QueryGraph rep = ToStructure(g);
  StructureKey key = CanonicalKey(rep);
  return {std::move(key), std::move(rep), count};
}

template <typename Entries>
std::map<std::string, std::size_t> IndexByKey(const Entries& entries) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    index[entries[i].key.canonical] = i;
  }
  return index;
}

nlohmann::json EntryToJson(const CatalogEntry& e) {
  return {{"key", KeyToJson(e.key)},
          {"count", e.count},
          {"representative", GraphToJson(e.representative)}};
}

CatalogEntry EntryFromJson(const nlohmann::json& j) {
  return {KeyFromJson(j.at("key")), GraphFromJson(j.at("representative")),
          j.at("count").get<std::size_t>()};
}

}  // namespace

std::vector<CatalogEntry> CollectStructures(
    const std::vector<TrainingPair>& pairs) {
  std::vector<CatalogEntry> out;
  std::map<std::string, std::size_t> index;
  for (const TrainingPair& p : pairs) {
    CatalogEntry e = MakeEntry(p.query, 1);
    auto [it, inserted] = index.emplace(e.key.canonical, out.size());
    if (inserted) {
      out.push_back(std::move(e));
    } else {
      ++out[it->second].count;
    }
  }
  return out;
}

std::vector<QueryGraph> EnumerateSubstructures(const QueryGraph& g) {
  const std::size_t n = g.num_triples();
  if (n > kMaxEnumerableTriples) {
    throw QueryTooLarge(fmt::format(
        "query has {} triples; enumeration is capped at {}", n,
        kMaxEnumerableTriples));
  }
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Triple& a = g.triples()[i];
    for (std::size_t j = 0; j < n; ++j) {
      const Triple& b = g.triples()[j];
      if (i != j && (a.subject == b.subject || a.subject == b.object ||
                     a.object == b.subject || a.object == b.object)) {
        adj[i] |= std::uint32_t{1} << j;
      }
    }
  }
  std::vector<QueryGraph> out;
  std::set<std::string> seen;
  const QueryGraph untargeted = g.WithTarget(std::nullopt);
  for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n); ++mask) {
    if (!MaskConnected(mask, adj)) continue;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) ids.push_back(i);
    }
    QueryGraph rep = ToStructure(untargeted.Subgraph(ids));
    if (seen.insert(CanonicalKey(rep).canonical).second) {
      out.push_back(std::move(rep));
    }
  }
  return out;
}

const CatalogEntry* SubstructureCatalog::FindStructure(
    const StructureKey& key) const {
  auto it = structure_index_.find(key.canonical);
  return it == structure_index_.end() ? nullptr : &structures_[it->second];
}

const CatalogEntry* SubstructureCatalog::FindSubstructure(
    const StructureKey& key) const {
  auto it = substructure_index_.find(key.canonical);
  return it == substructure_index_.end() ? nullptr
                                         : &substructures_[it->second];
}

long SubstructureCatalog::FrequentIndex(const StructureKey& key) const {
  auto it = frequent_index_.find(key.canonical);
  return it == frequent_index_.end() ? -1 : static_cast<long>(it->second);
}

std::vector<bool> SubstructureCatalog::ContainmentPattern(
    const QueryGraph& structure) const {
  const StructureKey key = CanonicalKey(structure);
  if (auto it = structure_index_.find(key.canonical);
      it != structure_index_.end()) {
    return containment_[it->second];
  }
  std::vector<bool> row(frequent_.size(), false);
  for (std::size_t j = 0; j < frequent_.size(); ++j) {
    if (frequent_[j].key.triple_count <= key.triple_count) {
      row[j] = IsSubstructure(frequent_[j].representative, structure);
    }
  }
  return row;
}

void SubstructureCatalog::Finalize() {
  std::sort(structures_.begin(), structures_.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  std::sort(substructures_.begin(), substructures_.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  frequent_.clear();
  for (const CatalogEntry& e : substructures_) {
    if (e.count > gamma_) frequent_.push_back(e);
  }
  structure_index_ = IndexByKey(structures_);
  substructure_index_ = IndexByKey(substructures_);
  frequent_index_ = IndexByKey(frequent_);
  // A structure contains exactly the substructures it enumerates.
  containment_.assign(structures_.size(),
                      std::vector<bool>(frequent_.size(), false));
  for (std::size_t i = 0; i < structures_.size(); ++i) {
    for (const QueryGraph& sub :
         EnumerateSubstructures(structures_[i].representative)) {
      auto it = frequent_index_.find(CanonicalKey(sub).canonical);
      if (it != frequent_index_.end()) containment_[i][it->second] = true;
    }
  }
}

SubstructureCatalog SubstructureCatalog::WithGamma(std::size_t gamma) const {
  SubstructureCatalog c = *this;
  c.gamma_ = gamma;
  c.Finalize();
  return c;
}

SubstructureCatalog Mine(const std::vector<TrainingPair>& pairs,
                         std::size_t gamma) {
  if (pairs.empty()) throw EmptyTrainingData("no training pairs");
  SubstructureCatalog c;
  c.gamma_ = gamma;
  c.structures_ = CollectStructures(pairs);
  // Every query of one structure has the same substructure set, so the
  // per-query tally is a weighted sum over TS.
  std::map<std::string, std::size_t> index;
  for (const CatalogEntry& s : c.structures_) {
    for (QueryGraph& sub : EnumerateSubstructures(s.representative)) {
      StructureKey key = CanonicalKey(sub);
      auto [it, inserted] = index.emplace(key.canonical, c.substructures_.size());
      if (inserted) {
        c.substructures_.push_back({std::move(key), std::move(sub), s.count});
      } else {
        c.substructures_[it->second].count += s.count;
      }
    }
  }
  c.Finalize();
  return c;
}

void SubstructureCatalog::Save(const std::string& path) const {
  nlohmann::json j;
  j["version"] = kCatalogVersion;
  j["gamma"] = gamma_;
  for (const auto& e : structures_) j["structures"].push_back(EntryToJson(e));
  for (const auto& e : substructures_) {
    j["substructures"].push_back(EntryToJson(e));
  }
  j["frequent"] = nlohmann::json::array();
  for (const auto& e : frequent_) j["frequent"].push_back(e.key.canonical);
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < containment_.size(); ++i) {
    for (std::size_t k = 0; k < containment_[i].size(); ++k) {
      if (containment_[i][k]) pairs.push_back({i, k});
    }
  }
  j["containment"] = pairs;
  WriteJsonFile(path, j);
}

SubstructureCatalog SubstructureCatalog::Load(const std::string& path) {
  const nlohmann::json j = ReadJsonFile(path);
  if (j.value("version", 0) != kCatalogVersion) {
    throw std::runtime_error("unsupported catalog version in " + path);
  }
  SubstructureCatalog c;
  c.gamma_ = j.at("gamma");
  for (const auto& e : j.at("structures")) {
    c.structures_.push_back(EntryFromJson(e));
  }
  for (const auto& e : j.at("substructures")) {
    c.substructures_.push_back(EntryFromJson(e));
  }
  c.Finalize();
  return c;
}

}  // namespace qgen
