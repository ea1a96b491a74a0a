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

#include "graph_json.h"

#include <fstream>
#include <stdexcept>

namespace qgen {
namespace {

VertexKind KindFromName(const std::string& name) {
  for (VertexKind k : {VertexKind::kVariable, VertexKind::kEntity,
                       VertexKind::kClass, VertexKind::kLiteral,
                       VertexKind::kAggregateResult}) {
    if (KindName(k) == name) return k;
  }
  throw std::runtime_error("unknown vertex kind " + name);
}

}  // namespace

nlohmann::json GraphToJson(const QueryGraph& g) {
  nlohmann::json vertices = nlohmann::json::array();
  for (const Vertex& v : g.vertices()) {
    vertices.push_back({{"kind", KindName(v.kind)}, {"surface", v.surface}});
  }
  nlohmann::json triples = nlohmann::json::array();
  for (const Triple& t : g.triples()) {
    triples.push_back({{"s", t.subject},
                       {"p", t.label.ToString()},
                       {"o", t.object},
                       {"builtin", t.label.is_builtin()}});
  }
  nlohmann::json j = {{"vertices", vertices}, {"triples", triples},
                      {"ask", g.ask()}};
  j["target"] = g.target() ? nlohmann::json(*g.target()) : nlohmann::json();
  return j;
}

QueryGraph GraphFromJson(const nlohmann::json& j) {
  std::vector<Vertex> vertices;
  for (const auto& v : j.at("vertices")) {
    vertices.push_back(
        {KindFromName(v.at("kind")), v.value("surface", std::string())});
  }
  std::vector<Triple> triples;
  for (const auto& t : j.at("triples")) {
    const std::string p = t.at("p");
    EdgeLabel label = EdgeLabel::UserDefined(p);
    if (t.value("builtin", false)) {
      auto b = BuiltInFromName(p);
      if (!b) throw std::runtime_error("unknown built-in " + p);
      label = EdgeLabel::Builtin(*b);
    }
    triples.push_back({t.at("s").get<std::size_t>(), label,
                       t.at("o").get<std::size_t>()});
  }
  std::optional<std::size_t> target;
  if (j.contains("target") && !j["target"].is_null()) {
    target = j["target"].get<std::size_t>();
  }
  // Derived kinds are recomputed by the constructor, so a stored
  // AggregateResult is read back as a plain variable first.
  for (Vertex& v : vertices) {
    if (v.kind == VertexKind::kAggregateResult) v.kind = VertexKind::kVariable;
  }
  return QueryGraph(std::move(vertices), std::move(triples), target,
                    j.value("ask", false));
}

nlohmann::json KeyToJson(const StructureKey& key) {
  return {{"canonical", key.canonical},
          {"triples", key.triple_count},
          {"aggregations", key.agg_count}};
}

StructureKey KeyFromJson(const nlohmann::json& j) {
  return {j.at("canonical"), j.at("triples"), j.at("aggregations")};
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void WriteJsonFile(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
}

}  // namespace qgen
