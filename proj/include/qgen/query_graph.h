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

#ifndef QGEN_QUERY_GRAPH_H_
#define QGEN_QUERY_GRAPH_H_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qgen {

enum class VertexKind { kVariable, kEntity, kClass, kLiteral, kAggregateResult };

enum class BuiltIn { kCount, kAvg, kMax, kMin, kMaxAtN, kMinAtN, kIsA };

std::string_view KindName(VertexKind kind);
std::string_view BuiltInName(BuiltIn builtin);
std::optional<BuiltIn> BuiltInFromName(std::string_view name);

// COUNT, AVG, MAX and MIN bind an aggregate result variable.
bool IsAggregate(BuiltIn builtin);
// MAXATN and MINATN, the ORDER BY ... LIMIT 1 OFFSET N-1 encoding.
bool IsRanking(BuiltIn builtin);

// Thrown when a graph violates one of the QueryGraph invariants.
class InvalidGraph : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vertex {
  VertexKind kind = VertexKind::kVariable;
  // Entity/class IRI or literal lexical form; a placeholder such as "Ent1"
  // in a query structure. Empty for variables.
  std::string surface;

  bool is_variable() const {
    return kind == VertexKind::kVariable ||
           kind == VertexKind::kAggregateResult;
  }
  bool operator==(const Vertex&) const = default;
};

class EdgeLabel {
 public:
  static EdgeLabel Builtin(BuiltIn builtin) { return EdgeLabel(builtin, {}); }
  static EdgeLabel UserDefined(std::string name) {
    return EdgeLabel(std::nullopt, std::move(name));
  }

  bool is_builtin() const { return builtin_.has_value(); }
  BuiltIn builtin() const { return *builtin_; }
  const std::string& name() const { return name_; }

  // Property IRI for user-defined labels, the upper-case built-in name
  // otherwise.
  std::string ToString() const;

  bool operator==(const EdgeLabel&) const = default;
  auto operator<=>(const EdgeLabel& other) const {
    return ToString() <=> other.ToString();
  }

 private:
  EdgeLabel(std::optional<BuiltIn> builtin, std::string name)
      : builtin_(builtin), name_(std::move(name)) {}

  std::optional<BuiltIn> builtin_;
  std::string name_;
};

struct Triple {
  std::size_t subject = 0;
  EdgeLabel label = EdgeLabel::UserDefined("");
  std::size_t object = 0;

  bool operator==(const Triple&) const = default;
};

// A formal query Q = (V, T). Vertex ids are indices into vertices().
//
// Construction validates the invariants, drops vertices not used by any
// triple, removes duplicate triples and derives the aggregate-result kind:
// a variable is an aggregate result iff it is the object of a COUNT, AVG,
// MAX or MIN triple.
class QueryGraph {
 public:
  QueryGraph() = default;
  QueryGraph(std::vector<Vertex> vertices, std::vector<Triple> triples,
             std::optional<std::size_t> target = std::nullopt,
             bool ask = false);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const Vertex& vertex(std::size_t id) const { return vertices_.at(id); }
  std::optional<std::size_t> target() const { return target_; }
  bool ask() const { return ask_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triples() const { return triples_.size(); }

  // Number of triples labelled COUNT/AVG/MAX/MIN/MAXATN/MINATN.
  std::size_t AggregationCount(bool include_ranking = true) const;

  // True iff the triples form one component when two triples are adjacent
  // whenever they share a vertex.
  bool IsConnected() const;

  // The subgraph induced by the given triple indices (vertices renumbered in
  // order of first use). The target is kept when it survives.
  QueryGraph Subgraph(const std::vector<std::size_t>& triple_ids) const;

  // Distinct user-defined labels in order of first use.
  std::vector<std::string> UserLabels() const;

  QueryGraph WithTarget(std::optional<std::size_t> target) const;

  bool operator==(const QueryGraph&) const = default;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Triple> triples_;
  std::optional<std::size_t> target_;
  bool ask_ = false;
};

// Canonical identifier of a query structure [Q].
struct StructureKey {
  std::string canonical;
  std::size_t triple_count = 0;
  std::size_t agg_count = 0;

  bool operator==(const StructureKey& other) const {
    return canonical == other.canonical;
  }
  auto operator<=>(const StructureKey& other) const {
    return canonical <=> other.canonical;
  }
};

// Structural equivalence: vertex and label bijections preserving the vertex
// kind (variables map to variables, entities to entities, classes to
// classes, literals to literals), fixing built-in labels and preserving the
// triple set. Literal objects of MAXATN/MINATN must keep their value.
bool IsEquivalent(const QueryGraph& a, const QueryGraph& b);

// True iff some subset of b's triples induces a graph equivalent to a.
bool IsSubstructure(const QueryGraph& a, const QueryGraph& b);

StructureKey CanonicalKey(const QueryGraph& g);

// Representative of [g]: vertices and user-defined labels renumbered in
// canonical order and concrete symbols replaced by placeholders (Ent1,
// Class1, Lit1, Prop1, ...). Ranking literals keep their value. Equivalent
// graphs map to identical structures, up to the target vertex.
QueryGraph ToStructure(const QueryGraph& g);

// True iff the vertex is a ranking literal (object of MAXATN/MINATN).
bool IsRankingLiteral(const QueryGraph& g, std::size_t vertex);

// Human-readable triple list, e.g. "{?v0 COUNT ?v1 . ?v0 ISA Class1}".
std::string DebugString(const QueryGraph& g);

}  // namespace qgen

#endif  // QGEN_QUERY_GRAPH_H_
