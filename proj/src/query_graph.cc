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

#include "qgen/query_graph.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace qgen {

std::string_view KindName(VertexKind kind) {
  switch (kind) {
    case VertexKind::kVariable: return "Variable";
    case VertexKind::kEntity: return "Entity";
    case VertexKind::kClass: return "Class";
    case VertexKind::kLiteral: return "Literal";
    case VertexKind::kAggregateResult: return "AggregateResult";
  }
  return "?";
}

std::string_view BuiltInName(BuiltIn builtin) {
  switch (builtin) {
    case BuiltIn::kCount: return "COUNT";
    case BuiltIn::kAvg: return "AVG";
    case BuiltIn::kMax: return "MAX";
    case BuiltIn::kMin: return "MIN";
    case BuiltIn::kMaxAtN: return "MAXATN";
    case BuiltIn::kMinAtN: return "MINATN";
    case BuiltIn::kIsA: return "ISA";
  }
  return "?";
}

std::optional<BuiltIn> BuiltInFromName(std::string_view name) {
  for (BuiltIn b : {BuiltIn::kCount, BuiltIn::kAvg, BuiltIn::kMax,
                    BuiltIn::kMin, BuiltIn::kMaxAtN, BuiltIn::kMinAtN,
                    BuiltIn::kIsA}) {
    if (BuiltInName(b) == name) return b;
  }
  return std::nullopt;
}

bool IsAggregate(BuiltIn builtin) {
  return builtin == BuiltIn::kCount || builtin == BuiltIn::kAvg ||
         builtin == BuiltIn::kMax || builtin == BuiltIn::kMin;
}

bool IsRanking(BuiltIn builtin) {
  return builtin == BuiltIn::kMaxAtN || builtin == BuiltIn::kMinAtN;
}

std::string EdgeLabel::ToString() const {
  return is_builtin() ? std::string(BuiltInName(*builtin_)) : name_;
}

QueryGraph::QueryGraph(std::vector<Vertex> vertices,
                       std::vector<Triple> triples,
                       std::optional<std::size_t> target, bool ask)
    : ask_(ask) {
  if (triples.empty()) throw InvalidGraph("query graph has no triples");
  for (const Triple& t : triples) {
    if (t.subject >= vertices.size() || t.object >= vertices.size()) {
      throw InvalidGraph("triple references an unknown vertex");
    }
    if (!t.label.is_builtin() && t.label.name().empty()) {
      throw InvalidGraph("user-defined label without a name");
    }
  }
  if (target && *target >= vertices.size()) {
    throw InvalidGraph("target references an unknown vertex");
  }

  // Renumber vertices in order of first use and drop the unused ones.
  std::vector<std::size_t> remap(vertices.size(), SIZE_MAX);
  auto use = [&](std::size_t old) {
    if (remap[old] == SIZE_MAX) {
      remap[old] = vertices_.size();
      vertices_.push_back(vertices[old]);
    }
    return remap[old];
  };
  for (const Triple& t : triples) {
    Triple mapped{use(t.subject), t.label, use(t.object)};
    if (std::find(triples_.begin(), triples_.end(), mapped) == triples_.end()) {
      triples_.push_back(std::move(mapped));
    }
  }
  if (target) {
    if (remap[*target] == SIZE_MAX) {
      throw InvalidGraph("target variable does not occur in any triple");
    }
    target_ = remap[*target];
  }

  std::vector<bool> agg_object(vertices_.size(), false);
  for (const Triple& t : triples_) {
    if (t.label.is_builtin() && IsAggregate(t.label.builtin())) {
      agg_object[t.object] = true;
    }
  }
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    Vertex& vx = vertices_[v];
    if (vx.is_variable()) {
      vx.kind = agg_object[v] ? VertexKind::kAggregateResult
                              : VertexKind::kVariable;
      vx.surface.clear();
    } else if (vx.surface.empty()) {
      throw InvalidGraph(fmt::format("{} vertex without a surface symbol",
                                     KindName(vx.kind)));
    }
  }
  if (target_ && !vertices_[*target_].is_variable()) {
    throw InvalidGraph("target must be a variable");
  }
  if (ask_ && target_) throw InvalidGraph("ASK queries have no target");
}

std::size_t QueryGraph::AggregationCount(bool include_ranking) const {
  return std::count_if(triples_.begin(), triples_.end(), [&](const Triple& t) {
    if (!t.label.is_builtin()) return false;
    return IsAggregate(t.label.builtin()) ||
           (include_ranking && IsRanking(t.label.builtin()));
  });
}

bool QueryGraph::IsConnected() const {
  if (triples_.empty()) return false;
  std::vector<std::size_t> parent(vertices_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Triple& t : triples_) parent[find(t.subject)] = find(t.object);
  // Every vertex is used by a triple, so vertex connectivity equals triple
  // connectivity.
  const std::size_t root = find(0);
  for (std::size_t v = 1; v < vertices_.size(); ++v) {
    if (find(v) != root) return false;
  }
  return true;
}

QueryGraph QueryGraph::Subgraph(
    const std::vector<std::size_t>& triple_ids) const {
  std::vector<Triple> sub;
  sub.reserve(triple_ids.size());
  for (std::size_t id : triple_ids) sub.push_back(triples_.at(id));
  std::optional<std::size_t> target;
  if (target_) {
    for (const Triple& t : sub) {
      if (t.subject == *target_ || t.object == *target_) target = target_;
    }
  }
  return QueryGraph(vertices_, std::move(sub), target, false);
}

std::vector<std::string> QueryGraph::UserLabels() const {
  std::vector<std::string> labels;
  for (const Triple& t : triples_) {
    if (t.label.is_builtin()) continue;
    if (std::find(labels.begin(), labels.end(), t.label.name()) ==
        labels.end()) {
      labels.push_back(t.label.name());
    }
  }
  return labels;
}

QueryGraph QueryGraph::WithTarget(std::optional<std::size_t> target) const {
  return QueryGraph(vertices_, triples_, target, ask_ && !target);
}

bool IsRankingLiteral(const QueryGraph& g, std::size_t vertex) {
  if (g.vertex(vertex).kind != VertexKind::kLiteral) return false;
  for (const Triple& t : g.triples()) {
    if (t.object == vertex && t.label.is_builtin() &&
        IsRanking(t.label.builtin())) {
      return true;
    }
  }
  return false;
}

namespace {

// Kind code used by both the matcher and the canonical encoding. Variables
// and aggregate results share the variable code: the aggregate-result kind
// is derived from the triples, which every witness bijection preserves.
std::string VertexColor(const QueryGraph& g, std::size_t v) {
  const Vertex& vx = g.vertex(v);
  switch (vx.kind) {
    case VertexKind::kVariable:
    case VertexKind::kAggregateResult:
      return "V";
    case VertexKind::kEntity:
      return "E";
    case VertexKind::kClass:
      return "C";
    case VertexKind::kLiteral:
      return IsRankingLiteral(g, v) ? "L=" + vx.surface : "L";
  }
  return "?";
}

struct Adjacency {
  std::vector<std::size_t> degree;
  std::vector<std::string> color;
  std::map<std::string, std::size_t> label_uses;
};

Adjacency Describe(const QueryGraph& g) {
  Adjacency adj;
  adj.degree.assign(g.num_vertices(), 0);
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    adj.color.push_back(VertexColor(g, v));
  }
  for (const Triple& t : g.triples()) {
    ++adj.degree[t.subject];
    ++adj.degree[t.object];
    if (!t.label.is_builtin()) ++adj.label_uses[t.label.name()];
  }
  return adj;
}

// Backtracking search for an injective triple map from `a` into `b` whose
// induced vertex map f and label map g are injective, kind-preserving and
// fix built-ins. With `exact` the map must also be onto, which together with
// equal sizes is the structural-equivalence condition.
class Matcher {
 public:
  Matcher(const QueryGraph& a, const QueryGraph& b, bool exact)
      : a_(a), b_(b), exact_(exact), da_(Describe(a)), db_(Describe(b)) {
    f_.assign(a.num_vertices(), SIZE_MAX);
    f_inv_.assign(b.num_vertices(), SIZE_MAX);
    used_.assign(b.num_triples(), false);
    order_ = SearchOrder();
  }

  bool Run() { return Extend(0); }

 private:
  // Triples of `a` in BFS order so that each triple after the first shares a
  // vertex with an earlier one where possible.
  std::vector<std::size_t> SearchOrder() const {
    std::vector<std::size_t> order;
    std::vector<bool> taken(a_.num_triples(), false);
    std::vector<bool> seen(a_.num_vertices(), false);
    while (order.size() < a_.num_triples()) {
      std::size_t pick = SIZE_MAX;
      for (std::size_t i = 0; i < a_.num_triples() && pick == SIZE_MAX; ++i) {
        const Triple& t = a_.triples()[i];
        if (!taken[i] && (seen[t.subject] || seen[t.object])) pick = i;
      }
      if (pick == SIZE_MAX) {
        for (std::size_t i = 0; i < a_.num_triples(); ++i) {
          if (!taken[i]) { pick = i; break; }
        }
      }
      taken[pick] = true;
      seen[a_.triples()[pick].subject] = true;
      seen[a_.triples()[pick].object] = true;
      order.push_back(pick);
    }
    return order;
  }

  bool VertexCompatible(std::size_t va, std::size_t vb) const {
    if (f_[va] != SIZE_MAX) return f_[va] == vb;
    if (f_inv_[vb] != SIZE_MAX) return false;
    if (da_.color[va] != db_.color[vb]) {
      // A ranking literal in b may be matched by a plain literal of a when
      // the ranking triple is outside the embedded subset.
      if (exact_ || da_.color[va] != "L" ||
          b_.vertex(vb).kind != VertexKind::kLiteral) {
        return false;
      }
    }
    return exact_ ? da_.degree[va] == db_.degree[vb]
                  : da_.degree[va] <= db_.degree[vb];
  }

  bool Extend(std::size_t depth) {
    if (depth == order_.size()) return true;
    const Triple& ta = a_.triples()[order_[depth]];
    for (std::size_t j = 0; j < b_.num_triples(); ++j) {
      if (used_[j]) continue;
      const Triple& tb = b_.triples()[j];
      if (ta.label.is_builtin() != tb.label.is_builtin()) continue;
      if (ta.label.is_builtin() && ta.label.builtin() != tb.label.builtin()) {
        continue;
      }
      if (!VertexCompatible(ta.subject, tb.subject)) continue;
      if (ta.subject == ta.object) {
        if (tb.subject != tb.object) continue;
      } else if (tb.subject == tb.object) {
        continue;
      }

      // Bind the subject before checking the object so that a fresh subject
      // cannot be claimed twice.
      const bool bind_s = f_[ta.subject] == SIZE_MAX;
      if (bind_s) Bind(ta.subject, tb.subject);
      bool ok = VertexCompatible(ta.object, tb.object);
      const bool bind_o = ok && f_[ta.object] == SIZE_MAX;
      if (bind_o) Bind(ta.object, tb.object);

      bool bind_l = false;
      if (ok && !ta.label.is_builtin()) {
        const std::string& la = ta.label.name();
        const std::string& lb = tb.label.name();
        auto it = g_.find(la);
        if (it != g_.end()) {
          ok = it->second == lb;
        } else if (g_inv_.count(lb) ||
                   (exact_ ? da_.label_uses.at(la) != db_.label_uses.at(lb)
                           : da_.label_uses.at(la) > db_.label_uses.at(lb))) {
          ok = false;
        } else {
          g_[la] = lb;
          g_inv_[lb] = la;
          bind_l = true;
        }
      }

      if (ok) {
        used_[j] = true;
        if (Extend(depth + 1)) return true;
        used_[j] = false;
      }
      if (bind_l) {
        g_inv_.erase(tb.label.name());
        g_.erase(ta.label.name());
      }
      if (bind_o) Unbind(ta.object);
      if (bind_s) Unbind(ta.subject);
    }
    return false;
  }

  void Bind(std::size_t va, std::size_t vb) {
    f_[va] = vb;
    f_inv_[vb] = va;
  }
  void Unbind(std::size_t va) {
    f_inv_[f_[va]] = SIZE_MAX;
    f_[va] = SIZE_MAX;
  }

  const QueryGraph& a_;
  const QueryGraph& b_;
  const bool exact_;
  const Adjacency da_;
  const Adjacency db_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> f_;
  std::vector<std::size_t> f_inv_;
  std::map<std::string, std::string> g_;
  std::map<std::string, std::string> g_inv_;
  std::vector<bool> used_;
};

// Canonical form: colour refinement over vertices and user-defined labels,
// then a branch-and-bound search over triple orderings compatible with the
// refined colours, keeping the lexicographically least encoding.
struct CanonicalForm {
  std::string encoding;
  std::vector<std::size_t> vertex_order;  // canonical index -> vertex id
  std::vector<std::string> label_order;   // canonical index -> label name
};

class Canonicalizer {
 public:
  explicit Canonicalizer(const QueryGraph& g) : g_(g) {
    labels_ = g.UserLabels();
    for (std::size_t i = 0; i < labels_.size(); ++i) label_id_[labels_[i]] = i;
    Refine();
    for (std::size_t i = 0; i < g.num_triples(); ++i) {
      const Triple& t = g.triples()[i];
      triple_color_.push_back({vcolor_[t.subject], LabelColor(t.label),
                               vcolor_[t.object]});
    }
  }

  CanonicalForm Run() {
    State state;
    state.vertex_index.assign(g_.num_vertices(), SIZE_MAX);
    state.label_index.assign(labels_.size(), SIZE_MAX);
    Search(state, std::vector<bool>(g_.num_triples(), false), 0);
    return best_;
  }

 private:
  using TripleColor = std::tuple<std::size_t, std::string, std::size_t>;

  struct State {
    std::vector<std::string> tokens;
    std::vector<std::size_t> vertex_index;
    std::vector<std::size_t> label_index;
    std::vector<std::size_t> vertex_order;
    std::vector<std::string> label_order;
  };

  std::string LabelColor(const EdgeLabel& label) const {
    if (label.is_builtin()) return std::string(BuiltInName(label.builtin()));
    return fmt::format("U{}", lcolor_[label_id_.at(label.name())]);
  }

  void Refine() {
    const std::size_t nv = g_.num_vertices();
    std::vector<std::string> initial(nv);
    for (std::size_t v = 0; v < nv; ++v) initial[v] = VertexColor(g_, v);
    vcolor_ = Compress(initial);
    lcolor_.assign(labels_.size(), 0);
    std::size_t classes = CountClasses();
    while (true) {
      std::vector<std::vector<std::string>> vsig(nv);
      std::vector<std::vector<std::string>> lsig(labels_.size());
      for (const Triple& t : g_.triples()) {
        const std::string lc = LabelColor(t.label);
        vsig[t.subject].push_back(fmt::format(">{}:{}", lc, vcolor_[t.object]));
        vsig[t.object].push_back(fmt::format("<{}:{}", lc, vcolor_[t.subject]));
        if (!t.label.is_builtin()) {
          lsig[label_id_.at(t.label.name())].push_back(
              fmt::format("{}:{}", vcolor_[t.subject], vcolor_[t.object]));
        }
      }
      std::vector<std::string> vnext(nv), lnext(labels_.size());
      for (std::size_t v = 0; v < nv; ++v) {
        std::sort(vsig[v].begin(), vsig[v].end());
        vnext[v] = fmt::format("{}|{}", vcolor_[v], fmt::join(vsig[v], ","));
      }
      for (std::size_t l = 0; l < labels_.size(); ++l) {
        std::sort(lsig[l].begin(), lsig[l].end());
        lnext[l] = fmt::format("{}|{}", lcolor_[l], fmt::join(lsig[l], ","));
      }
      vcolor_ = Compress(vnext);
      lcolor_ = Compress(lnext);
      const std::size_t next_classes = CountClasses();
      if (next_classes == classes) break;
      classes = next_classes;
    }
  }

  static std::vector<std::size_t> Compress(
      const std::vector<std::string>& signatures) {
    std::vector<std::string> sorted = signatures;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::size_t> out;
    out.reserve(signatures.size());
    for (const std::string& s : signatures) {
      out.push_back(std::lower_bound(sorted.begin(), sorted.end(), s) -
                    sorted.begin());
    }
    return out;
  }

  std::size_t CountClasses() const {
    std::set<std::size_t> v(vcolor_.begin(), vcolor_.end());
    std::set<std::size_t> l(lcolor_.begin(), lcolor_.end());
    return v.size() + l.size();
  }

  std::string VertexToken(State& s, std::size_t v) const {
    if (s.vertex_index[v] != SIZE_MAX) {
      return fmt::format("{}", s.vertex_index[v]);
    }
    s.vertex_index[v] = s.vertex_order.size();
    s.vertex_order.push_back(v);
    return fmt::format("{}[{}]", s.vertex_index[v], VertexColor(g_, v));
  }

  std::string TripleToken(State& s, const Triple& t) const {
    std::string subject = VertexToken(s, t.subject);
    std::string label;
    if (t.label.is_builtin()) {
      label = std::string(BuiltInName(t.label.builtin()));
    } else {
      const std::size_t id = label_id_.at(t.label.name());
      if (s.label_index[id] == SIZE_MAX) {
        s.label_index[id] = s.label_order.size();
        s.label_order.push_back(t.label.name());
      }
      label = fmt::format("P{}", s.label_index[id]);
    }
    std::string object = VertexToken(s, t.object);
    return fmt::format("{} {} {}", subject, label, object);
  }

  // Compares the partial encoding against the best complete one. Returns
  // <0, 0 or >0 like strcmp on the common prefix.
  int CompareToBest(const State& s) const {
    if (best_tokens_.empty()) return -1;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const int c = s.tokens[i].compare(best_tokens_[i]);
      if (c != 0) return c;
    }
    return 0;
  }

  void Search(const State& state, std::vector<bool> used, std::size_t depth) {
    if (depth == g_.num_triples()) {
      if (best_tokens_.empty() || CompareToBest(state) < 0) {
        best_tokens_ = state.tokens;
        best_.encoding = fmt::format("{}", fmt::join(state.tokens, " ; "));
        best_.vertex_order = state.vertex_order;
        best_.label_order = state.label_order;
      }
      return;
    }
    // Next group: unused triples with the least refined colour.
    std::optional<TripleColor> least;
    for (std::size_t i = 0; i < g_.num_triples(); ++i) {
      if (!used[i] && (!least || triple_color_[i] < *least)) {
        least = triple_color_[i];
      }
    }
    // Only candidates producing the least next token can start a minimum.
    std::vector<std::pair<std::size_t, State>> branches;
    std::string least_token;
    for (std::size_t i = 0; i < g_.num_triples(); ++i) {
      if (used[i] || triple_color_[i] != *least) continue;
      State next = state;
      std::string token = TripleToken(next, g_.triples()[i]);
      if (!branches.empty() && token > least_token) continue;
      if (branches.empty() || token < least_token) {
        branches.clear();
        least_token = token;
      }
      next.tokens.push_back(std::move(token));
      branches.emplace_back(i, std::move(next));
    }
    for (auto& [i, next] : branches) {
      if (CompareToBest(next) > 0) continue;
      used[i] = true;
      Search(next, used, depth + 1);
      used[i] = false;
    }
  }

  const QueryGraph& g_;
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> label_id_;
  std::vector<std::size_t> vcolor_;
  std::vector<std::size_t> lcolor_;
  std::vector<TripleColor> triple_color_;
  std::vector<std::string> best_tokens_;
  CanonicalForm best_;
};

}  // namespace

bool IsEquivalent(const QueryGraph& a, const QueryGraph& b) {
  if (a.num_triples() != b.num_triples() ||
      a.num_vertices() != b.num_vertices() ||
      a.UserLabels().size() != b.UserLabels().size()) {
    return false;
  }
  return Matcher(a, b, /*exact=*/true).Run();
}

bool IsSubstructure(const QueryGraph& a, const QueryGraph& b) {
  if (a.num_triples() > b.num_triples() ||
      a.num_vertices() > b.num_vertices()) {
    return false;
  }
  return Matcher(a, b, /*exact=*/false).Run();
}

StructureKey CanonicalKey(const QueryGraph& g) {
  CanonicalForm form = Canonicalizer(g).Run();
  return StructureKey{std::move(form.encoding), g.num_triples(),
                      g.AggregationCount()};
}

QueryGraph ToStructure(const QueryGraph& g) {
  const CanonicalForm form = Canonicalizer(g).Run();
  std::vector<std::size_t> new_id(g.num_vertices());
  std::vector<Vertex> vertices;
  std::size_t entities = 0, classes = 0, literals = 0;
  for (std::size_t i = 0; i < form.vertex_order.size(); ++i) {
    const std::size_t old = form.vertex_order[i];
    new_id[old] = i;
    Vertex v = g.vertex(old);
    switch (v.kind) {
      case VertexKind::kEntity:
        v.surface = fmt::format("Ent{}", ++entities);
        break;
      case VertexKind::kClass:
        v.surface = fmt::format("Class{}", ++classes);
        break;
      case VertexKind::kLiteral:
        if (!IsRankingLiteral(g, old)) {
          v.surface = fmt::format("Lit{}", ++literals);
        }
        break;
      default:
        break;
    }
    vertices.push_back(std::move(v));
  }
  std::map<std::string, std::string> label_name;
  for (std::size_t i = 0; i < form.label_order.size(); ++i) {
    label_name[form.label_order[i]] = fmt::format("Prop{}", i + 1);
  }
  // Triples in canonical order: sort by the new ids so the representative
  // serializes identically for every member of the class.
  std::vector<Triple> triples;
  for (const Triple& t : g.triples()) {
    triples.push_back(Triple{new_id[t.subject],
                             t.label.is_builtin()
                                 ? t.label
                                 : EdgeLabel::UserDefined(
                                       label_name.at(t.label.name())),
                             new_id[t.object]});
  }
  std::sort(triples.begin(), triples.end(),
            [](const Triple& x, const Triple& y) {
              return std::tie(x.subject, x.label, x.object) <
                     std::tie(y.subject, y.label, y.object);
            });
  std::optional<std::size_t> target;
  if (g.target()) target = new_id[*g.target()];
  return QueryGraph(std::move(vertices), std::move(triples), target, g.ask());
}

std::string DebugString(const QueryGraph& g) {
  std::vector<std::string> parts;
  auto term = [&](std::size_t v) {
    const Vertex& vx = g.vertex(v);
    return vx.is_variable() ? fmt::format("?v{}", v) : vx.surface;
  };
  for (const Triple& t : g.triples()) {
    parts.push_back(fmt::format("{} {} {}", term(t.subject),
                                t.label.ToString(), term(t.object)));
  }
  return fmt::format("{{{}}}", fmt::join(parts, " . "));
}

}  // namespace qgen
