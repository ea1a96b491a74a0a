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

#include "qgen/grounding.h"

#include <algorithm>
#include <future>
#include <thread>

#include <fmt/format.h>

#include "qgen/sparql.h"

namespace qgen {

std::vector<Slot> SlotsOf(const QueryGraph& structure) {
  std::vector<Slot> slots;
  for (std::size_t v = 0; v < structure.num_vertices(); ++v) {
    const Vertex& vx = structure.vertex(v);
    switch (vx.kind) {
      case VertexKind::kEntity:
        slots.push_back({vx.surface, LinkKind::kEntity, v});
        break;
      case VertexKind::kClass:
        slots.push_back({vx.surface, LinkKind::kClass, v});
        break;
      case VertexKind::kLiteral:
        if (!IsRankingLiteral(structure, v)) {
          slots.push_back({vx.surface, LinkKind::kLiteral, v});
        }
        break;
      default:
        break;
    }
  }
  for (const std::string& label : structure.UserLabels()) {
    slots.push_back({label, LinkKind::kProperty, std::nullopt});
  }
  return slots;
}

AssignmentEnumerator::AssignmentEnumerator(const std::vector<Slot>& slots,
                                           const Linking& links) {
  for (const Slot& slot : slots) {
    std::vector<Option> opts;
    for (std::size_t m = 0; m < links.size(); ++m) {
      if (links[m].kind != slot.kind) continue;
      for (std::size_t c = 0; c < links[m].candidates.size(); ++c) {
        opts.push_back({m, c, links[m].candidates[c].score});
      }
    }
    std::stable_sort(opts.begin(), opts.end(),
                     [](const Option& a, const Option& b) {
                       return a.score > b.score;
                     });
    if (opts.empty()) return;
    options_.push_back(std::move(opts));
  }
  std::vector<std::size_t> start(options_.size(), 0);
  seen_.insert(start);
  frontier_.insert({Score(start), std::move(start)});
}

double AssignmentEnumerator::Score(const std::vector<std::size_t>& idx) const {
  double score = 1.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    score *= options_[i][idx[i]].score;
  }
  return score;
}

std::optional<Assignment> AssignmentEnumerator::Next(std::size_t budget) {
  while (!frontier_.empty() && examined_ < budget) {
    auto node = frontier_.extract(frontier_.begin());
    const std::vector<std::size_t>& idx = node.value().second;
    ++examined_;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] + 1 >= options_[i].size()) continue;
      std::vector<std::size_t> next = idx;
      ++next[i];
      if (seen_.insert(next).second) {
        const double s = Score(next);
        frontier_.insert({s, std::move(next)});
      }
    }
    Assignment a;
    a.score = node.value().first;
    std::set<std::size_t> used;
    bool injective = true;
    for (std::size_t i = 0; i < idx.size() && injective; ++i) {
      const Option& o = options_[i][idx[i]];
      injective = used.insert(o.mention).second;
      a.choices.emplace_back(o.mention, o.candidate);
    }
    if (injective) return a;
  }
  return std::nullopt;
}

bool ValidateGrammar(const QueryGraph& q) {
  std::vector<std::size_t> uses(q.num_vertices(), 0);
  for (const Triple& t : q.triples()) {
    ++uses[t.subject];
    ++uses[t.object];
    const VertexKind sk = q.vertex(t.subject).kind;
    const VertexKind ok = q.vertex(t.object).kind;
    const bool subject_node =
        sk == VertexKind::kVariable || sk == VertexKind::kEntity;
    if (!t.label.is_builtin()) {
      if (!subject_node) return false;
      if (ok == VertexKind::kClass || ok == VertexKind::kAggregateResult) {
        return false;
      }
      continue;
    }
    const BuiltIn b = t.label.builtin();
    if (b == BuiltIn::kIsA) {
      if (!subject_node || ok != VertexKind::kClass) return false;
    } else if (IsAggregate(b)) {
      if (sk != VertexKind::kVariable || ok != VertexKind::kAggregateResult) {
        return false;
      }
    } else {
      if (sk != VertexKind::kVariable || ok != VertexKind::kLiteral) {
        return false;
      }
      const auto n = NumericValue(q.vertex(t.object).surface);
      if (!n || *n < 1 || *n != static_cast<double>(static_cast<long>(*n))) {
        return false;
      }
    }
  }
  for (std::size_t v = 0; v < q.num_vertices(); ++v) {
    if (q.vertex(v).kind == VertexKind::kAggregateResult && uses[v] != 1) {
      return false;
    }
  }
  if (!q.IsConnected()) return false;
  if (q.ask()) return !q.target();
  return q.target() && q.vertex(*q.target()).is_variable();
}

namespace {

struct StructureOutcome {
  std::vector<GroundingResult> results;
  std::size_t examined = 0;
};

// A structure seen in training keeps its target. Merged structures have
// none, so every aggregate result (or else every variable) is tried.
std::vector<std::optional<std::size_t>> TargetChoices(const QueryGraph& s) {
  std::vector<std::optional<std::size_t>> out;
  if (s.ask()) return {std::nullopt};
  if (s.target()) return {s.target()};
  bool has_aggregate = false;
  for (const Vertex& v : s.vertices()) {
    has_aggregate = has_aggregate || v.kind == VertexKind::kAggregateResult;
  }
  for (std::size_t v = 0; v < s.num_vertices(); ++v) {
    const VertexKind k = s.vertex(v).kind;
    const bool eligible = has_aggregate ? k == VertexKind::kAggregateResult
                                        : k == VertexKind::kVariable;
    if (eligible) out.push_back(v);
  }
  return out;
}

StructureOutcome GroundStructure(const ScoredStructure& structure,
                                 std::size_t rank, const Linking& links,
                                 const KnowledgeBase& kb,
                                 const GroundingConfig& config) {
  StructureOutcome out;
  const QueryGraph& rep = structure.representative;
  const std::vector<Slot> slots = SlotsOf(rep);
  const auto targets = TargetChoices(rep);
  const std::size_t limit =
      config.per_structure ? std::min(config.per_structure, config.top_k)
                           : config.top_k;
  AssignmentEnumerator it(slots, links);
  while (out.results.size() < limit) {
    const std::optional<Assignment> a = it.Next(config.budget);
    if (!a) break;
    std::map<std::string, std::string> assignment;
    std::vector<Vertex> vertices = rep.vertices();
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto [m, c] = a->choices[i];
      const std::string& symbol = links[m].candidates[c].symbol;
      assignment[slots[i].placeholder] = symbol;
      if (slots[i].vertex) vertices[*slots[i].vertex].surface = symbol;
    }
    std::vector<Triple> triples = rep.triples();
    for (Triple& t : triples) {
      if (!t.label.is_builtin()) {
        t.label = EdgeLabel::UserDefined(assignment.at(t.label.name()));
      }
    }
    for (const auto& target : targets) {
      GroundingResult r;
      try {
        r.query = QueryGraph(vertices, triples, target, rep.ask());
      } catch (const InvalidGraph&) {
        continue;
      }
      if (!ValidateGrammar(r.query) || !CheckDomainRange(r.query, kb)) {
        continue;
      }
      try {
        r.answers = Execute(r.query, kb);
      } catch (const std::exception&) {
        continue;
      }
      if (r.answers.empty()) continue;
      r.key = structure.key;
      r.structure_rank = rank;
      r.assignment = assignment;
      r.score = a->score;
      out.results.push_back(std::move(r));
      if (out.results.size() >= limit) break;
    }
  }
  out.examined = it.examined();
  return out;
}

}  // namespace

std::vector<GroundingResult> Ground(const std::vector<ScoredStructure>& ranked,
                                    const Linking& links,
                                    const KnowledgeBase& kb,
                                    const GroundingConfig& config,
                                    GroundingTrace* trace) {
  std::size_t threads = config.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (trace) trace->examined.assign(ranked.size(), 0);

  std::vector<GroundingResult> results;
  std::set<std::string> emitted;
  for (std::size_t start = 0;
       start < ranked.size() && results.size() < config.top_k;
       start += threads) {
    const std::size_t stop = std::min(ranked.size(), start + threads);
    std::vector<StructureOutcome> outcomes;
    if (stop - start == 1) {
      outcomes.push_back(
          GroundStructure(ranked[start], start, links, kb, config));
    } else {
      std::vector<std::future<StructureOutcome>> running;
      for (std::size_t i = start; i < stop; ++i) {
        running.push_back(std::async(std::launch::async, [&, i] {
          return GroundStructure(ranked[i], i, links, kb, config);
        }));
      }
      for (auto& f : running) outcomes.push_back(f.get());
    }
    // Ordered commit: a structure's results count only if every better
    // ranked structure has been committed first.
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (results.size() >= config.top_k) break;
      if (trace) trace->examined[start + i] = outcomes[i].examined;
      for (GroundingResult& r : outcomes[i].results) {
        if (results.size() >= config.top_k) break;
        if (emitted.insert(SerializeQuery(r.query)).second) {
          results.push_back(std::move(r));
        }
      }
    }
  }
  if (results.empty()) {
    throw NoValidGrounding(fmt::format(
        "no structure among {} could be grounded into a non-empty valid query",
        ranked.size()));
  }
  return results;
}

}  // namespace qgen
