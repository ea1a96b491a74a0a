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

#include "qgen/kb.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace qgen {
namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

bool LooksNumeric(std::string_view term) {
  if (term.empty()) return false;
  const char c = term.front();
  return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

std::string NormalizeTerm(std::string_view term, const PrefixTable& prefixes) {
  if (term.front() == '"') {
    const auto caret = term.rfind("^^");
    const auto close = term.rfind('"');
    if (close == 0) throw SyntaxError("unterminated literal");
    if (caret != std::string_view::npos && caret > close) {
      return std::string(term.substr(0, caret + 2)) +
             prefixes.NormalizeIri(term.substr(caret + 2));
    }
    return std::string(term);
  }
  if (LooksNumeric(term)) {
    if (!NumericValue(term)) throw SyntaxError("bad number");
    return std::string(term);
  }
  return prefixes.NormalizeIri(term);
}

}  // namespace

KbParseError::KbParseError(std::size_t line, const std::string& message)
    : ParseError(fmt::format("line {}: {}", line, message)), line_(line) {}

std::optional<double> NumericValue(std::string_view literal) {
  if (!literal.empty() && literal.front() == '"') {
    const auto close = literal.find('"', 1);
    if (close == std::string_view::npos) return std::nullopt;
    literal = literal.substr(1, close - 1);
  }
  if (!literal.empty() && literal.front() == '+') literal.remove_prefix(1);
  if (literal.empty()) return std::nullopt;
  double value = 0;
  const char* end = literal.data() + literal.size();
  auto [ptr, ec] = std::from_chars(literal.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

KnowledgeBase::KnowledgeBase() { type_property_ = Intern("rdf:type"); }

KnowledgeBase KnowledgeBase::FromFile(const std::string& path,
                                      const PrefixTable& prefixes) {
  KnowledgeBase kb = FromString(ReadFile(path), prefixes);
  spdlog::info("loaded {}: {} facts, {} symbols", path, kb.num_facts(),
               kb.num_symbols());
  return kb;
}

KnowledgeBase KnowledgeBase::FromString(std::string_view text,
                                        const PrefixTable& prefixes) {
  KnowledgeBase kb;
  std::size_t line_no = 0;
  for (std::string_view line : Lines(text)) {
    ++line_no;
    if (Trim(line).empty() || Trim(line).front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(Trim(line.substr(start, tab - start)));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 ||
        std::any_of(fields.begin(), fields.end(),
                    [](std::string_view f) { return f.empty(); })) {
      throw KbParseError(line_no, "expected subject<TAB>property<TAB>object");
    }
    try {
      const std::string s = prefixes.NormalizeIri(fields[0]);
      const std::string p =
          fields[1] == "a" ? "rdf:type" : prefixes.NormalizeIri(fields[1]);
      kb.AddFact(s, IsRdfType(p) ? "rdf:type" : p,
                 NormalizeTerm(fields[2], prefixes));
    } catch (const SyntaxError& e) {
      throw KbParseError(line_no, e.what());
    }
  }
  return kb;
}

void KnowledgeBase::LoadSchemaFile(const std::string& path,
                                   const PrefixTable& prefixes) {
  LoadSchemaString(ReadFile(path), prefixes);
  spdlog::info("loaded schema {}: {} domains, {} ranges, {} disjoint pairs",
               path, domains_.size(), ranges_.size(), disjoint_.size() / 2);
}

void KnowledgeBase::LoadSchemaString(std::string_view text,
                                     const PrefixTable& prefixes) {
  std::size_t line_no = 0;
  for (std::string_view line : Lines(text)) {
    ++line_no;
    std::istringstream in{std::string(line)};
    std::string kind, a, b, extra;
    if (!(in >> kind) || kind[0] == '#') continue;
    if (!(in >> a >> b) || (in >> extra)) {
      throw KbParseError(line_no, "expected three fields");
    }
    try {
      const std::string na = prefixes.NormalizeIri(a);
      const std::string nb = prefixes.NormalizeIri(b);
      if (kind == "domain") {
        SetDomain(na, nb);
      } else if (kind == "range") {
        SetRange(na, nb);
      } else if (kind == "disjoint") {
        AddDisjoint(na, nb);
      } else {
        throw KbParseError(line_no, "unknown schema directive " + kind);
      }
    } catch (const SyntaxError& e) {
      throw KbParseError(line_no, e.what());
    }
  }
}

SymbolId KnowledgeBase::Intern(std::string_view symbol) {
  auto it = ids_.find(std::string(symbol));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<SymbolId>(symbols_.size());
  symbols_.emplace_back(symbol);
  ids_.emplace(symbols_.back(), id);
  return id;
}

std::optional<SymbolId> KnowledgeBase::Find(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeBase::IsLiteral(SymbolId id) const {
  const std::string& s = symbols_.at(id);
  return s.front() == '"' || LooksNumeric(s);
}

bool KnowledgeBase::AddFact(std::string_view subject,
                            std::string_view property,
                            std::string_view object) {
  const Fact f{Intern(subject), Intern(property), Intern(object)};
  if (!fact_set_.insert(f).second) return false;
  const std::size_t index = facts_.size();
  facts_.push_back(f);
  by_p_[f.property].push_back(index);
  by_ps_[Pair(f.property, f.subject)].push_back(index);
  by_po_[Pair(f.property, f.object)].push_back(index);
  if (f.property == type_property_) types_[f.subject].insert(f.object);
  return true;
}

void KnowledgeBase::SetDomain(std::string_view property, std::string_view cls) {
  const SymbolId p = Intern(property);
  domains_[p] = Intern(cls);
}

void KnowledgeBase::SetRange(std::string_view property, std::string_view cls) {
  const SymbolId p = Intern(property);
  ranges_[p] = Intern(cls);
}

void KnowledgeBase::AddDisjoint(std::string_view a, std::string_view b) {
  const SymbolId ia = Intern(a);
  const SymbolId ib = Intern(b);
  disjoint_.insert({ia, ib});
  disjoint_.insert({ib, ia});
}

const std::set<SymbolId>& KnowledgeBase::TypesOf(SymbolId entity) const {
  static const std::set<SymbolId> kNone;
  auto it = types_.find(entity);
  return it == types_.end() ? kNone : it->second;
}

std::optional<SymbolId> KnowledgeBase::Domain(SymbolId property) const {
  auto it = domains_.find(property);
  if (it == domains_.end()) return std::nullopt;
  return it->second;
}

std::optional<SymbolId> KnowledgeBase::Range(SymbolId property) const {
  auto it = ranges_.find(property);
  if (it == ranges_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeBase::Disjoint(SymbolId a, SymbolId b) const {
  return disjoint_.count({a, b}) > 0;
}

std::vector<std::size_t> KnowledgeBase::Match(std::optional<SymbolId> s,
                                              SymbolId p,
                                              std::optional<SymbolId> o) const {
  static const std::vector<std::size_t> kNone;
  const std::vector<std::size_t>* pool = &kNone;
  if (s) {
    auto it = by_ps_.find(Pair(p, *s));
    if (it != by_ps_.end()) pool = &it->second;
  } else if (o) {
    auto it = by_po_.find(Pair(p, *o));
    if (it != by_po_.end()) pool = &it->second;
  } else {
    pool = &WithProperty(p);
  }
  if (!s || !o) return *pool;
  std::vector<std::size_t> out;
  for (std::size_t i : *pool) {
    if (facts_[i].object == *o) out.push_back(i);
  }
  return out;
}

const std::vector<std::size_t>& KnowledgeBase::WithProperty(SymbolId p) const {
  static const std::vector<std::size_t> kNone;
  auto it = by_p_.find(p);
  return it == by_p_.end() ? kNone : it->second;
}

std::vector<SymbolId> KnowledgeBase::Properties() const {
  std::vector<SymbolId> out;
  for (const auto& [p, list] : by_p_) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct PatternTriple {
  std::size_t subject;
  std::optional<SymbolId> property;  // nullopt: absent from the KB
  std::size_t object;
};

// Distinct solutions of the basic graph pattern as rows over `vars`.
class Join {
 public:
  Join(const KnowledgeBase& kb, std::vector<PatternTriple> triples,
       std::vector<std::optional<SymbolId>> bound)
      : kb_(kb), triples_(std::move(triples)), bound_(std::move(bound)),
        used_(triples_.size(), false) {}

  std::set<std::vector<SymbolId>> Run(const std::vector<std::size_t>& vars) {
    vars_ = vars;
    for (const PatternTriple& t : triples_) {
      if (!t.property) return {};
    }
    Step(0);
    return std::move(rows_);
  }

 private:
  void Step(std::size_t depth) {
    if (depth == triples_.size()) {
      std::vector<SymbolId> row;
      row.reserve(vars_.size());
      for (std::size_t v : vars_) row.push_back(*bound_[v]);
      rows_.insert(std::move(row));
      return;
    }
    // Most-bound triple first.
    std::size_t best = triples_.size();
    int best_bound = -1;
    for (std::size_t i = 0; i < triples_.size(); ++i) {
      if (used_[i]) continue;
      const int b = static_cast<int>(bound_[triples_[i].subject].has_value()) +
                    static_cast<int>(bound_[triples_[i].object].has_value());
      if (b > best_bound) {
        best = i;
        best_bound = b;
      }
    }
    const PatternTriple& t = triples_[best];
    used_[best] = true;
    const std::optional<SymbolId> s = bound_[t.subject];
    const std::optional<SymbolId> o = bound_[t.object];
    for (std::size_t fi : kb_.Match(s, *t.property, o)) {
      const Fact& f = kb_.facts()[fi];
      if (!s) bound_[t.subject] = f.subject;
      if (!o) {
        if (bound_[t.object] && *bound_[t.object] != f.object) {
          // Self-loop: subject and object are the same vertex.
          bound_[t.subject] = s;
          continue;
        }
        bound_[t.object] = f.object;
      }
      Step(depth + 1);
      bound_[t.subject] = s;
      bound_[t.object] = o;
    }
    used_[best] = false;
  }

  const KnowledgeBase& kb_;
  std::vector<PatternTriple> triples_;
  std::vector<std::optional<SymbolId>> bound_;
  std::vector<bool> used_;
  std::vector<std::size_t> vars_;
  std::set<std::vector<SymbolId>> rows_;
};

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace

AnswerSet Execute(const QueryGraph& q, const KnowledgeBase& kb) {
  const std::size_t n = q.num_vertices();
  std::vector<PatternTriple> pattern;
  std::vector<const Triple*> aggregates;
  std::vector<const Triple*> rankings;
  std::vector<bool> in_pattern(n, false);
  for (const Triple& t : q.triples()) {
    if (t.label.is_builtin() && t.label.builtin() != BuiltIn::kIsA) {
      (IsRanking(t.label.builtin()) ? rankings : aggregates).push_back(&t);
      continue;
    }
    const std::optional<SymbolId> p =
        t.label.is_builtin() ? std::optional<SymbolId>(kb.type_property())
                             : kb.Find(t.label.name());
    pattern.push_back({t.subject, p, t.object});
    in_pattern[t.subject] = in_pattern[t.object] = true;
  }

  for (const Triple* t : aggregates) {
    if (!in_pattern[t->subject]) {
      throw UnboundTarget("aggregated variable is not bound by the pattern");
    }
  }
  for (const Triple* t : rankings) {
    if (!in_pattern[t->subject]) {
      throw UnboundTarget("ranked variable is not bound by the pattern");
    }
  }
  const Triple* target_aggregate = nullptr;
  if (q.target()) {
    const std::size_t target = *q.target();
    for (const Triple* t : aggregates) {
      if (t->object == target) target_aggregate = t;
    }
    if (!target_aggregate && !in_pattern[target]) {
      throw UnboundTarget("target is not bound by the pattern");
    }
  } else if (!q.ask()) {
    throw UnboundTarget("query has no target");
  }

  AnswerSet answers;
  answers.aggregate = target_aggregate != nullptr;
  auto no_rows = [&] {
    if (q.ask()) answers.values = {"false"};
    return answers;
  };

  std::vector<std::optional<SymbolId>> bound(n);
  std::vector<std::size_t> vars;
  std::vector<long> column(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (!in_pattern[v]) continue;
    if (q.vertex(v).is_variable()) {
      column[v] = static_cast<long>(vars.size());
      vars.push_back(v);
      continue;
    }
    bound[v] = kb.Find(q.vertex(v).surface);
    if (!bound[v]) return no_rows();
  }
  const std::set<std::vector<SymbolId>> solutions =
      Join(kb, std::move(pattern), std::move(bound)).Run(vars);
  std::vector<std::vector<SymbolId>> rows(solutions.begin(), solutions.end());

  for (const Triple* t : rankings) {
    if (rows.empty()) break;
    const std::string& n_text = q.vertex(t->object).surface;
    const std::optional<double> nv = NumericValue(n_text);
    if (!nv || *nv < 1 || *nv != static_cast<long>(*nv)) {
      throw std::invalid_argument("ranking offset must be a positive integer");
    }
    const auto offset = static_cast<std::size_t>(*nv) - 1;
    const auto col = static_cast<std::size_t>(column[t->subject]);
    bool numeric = true;
    for (const auto& row : rows) {
      numeric = numeric && NumericValue(kb.symbol(row[col])).has_value();
    }
    if (!numeric) {
      spdlog::debug("ranking over non-numeric values; comparing lexically");
    }
    const bool descending = t->label.builtin() == BuiltIn::kMaxAtN;
    auto row_key = [&](const std::vector<SymbolId>& row) {
      std::vector<std::string> key;
      for (SymbolId id : row) key.push_back(kb.symbol(id));
      return key;
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const auto& a,
                                                   const auto& b) {
      const std::string& sa = kb.symbol(a[col]);
      const std::string& sb = kb.symbol(b[col]);
      if (sa != sb) {
        if (numeric) {
          const double da = *NumericValue(sa);
          const double db = *NumericValue(sb);
          if (da != db) return descending ? da > db : da < db;
        } else {
          return descending ? sa > sb : sa < sb;
        }
      }
      return row_key(a) < row_key(b);
    });
    if (offset >= rows.size()) {
      rows.clear();
    } else {
      rows = {rows[offset]};
    }
  }

  if (rows.empty()) return no_rows();
  if (q.ask()) {
    answers.values = {"true"};
    return answers;
  }
  if (!target_aggregate) {
    const auto col = static_cast<std::size_t>(column[*q.target()]);
    for (const auto& row : rows) answers.values.insert(kb.symbol(row[col]));
    return answers;
  }

  const auto col = static_cast<std::size_t>(column[target_aggregate->subject]);
  std::set<SymbolId> distinct;
  for (const auto& row : rows) distinct.insert(row[col]);
  const BuiltIn op = target_aggregate->label.builtin();
  if (op == BuiltIn::kCount) {
    answers.values = {std::to_string(distinct.size())};
    return answers;
  }
  std::vector<std::pair<double, SymbolId>> values;
  for (SymbolId id : distinct) {
    const std::optional<double> v = NumericValue(kb.symbol(id));
    if (!v) {
      throw NonNumericAggregate(fmt::format("{} over non-numeric value {}",
                                            BuiltInName(op), kb.symbol(id)));
    }
    values.emplace_back(*v, id);
  }
  if (op == BuiltIn::kAvg) {
    double sum = 0;
    for (const auto& [v, id] : values) sum += v;
    answers.values = {FormatDouble(sum / static_cast<double>(values.size()))};
  } else {
    const auto it = op == BuiltIn::kMax
                        ? std::max_element(values.begin(), values.end())
                        : std::min_element(values.begin(), values.end());
    answers.values = {FormatDouble(it->first)};
  }
  return answers;
}

bool CheckDomainRange(const QueryGraph& q, const KnowledgeBase& kb) {
  std::map<std::size_t, std::set<SymbolId>> constraints;
  // A constant conflicts with a required class when it has known types and
  // none of them is that class.
  auto constant_ok = [&](std::size_t v, SymbolId cls) {
    const Vertex& vx = q.vertex(v);
    if (vx.kind != VertexKind::kEntity) return true;
    const std::optional<SymbolId> id = kb.Find(vx.surface);
    if (!id) return true;
    const std::set<SymbolId>& types = kb.TypesOf(*id);
    return types.empty() || types.count(cls) > 0;
  };
  auto require = [&](std::size_t v, SymbolId cls) {
    if (q.vertex(v).is_variable()) {
      constraints[v].insert(cls);
      return true;
    }
    return constant_ok(v, cls);
  };
  for (const Triple& t : q.triples()) {
    if (t.label.is_builtin()) {
      if (t.label.builtin() == BuiltIn::kIsA &&
          q.vertex(t.subject).is_variable()) {
        if (auto cls = kb.Find(q.vertex(t.object).surface)) {
          constraints[t.subject].insert(*cls);
        }
      }
      continue;
    }
    const std::optional<SymbolId> p = kb.Find(t.label.name());
    if (!p) continue;
    if (auto d = kb.Domain(*p); d && !require(t.subject, *d)) return false;
    if (q.vertex(t.object).kind == VertexKind::kLiteral) continue;
    if (auto r = kb.Range(*p); r && !require(t.object, *r)) return false;
  }
  for (const auto& [v, classes] : constraints) {
    for (SymbolId a : classes) {
      for (SymbolId b : classes) {
        if (a < b && kb.Disjoint(a, b)) return false;
      }
    }
  }
  return true;
}

}  // namespace qgen
