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

// In-memory fact store, schema metadata, and a query graph executor.

#ifndef QGEN_KB_H_
#define QGEN_KB_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qgen/query_graph.h"
#include "qgen/sparql.h"

namespace qgen {

// A malformed KB or schema line. line() is 1-based.
class KbParseError : public ParseError {
 public:
  KbParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NonNumericAggregate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SymbolId = std::uint32_t;

struct Fact {
  SymbolId subject = 0;
  SymbolId property = 0;
  SymbolId object = 0;

  auto operator<=>(const Fact&) const = default;
};

// Symbols use the same normalized spelling as parsed queries: compact IRIs
// and literal lexical forms with the datatype IRI compacted.
class KnowledgeBase {
 public:
  KnowledgeBase();

  // Tab-separated subject, property, object per line. `a` abbreviates
  // rdf:type; blank lines and lines starting with '#' are skipped.
  static KnowledgeBase FromFile(const std::string& path,
                                const PrefixTable& prefixes =
                                    PrefixTable::Default());
  static KnowledgeBase FromString(std::string_view text,
                                  const PrefixTable& prefixes =
                                      PrefixTable::Default());

  // Lines `domain <prop> <class>`, `range <prop> <class>` and
  // `disjoint <class> <class>`, whitespace separated.
  void LoadSchemaFile(const std::string& path,
                      const PrefixTable& prefixes = PrefixTable::Default());
  void LoadSchemaString(std::string_view text,
                        const PrefixTable& prefixes = PrefixTable::Default());

  // Terms are already normalized. Returns false for a duplicate.
  bool AddFact(std::string_view subject, std::string_view property,
               std::string_view object);
  void SetDomain(std::string_view property, std::string_view cls);
  void SetRange(std::string_view property, std::string_view cls);
  void AddDisjoint(std::string_view a, std::string_view b);

  std::size_t num_facts() const { return facts_.size(); }
  std::size_t num_symbols() const { return symbols_.size(); }
  const std::vector<Fact>& facts() const { return facts_; }
  const std::string& symbol(SymbolId id) const { return symbols_.at(id); }
  std::optional<SymbolId> Find(std::string_view symbol) const;
  bool IsLiteral(SymbolId id) const;
  SymbolId type_property() const { return type_property_; }

  const std::set<SymbolId>& TypesOf(SymbolId entity) const;
  std::optional<SymbolId> Domain(SymbolId property) const;
  std::optional<SymbolId> Range(SymbolId property) const;
  bool Disjoint(SymbolId a, SymbolId b) const;
  bool has_schema() const {
    return !domains_.empty() || !ranges_.empty() || !disjoint_.empty();
  }

  // Facts matching the bound positions; unbound positions are nullopt.
  // Returns indices into facts().
  std::vector<std::size_t> Match(std::optional<SymbolId> s, SymbolId p,
                                 std::optional<SymbolId> o) const;

  // All facts with property p.
  const std::vector<std::size_t>& WithProperty(SymbolId p) const;

  // Every symbol used as a property.
  std::vector<SymbolId> Properties() const;

 private:
  SymbolId Intern(std::string_view symbol);
  static std::uint64_t Pair(SymbolId a, SymbolId b) {
    return std::uint64_t{a} << 32 | b;
  }

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, SymbolId> ids_;
  std::vector<Fact> facts_;
  std::set<Fact> fact_set_;
  std::unordered_map<SymbolId, std::vector<std::size_t>> by_p_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_ps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_po_;
  std::unordered_map<SymbolId, std::set<SymbolId>> types_;
  std::unordered_map<SymbolId, SymbolId> domains_;
  std::unordered_map<SymbolId, SymbolId> ranges_;
  std::set<std::pair<SymbolId, SymbolId>> disjoint_;
  SymbolId type_property_ = 0;
};

// Target bindings of a query. Aggregate answers are a single value; ASK
// queries answer {"true"} or {"false"}.
struct AnswerSet {
  std::set<std::string> values;
  bool aggregate = false;

  bool empty() const { return values.empty(); }
  bool operator==(const AnswerSet&) const = default;
};

// Evaluates the basic graph pattern (user-defined and ISA triples), then
// MAXATN/MINATN row selection, then COUNT/AVG/MAX/MIN over the distinct
// bindings of the aggregated variable. A pattern without matches yields an
// empty set, also for aggregate targets.
AnswerSet Execute(const QueryGraph& q, const KnowledgeBase& kb);

// False when a declared domain or range contradicts a constant's types, or
// when the classes collected on one variable include a disjoint pair.
bool CheckDomainRange(const QueryGraph& q, const KnowledgeBase& kb);

// Parses a literal or bare number as a decimal.
std::optional<double> NumericValue(std::string_view literal);

}  // namespace qgen

#endif  // QGEN_KB_H_
