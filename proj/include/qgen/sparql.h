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

// Reader and writer for the SPARQL subset that maps onto query graphs:
//
//   Query      := Prefix* (Select | Ask)
//   Prefix     := PREFIX pname: <iri>
//   Select     := SELECT [DISTINCT|REDUCED] ('*' | Projection+) [WHERE] Group
//                 [ORDER BY Key] [LIMIT 1] [OFFSET k]
//   Projection := ?var | '(' Agg '(' [DISTINCT] ?var ')' AS ?var ')'
//               | Agg '(' [DISTINCT] ?var ')'
//   Agg        := COUNT | AVG | MAX | MIN
//   Key        := (ASC|DESC) '(' ?var ')' | ?var
//   Ask        := ASK [WHERE] Group
//   Group      := '{' Triple ('.' Triple)* ['.'] '}'   (';' and ',' lists ok)
//
// rdf:type (or `a`) becomes ISA with a Class object. `Agg(?u) AS ?c` becomes
// <?u, AGG, ?c>. ORDER BY DESC(?y) LIMIT 1 OFFSET k becomes
// <?y, MAXATN, k+1> (ASC gives MINATN). The first projected item is the
// answer target.

#ifndef QGEN_SPARQL_H_
#define QGEN_SPARQL_H_

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qgen/query_graph.h"

namespace qgen {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public ParseError {
 public:
  using ParseError::ParseError;
};

// FILTER, UNION, OPTIONAL, GROUP BY and the like.
class UnsupportedFeature : public ParseError {
 public:
  using ParseError::ParseError;
};

// Maps prefixes to namespaces. IRIs are stored in compact form: the first
// namespace (longest match) that covers an IRI gives `prefix:local`,
// otherwise `<iri>`.
class PrefixTable {
 public:
  // rdf, rdfs, xsd, owl, foaf, dbo, dbr, dbp and the empty prefix bound to
  // http://example.org/.
  static PrefixTable Default();
  // JSON object {"prefix": "namespace", ...}, added on top of the defaults.
  static PrefixTable FromJsonFile(const std::string& path);

  void Add(std::string prefix, std::string ns);
  bool Has(std::string_view prefix) const;

  // Compact form of an IRI given without angle brackets.
  std::string Compact(std::string_view iri) const;
  // Full IRI for `prefix:local`; throws SyntaxError for unknown prefixes.
  std::string Expand(std::string_view pname) const;
  // Normalizes `<iri>` or `prefix:local` to the compact form.
  std::string NormalizeIri(std::string_view term) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

bool IsRdfType(std::string_view normalized_iri);

QueryGraph ParseQuery(std::string_view text,
                      const PrefixTable& prefixes = PrefixTable::Default());

// Variables are written ?v<id>. Only defined for grounded graphs; placeholder
// surfaces are printed verbatim.
std::string SerializeQuery(const QueryGraph& g);

}  // namespace qgen

#endif  // QGEN_SPARQL_H_
