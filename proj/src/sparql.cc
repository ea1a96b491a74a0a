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

#include "qgen/sparql.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

namespace qgen {

PrefixTable PrefixTable::Default() {
  PrefixTable t;
  t.Add("", "http://example.org/");
  t.Add("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#");
  t.Add("rdfs", "http://www.w3.org/2000/01/rdf-schema#");
  t.Add("xsd", "http://www.w3.org/2001/XMLSchema#");
  t.Add("owl", "http://www.w3.org/2002/07/owl#");
  t.Add("foaf", "http://xmlns.com/foaf/0.1/");
  t.Add("dbo", "http://dbpedia.org/ontology/");
  t.Add("dbr", "http://dbpedia.org/resource/");
  t.Add("dbp", "http://dbpedia.org/property/");
  return t;
}

PrefixTable PrefixTable::FromJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prefix table " + path);
  PrefixTable t = Default();
  for (const auto& [prefix, ns] : nlohmann::json::parse(in).items()) {
    t.Add(prefix, ns.get<std::string>());
  }
  return t;
}

void PrefixTable::Add(std::string prefix, std::string ns) {
  entries_[std::move(prefix)] = std::move(ns);
}

bool PrefixTable::Has(std::string_view prefix) const {
  return entries_.count(std::string(prefix)) > 0;
}

namespace {

bool IsLocalNameChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.' || c == '%' || static_cast<unsigned char>(c) >= 0x80;
}

}  // namespace

std::string PrefixTable::Compact(std::string_view iri) const {
  const std::pair<const std::string, std::string>* best = nullptr;
  for (const auto& entry : entries_) {
    const std::string& ns = entry.second;
    if (iri.size() > ns.size() && iri.substr(0, ns.size()) == ns &&
        (!best || ns.size() > best->second.size())) {
      best = &entry;
    }
  }
  if (best) {
    std::string_view local = iri.substr(best->second.size());
    if (std::all_of(local.begin(), local.end(), IsLocalNameChar) &&
        local.back() != '.') {
      return fmt::format("{}:{}", best->first, local);
    }
  }
  return fmt::format("<{}>", iri);
}

std::string PrefixTable::Expand(std::string_view pname) const {
  const auto colon = pname.find(':');
  if (colon == std::string_view::npos) {
    throw SyntaxError(fmt::format("not a prefixed name: {}", pname));
  }
  auto it = entries_.find(std::string(pname.substr(0, colon)));
  if (it == entries_.end()) {
    throw SyntaxError(fmt::format("unknown prefix in {}", pname));
  }
  return it->second + std::string(pname.substr(colon + 1));
}

std::string PrefixTable::NormalizeIri(std::string_view term) const {
  if (term.size() >= 2 && term.front() == '<' && term.back() == '>') {
    return Compact(term.substr(1, term.size() - 2));
  }
  return Compact(Expand(term));
}

bool IsRdfType(std::string_view normalized_iri) {
  return normalized_iri == "rdf:type" ||
         normalized_iri ==
             "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>";
}

namespace {

enum class Tok { kEnd, kIri, kPname, kVar, kLiteral, kWord, kPunct };

struct Token {
  Tok type = Tok::kEnd;
  std::string text;
  std::size_t offset = 0;
};

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(c));
  return out;
}

const std::set<std::string>& UnsupportedKeywords() {
  static const std::set<std::string> words = {
      "FILTER", "UNION",   "OPTIONAL", "GROUP",   "HAVING",  "MINUS",
      "VALUES", "BIND",    "SERVICE",  "GRAPH",   "CONSTRUCT", "DESCRIBE",
      "FROM",   "SUM",     "SAMPLE",   "GROUP_CONCAT", "EXISTS", "REGEX",
      "BASE"};
  return words;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> Run() {
    std::vector<Token> tokens;
    while (true) {
      SkipSpace();
      if (pos_ >= text_.size()) break;
      tokens.push_back(Next());
      // Reject unsupported constructs before their bodies can trip the lexer.
      const Token& t = tokens.back();
      if (t.type == Tok::kWord && UnsupportedKeywords().count(Upper(t.text))) {
        throw UnsupportedFeature(
            fmt::format("unsupported SPARQL feature {}", Upper(t.text)));
      }
    }
    tokens.push_back(Token{Tok::kEnd, "", text_.size()});
    return tokens;
  }

 private:
  void SkipSpace() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void Fail(std::string_view what) const {
    throw SyntaxError(fmt::format("{} at offset {}", what, pos_));
  }

  Token Next() {
    const std::size_t start = pos_;
    const char c = text_[pos_];
    if (c == '<') {
      const auto end = text_.find('>', pos_);
      if (end == std::string_view::npos) Fail("unterminated IRI");
      pos_ = end + 1;
      return {Tok::kIri, std::string(text_.substr(start, pos_ - start)), start};
    }
    if (c == '?' || c == '$') {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      if (pos_ == start + 1) Fail("empty variable name");
      return {Tok::kVar, "?" + std::string(text_.substr(start + 1, pos_ - start - 1)),
              start};
    }
    if (c == '"' || c == '\'') {
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != c) {
        if (text_[pos_] == '\\') ++pos_;
        ++pos_;
      }
      if (pos_ >= text_.size()) Fail("unterminated string literal");
      ++pos_;
      std::string lexical = "\"" + std::string(text_.substr(start + 1, pos_ - start - 2)) + "\"";
      if (pos_ < text_.size() && text_[pos_] == '@') {
        const std::size_t tag = pos_;
        ++pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '-')) {
          ++pos_;
        }
        lexical += std::string(text_.substr(tag, pos_ - tag));
      } else if (text_.substr(pos_, 2) == "^^") {
        pos_ += 2;
        SkipSpace();
        if (pos_ >= text_.size()) Fail("missing datatype");
        Token dt = Next();
        if (dt.type != Tok::kIri && dt.type != Tok::kPname) Fail("bad datatype");
        lexical += "^^" + dt.text;
      }
      return {Tok::kLiteral, lexical, start};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+') && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
        // A trailing '.' terminates a triple rather than the number.
        if (text_[pos_] == '.' &&
            (pos_ + 1 >= text_.size() ||
             !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
          break;
        }
        ++pos_;
      }
      return {Tok::kLiteral, std::string(text_.substr(start, pos_ - start)), start};
    }
    if (std::string_view("{}().;,*").find(c) != std::string_view::npos) {
      ++pos_;
      return {Tok::kPunct, std::string(1, c), start};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == ':' || c == '_') {
      while (pos_ < text_.size() &&
             (IsLocalNameChar(text_[pos_]) || text_[pos_] == ':')) {
        ++pos_;
      }
      // Names do not end with '.'.
      while (text_[pos_ - 1] == '.') --pos_;
      std::string word(text_.substr(start, pos_ - start));
      if (word.find(':') != std::string::npos) return {Tok::kPname, word, start};
      return {Tok::kWord, word, start};
    }
    Fail(fmt::format("unexpected character '{}'", c));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

struct Term {
  Tok type;
  std::string text;  // variable name, normalized IRI or literal lexical form
};

class Parser {
 public:
  Parser(std::string_view text, const PrefixTable& prefixes)
      : tokens_(Lexer(text).Run()), prefixes_(prefixes) {}

  QueryGraph Run() {
    while (IsWord("PREFIX")) ParsePrefix();
    bool ask = false;
    std::vector<Projection> projection;
    bool star = false;
    if (IsWord("ASK")) {
      Advance();
      ask = true;
      if (IsWord("WHERE")) Advance();
      ParseGroup();
    } else if (IsWord("SELECT")) {
      Advance();
      if (IsWord("DISTINCT") || IsWord("REDUCED")) Advance();
      if (IsPunct("*")) {
        Advance();
        star = true;
      } else {
        while (Peek().type == Tok::kVar || IsPunct("(") || IsAggWord()) {
          projection.push_back(ParseProjection());
        }
        if (projection.empty()) Fail("empty projection");
      }
      if (IsWord("WHERE")) Advance();
      ParseGroup();
      ParseModifiers();
    } else {
      Fail("expected SELECT or ASK");
    }
    if (Peek().type != Tok::kEnd) Fail("trailing input");
    return Build(ask, star, projection);
  }

 private:
  struct Projection {
    std::string variable;                // projected name
    std::optional<BuiltIn> aggregate;    // when an aggregate expression
    std::string argument;                // aggregated variable
  };
  struct RawTriple {
    Term subject;
    std::string predicate;  // normalized IRI, or "" for rdf:type
    Term object;
  };
  struct OrderKey {
    std::string variable;
    bool descending = false;
  };

  const Token& Peek() const { return tokens_[pos_]; }
  const Token& Advance() { return tokens_[pos_++]; }
  bool IsWord(std::string_view w) const {
    return Peek().type == Tok::kWord && Upper(Peek().text) == w;
  }
  bool IsPunct(std::string_view p) const {
    return Peek().type == Tok::kPunct && Peek().text == p;
  }
  bool IsAggWord() const {
    return IsWord("COUNT") || IsWord("AVG") || IsWord("MAX") || IsWord("MIN");
  }
  [[noreturn]] void Fail(std::string_view what) const {
    throw SyntaxError(fmt::format("{} at offset {} near '{}'", what,
                                  Peek().offset, Peek().text));
  }
  void Expect(std::string_view punct) {
    if (!IsPunct(punct)) Fail(fmt::format("expected '{}'", punct));
    Advance();
  }
  std::string ExpectVar() {
    if (Peek().type != Tok::kVar) Fail("expected a variable");
    return Advance().text;
  }

  void ParsePrefix() {
    Advance();
    if (Peek().type != Tok::kPname || Peek().text.back() != ':') {
      Fail("expected a prefix name");
    }
    std::string prefix = Advance().text;
    prefix.pop_back();
    if (Peek().type != Tok::kIri) Fail("expected a namespace IRI");
    const std::string& iri = Advance().text;
    local_prefixes_.emplace_back(prefix, iri.substr(1, iri.size() - 2));
    prefixes_.Add(local_prefixes_.back().first, local_prefixes_.back().second);
  }

  Projection ParseProjection() {
    if (Peek().type == Tok::kVar) return Projection{Advance().text, {}, {}};
    const bool parenthesized = IsPunct("(");
    if (parenthesized) Advance();
    if (!IsAggWord()) Fail("expected an aggregate");
    Projection p;
    p.aggregate = BuiltInFromName(Upper(Advance().text));
    Expect("(");
    if (IsWord("DISTINCT")) Advance();
    p.argument = ExpectVar();
    Expect(")");
    if (parenthesized) {
      if (!IsWord("AS")) Fail("expected AS");
      Advance();
      p.variable = ExpectVar();
      Expect(")");
    } else {
      p.variable = fmt::format("?_agg{}", anonymous_++);
    }
    return p;
  }

  Term ParseTerm() {
    const Token& t = Advance();
    switch (t.type) {
      case Tok::kVar:
        return {Tok::kVar, t.text};
      case Tok::kIri:
      case Tok::kPname:
        return {Tok::kIri, prefixes_.NormalizeIri(t.text)};
      case Tok::kLiteral:
        return {Tok::kLiteral, NormalizeLiteral(t.text)};
      default:
        --pos_;
        Fail("expected a term");
    }
  }

  std::string NormalizeLiteral(const std::string& lexical) const {
    const auto caret = lexical.rfind("^^");
    if (lexical.front() == '"' && caret != std::string::npos) {
      return lexical.substr(0, caret + 2) +
             prefixes_.NormalizeIri(lexical.substr(caret + 2));
    }
    return lexical;
  }

  std::string ParsePredicate() {
    if (Peek().type == Tok::kWord && Peek().text == "a") {
      Advance();
      return "";
    }
    const Token& t = Advance();
    if (t.type == Tok::kVar) {
      throw UnsupportedFeature("variable predicates are not supported");
    }
    if (t.type != Tok::kIri && t.type != Tok::kPname) {
      --pos_;
      Fail("expected a predicate");
    }
    std::string iri = prefixes_.NormalizeIri(t.text);
    return IsRdfType(iri) ? "" : iri;
  }

  void ParseGroup() {
    Expect("{");
    while (!IsPunct("}")) {
      Term subject = ParseTerm();
      while (true) {
        std::string predicate = ParsePredicate();
        while (true) {
          triples_.push_back(RawTriple{subject, predicate, ParseTerm()});
          if (!IsPunct(",")) break;
          Advance();
        }
        if (!IsPunct(";")) break;
        Advance();
        if (IsPunct(".") || IsPunct("}")) break;
      }
      if (IsPunct(".")) {
        Advance();
      } else if (!IsPunct("}")) {
        Fail("expected '.' or '}'");
      }
    }
    Advance();
    if (triples_.empty()) Fail("empty graph pattern");
  }

  std::size_t ParseCount() {
    if (Peek().type != Tok::kLiteral) Fail("expected an integer");
    const std::string& text = Advance().text;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      Fail("expected a non-negative integer");
    }
    return value;
  }

  void ParseModifiers() {
    while (Peek().type == Tok::kWord) {
      if (IsWord("ORDER")) {
        Advance();
        if (!IsWord("BY")) Fail("expected BY");
        Advance();
        if (IsWord("ASC") || IsWord("DESC")) {
          const bool desc = IsWord("DESC");
          Advance();
          Expect("(");
          order_.push_back(OrderKey{ExpectVar(), desc});
          Expect(")");
        } else {
          order_.push_back(OrderKey{ExpectVar(), false});
        }
        if (Peek().type == Tok::kVar || IsWord("ASC") || IsWord("DESC")) {
          throw UnsupportedFeature("ORDER BY with several keys");
        }
      } else if (IsWord("LIMIT")) {
        Advance();
        limit_ = ParseCount();
      } else if (IsWord("OFFSET")) {
        Advance();
        offset_ = ParseCount();
      } else {
        Fail("unexpected solution modifier");
      }
    }
    if (!order_.empty() && limit_ != std::optional<std::size_t>(1)) {
      throw UnsupportedFeature("ORDER BY requires LIMIT 1");
    }
    if (order_.empty() && (limit_ || offset_)) {
      throw UnsupportedFeature("LIMIT/OFFSET without ORDER BY");
    }
  }

  QueryGraph Build(bool ask, bool star, const std::vector<Projection>& projection) {
    std::vector<Vertex> vertices;
    std::map<std::pair<Tok, std::string>, std::size_t> ids;
    std::set<std::string> class_iris;
    for (const RawTriple& t : triples_) {
      if (t.predicate.empty() && t.object.type == Tok::kIri) {
        class_iris.insert(t.object.text);
      }
    }
    auto vertex = [&](const Term& term) {
      auto key = std::make_pair(term.type, term.text);
      auto it = ids.find(key);
      if (it != ids.end()) return it->second;
      Vertex v;
      if (term.type == Tok::kVar) {
        v.kind = VertexKind::kVariable;
      } else if (term.type == Tok::kLiteral) {
        v.kind = VertexKind::kLiteral;
        v.surface = term.text;
      } else {
        v.kind = class_iris.count(term.text) ? VertexKind::kClass
                                             : VertexKind::kEntity;
        v.surface = term.text;
      }
      vertices.push_back(std::move(v));
      ids.emplace(key, vertices.size() - 1);
      return vertices.size() - 1;
    };
    auto variable = [&](const std::string& name) {
      auto it = ids.find({Tok::kVar, name});
      if (it == ids.end()) {
        throw SyntaxError(fmt::format("variable {} is not bound by the pattern", name));
      }
      return it->second;
    };

    std::vector<Triple> triples;
    for (const RawTriple& t : triples_) {
      const std::size_t s = vertex(t.subject);
      const std::size_t o = vertex(t.object);
      triples.push_back(Triple{
          s,
          t.predicate.empty() ? EdgeLabel::Builtin(BuiltIn::kIsA)
                              : EdgeLabel::UserDefined(t.predicate),
          o});
    }
    for (const Projection& p : projection) {
      if (!p.aggregate) continue;
      const std::size_t arg = variable(p.argument);
      if (ids.count({Tok::kVar, p.variable})) {
        throw SyntaxError(fmt::format("aggregate target {} is already bound", p.variable));
      }
      const std::size_t result = vertex(Term{Tok::kVar, p.variable});
      triples.push_back(Triple{arg, EdgeLabel::Builtin(*p.aggregate), result});
    }
    for (const OrderKey& key : order_) {
      const std::size_t v = variable(key.variable);
      // Ranking literals get their own vertex even when the same number
      // occurs in the pattern.
      vertices.push_back(Vertex{VertexKind::kLiteral,
                                fmt::format("{}", offset_.value_or(0) + 1)});
      const std::size_t n = vertices.size() - 1;
      triples.push_back(Triple{
          v,
          EdgeLabel::Builtin(key.descending ? BuiltIn::kMaxAtN
                                            : BuiltIn::kMinAtN),
          n});
    }
    std::optional<std::size_t> target;
    if (!ask && !star) {
      target = variable(projection.front().variable);
      for (const Projection& p : projection) variable(p.variable);
    }
    return QueryGraph(std::move(vertices), std::move(triples), target, ask);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  PrefixTable prefixes_;
  std::vector<std::pair<std::string, std::string>> local_prefixes_;
  std::vector<RawTriple> triples_;
  std::vector<OrderKey> order_;
  std::optional<std::size_t> limit_;
  std::optional<std::size_t> offset_;
  int anonymous_ = 0;
};

}  // namespace

QueryGraph ParseQuery(std::string_view text, const PrefixTable& prefixes) {
  return Parser(text, prefixes).Run();
}

std::string SerializeQuery(const QueryGraph& g) {
  auto term = [&](std::size_t v) {
    const Vertex& vx = g.vertex(v);
    return vx.is_variable() ? fmt::format("?v{}", v) : vx.surface;
  };

  std::vector<std::string> pattern;
  std::vector<std::string> aggregates;
  std::vector<std::string> order;
  std::string target_item;
  std::size_t offset = 0;
  for (const Triple& t : g.triples()) {
    if (!t.label.is_builtin()) {
      pattern.push_back(fmt::format("{} {} {}", term(t.subject),
                                    t.label.name(), term(t.object)));
      continue;
    }
    const BuiltIn b = t.label.builtin();
    if (b == BuiltIn::kIsA) {
      pattern.push_back(fmt::format("{} a {}", term(t.subject), term(t.object)));
    } else if (IsAggregate(b)) {
      std::string item = fmt::format("({}({}) AS {})", BuiltInName(b),
                                     term(t.subject), term(t.object));
      if (g.target() == t.object && target_item.empty()) {
        target_item = std::move(item);
      } else {
        aggregates.push_back(std::move(item));
      }
    } else {
      order.push_back(fmt::format(
          "{}({})", b == BuiltIn::kMaxAtN ? "DESC" : "ASC", term(t.subject)));
      std::size_t n = 1;
      std::from_chars(g.vertex(t.object).surface.data(),
                      g.vertex(t.object).surface.data() +
                          g.vertex(t.object).surface.size(),
                      n);
      if (order.size() == 1) offset = n > 0 ? n - 1 : 0;
    }
  }

  std::string head;
  if (g.ask()) {
    head = "ASK WHERE";
  } else {
    std::vector<std::string> items;
    if (!target_item.empty()) {
      items.push_back(target_item);
    } else if (g.target()) {
      items.push_back(term(*g.target()));
    }
    items.insert(items.end(), aggregates.begin(), aggregates.end());
    if (items.empty()) items.push_back("*");
    head = fmt::format("SELECT {} WHERE", fmt::join(items, " "));
  }
  std::string out = fmt::format("{} {{ {} }}", head, fmt::join(pattern, " . "));
  if (!order.empty()) {
    out += fmt::format(" ORDER BY {} LIMIT 1 OFFSET {}", fmt::join(order, " "),
                       offset);
  }
  return out;
}

}  // namespace qgen
