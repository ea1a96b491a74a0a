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

#include <gtest/gtest.h>

#include <random>

#include "kb_oracle.h"
#include "qgen/sparql.h"

namespace qgen {
namespace {

constexpr char kFilms[] =
    ":Ed_Wood\ta\t:Film\n"
    ":Ed_Wood\t:director\t:Tim_Burton\n"
    ":Big_Fish\ta\t:Film\n"
    ":Big_Fish\t:director\t:Tim_Burton\n"
    ":Beetlejuice\trdf:type\t:Film\n"
    ":Beetlejuice\t:director\t:Tim_Burton\n"
    ":Vincent\ta\t:Short\n"
    ":Vincent\t:director\t:Tim_Burton\n"
    ":Tim_Burton\ta\t:Person\n"
    ":Alien\ta\t:Film\n"
    ":Alien\t:director\t:Ridley_Scott\n"
    ":Tim_Burton\t:height\t190\n"
    ":Ridley_Scott\t:height\t185\n"
    ":Stanley_Kubrick\t:height\t180\n"
    ":Ridley_Scott\t:name\t\"Ridley\"@en\n";

KnowledgeBase Films() { return KnowledgeBase::FromString(kFilms); }

AnswerSet Answer(const std::string& sparql, const KnowledgeBase& kb) {
  return Execute(ParseQuery(sparql), kb);
}

TEST(LoadKb, CountsFacts) {
  KnowledgeBase kb = KnowledgeBase::FromString(
      ":a\t:p\t:b\n:b\t:p\t:c\n:c\t:q\t1\n:a\t:q\t\"x\"@en\n:a\ta\t:T\n");
  EXPECT_EQ(kb.num_facts(), 5u);
}

TEST(LoadKb, TypesFromBothSpellings) {
  KnowledgeBase kb = Films();
  const SymbolId film = *kb.Find(":Film");
  EXPECT_TRUE(kb.TypesOf(*kb.Find(":Ed_Wood")).count(film));
  EXPECT_TRUE(kb.TypesOf(*kb.Find(":Beetlejuice")).count(film));
  EXPECT_TRUE(kb.TypesOf(*kb.Find(":Tim_Burton")).count(*kb.Find(":Person")));
}

TEST(LoadKb, DeduplicatesAndSkipsComments) {
  KnowledgeBase kb =
      KnowledgeBase::FromString("# header\n:a\t:p\t:b\n\n:a\t:p\t:b\n");
  EXPECT_EQ(kb.num_facts(), 1u);
}

TEST(LoadKb, NormalizesIris) {
  KnowledgeBase kb = KnowledgeBase::FromString(
      "<http://dbpedia.org/resource/A>\t<http://dbpedia.org/ontology/p>\t"
      "\"1.5\"^^<http://www.w3.org/2001/XMLSchema#double>\n");
  EXPECT_TRUE(kb.Find("dbr:A"));
  EXPECT_TRUE(kb.Find("dbo:p"));
  EXPECT_TRUE(kb.Find("\"1.5\"^^xsd:double"));
}

TEST(LoadKb, ReportsLineNumbers) {
  try {
    KnowledgeBase::FromString(":a\t:p\t:b\n:a :p :b\n");
    FAIL() << "expected KbParseError";
  } catch (const KbParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(KnowledgeBase::FromString(":a\tzz:p\t:b\n"), KbParseError);
  EXPECT_THROW(KnowledgeBase::FromString(":a\t:p\t\"open\n"), ParseError);
}

TEST(Execute, CountOfDirectedFilms) {
  AnswerSet a = Answer(
      "SELECT (COUNT(?u) AS ?c) WHERE { ?u rdf:type :Film . "
      "?u :director :Tim_Burton }",
      Films());
  EXPECT_TRUE(a.aggregate);
  EXPECT_EQ(a.values, std::set<std::string>{"3"});
}

TEST(Execute, PlainSelect) {
  AnswerSet a = Answer("SELECT ?u WHERE { ?u :director :Tim_Burton }", Films());
  EXPECT_EQ(a.values, (std::set<std::string>{":Ed_Wood", ":Big_Fish",
                                             ":Beetlejuice", ":Vincent"}));
}

TEST(Execute, NoMatchesIsEmpty) {
  KnowledgeBase kb = Films();
  EXPECT_TRUE(Answer("SELECT ?u WHERE { ?u :director :Nobody }", kb).empty());
  EXPECT_TRUE(Answer("SELECT ?u WHERE { ?u :unknown_prop ?x }", kb).empty());
  EXPECT_TRUE(Answer("SELECT (COUNT(?u) AS ?c) WHERE { ?u :director :Nobody }",
                  kb)
                  .empty());
}

TEST(Execute, MaxAtTwoPicksSecondLargest) {
  AnswerSet a = Answer(
      "SELECT ?h WHERE { ?p :height ?h } ORDER BY DESC(?h) LIMIT 1 OFFSET 1",
      Films());
  EXPECT_EQ(a.values, std::set<std::string>{"185"});
  AnswerSet who = Answer(
      "SELECT ?p WHERE { ?p :height ?h } ORDER BY DESC(?h) LIMIT 1 OFFSET 1",
      Films());
  EXPECT_EQ(who.values, std::set<std::string>{":Ridley_Scott"});
}

TEST(Execute, RankingAtOneMatchesMaxAndMin) {
  KnowledgeBase kb = Films();
  EXPECT_EQ(Answer("SELECT ?h WHERE { ?p :height ?h } ORDER BY DESC(?h) LIMIT 1",
                kb)
                .values,
            Answer("SELECT (MAX(?h) AS ?m) WHERE { ?p :height ?h }", kb).values);
  EXPECT_EQ(
      Answer("SELECT ?h WHERE { ?p :height ?h } ORDER BY ?h LIMIT 1", kb).values,
      Answer("SELECT (MIN(?h) AS ?m) WHERE { ?p :height ?h }", kb).values);
  EXPECT_TRUE(Answer("SELECT ?h WHERE { ?p :height ?h } ORDER BY ?h LIMIT 1 "
                  "OFFSET 5",
                  kb)
                  .empty());
}

TEST(Execute, RankingTiesBreakByBindings) {
  KnowledgeBase kb =
      KnowledgeBase::FromString(":b\t:h\t5\n:a\t:h\t5\n:c\t:h\t4\n");
  EXPECT_EQ(
      Answer("SELECT ?p WHERE { ?p :h ?v } ORDER BY DESC(?v) LIMIT 1", kb).values,
      std::set<std::string>{":a"});
  EXPECT_EQ(Answer("SELECT ?p WHERE { ?p :h ?v } ORDER BY DESC(?v) LIMIT 1 "
                "OFFSET 1",
                kb)
                .values,
            std::set<std::string>{":b"});
}

TEST(Execute, Average) {
  AnswerSet a =
      Answer("SELECT (AVG(?h) AS ?a) WHERE { ?p :height ?h }", Films());
  EXPECT_EQ(a.values, std::set<std::string>{"185"});
  KnowledgeBase kb = KnowledgeBase::FromString(":a\t:h\t1\n:b\t:h\t2\n");
  EXPECT_EQ(Answer("SELECT (AVG(?h) AS ?a) WHERE { ?p :h ?h }", kb).values,
            std::set<std::string>{"1.5"});
}

TEST(Execute, NonNumericAggregateThrows) {
  EXPECT_THROW(Answer("SELECT (AVG(?n) AS ?a) WHERE { ?p :name ?n }", Films()),
               NonNumericAggregate);
}

TEST(Execute, UnboundTargetThrows) {
  QueryGraph g = ParseQuery("SELECT ?u WHERE { ?u :director :Tim_Burton }");
  EXPECT_THROW(Execute(g.WithTarget(std::nullopt), Films()), UnboundTarget);
}

TEST(Execute, Ask) {
  KnowledgeBase kb = Films();
  EXPECT_EQ(Answer("ASK WHERE { :Alien :director :Ridley_Scott }", kb).values,
            std::set<std::string>{"true"});
  EXPECT_EQ(Answer("ASK WHERE { :Alien :director :Tim_Burton }", kb).values,
            std::set<std::string>{"false"});
}

TEST(Execute, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(20261018);
  int non_empty = 0;
  for (int i = 0; i < 200; ++i) {
    const auto facts = oracle::RandomFacts(rng, 1000);
    KnowledgeBase kb;
    for (const auto& f : facts) kb.AddFact(f[0], f[1], f[2]);
    const QueryGraph q = oracle::RandomPatternQuery(rng);
    const std::set<std::string> expected = oracle::NestedLoopAnswers(q, facts);
    EXPECT_EQ(Execute(q, kb).values, expected) << DebugString(q);
    non_empty += !expected.empty();
  }
  // The comparison is only meaningful if many answers are non-empty.
  EXPECT_GT(non_empty, 80);
}

TEST(Execute, MonotoneUnderAddedFacts) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    auto facts = oracle::RandomFacts(rng, 300);
    const QueryGraph q = oracle::RandomPatternQuery(rng);
    KnowledgeBase kb;
    for (const auto& f : facts) kb.AddFact(f[0], f[1], f[2]);
    const AnswerSet before = Execute(q, kb);
    for (const auto& f : oracle::RandomFacts(rng, 100)) {
      kb.AddFact(f[0], f[1], f[2]);
    }
    const AnswerSet after = Execute(q, kb);
    for (const std::string& v : before.values) {
      EXPECT_TRUE(after.values.count(v)) << DebugString(q);
    }
  }
}

TEST(Execute, CountEqualsBindingSetSize) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto facts = oracle::RandomFacts(rng, 400);
    KnowledgeBase kb;
    for (const auto& f : facts) kb.AddFact(f[0], f[1], f[2]);
    const QueryGraph q = oracle::RandomPatternQuery(rng);
    const std::set<std::string> plain = Execute(q, kb).values;
    std::vector<Vertex> vertices = q.vertices();
    vertices.push_back({VertexKind::kAggregateResult, ""});
    std::vector<Triple> triples = q.triples();
    triples.push_back({*q.target(), EdgeLabel::Builtin(BuiltIn::kCount),
                       vertices.size() - 1});
    const QueryGraph counted(vertices, triples, vertices.size() - 1);
    const AnswerSet c = Execute(counted, kb);
    if (plain.empty()) {
      EXPECT_TRUE(c.empty());
    } else {
      EXPECT_EQ(c.values, std::set<std::string>{std::to_string(plain.size())});
    }
  }
}

constexpr char kSchema[] =
    "domain :director :Film\n"
    "range :director :Person\n"
    "domain :height :Person\n"
    "disjoint :Film :Person\n";

TEST(CheckDomainRange, DomainViolationByConstant) {
  KnowledgeBase kb = Films();
  kb.LoadSchemaString(kSchema);
  EXPECT_FALSE(CheckDomainRange(
      ParseQuery("SELECT ?v WHERE { :Tim_Burton :director ?v }"), kb));
  EXPECT_TRUE(CheckDomainRange(
      ParseQuery("SELECT ?v WHERE { ?v :director :Tim_Burton }"), kb));
}

TEST(CheckDomainRange, VacuousWithoutSchema) {
  KnowledgeBase kb = Films();
  EXPECT_TRUE(CheckDomainRange(
      ParseQuery("SELECT ?v WHERE { :Tim_Burton :director ?v }"), kb));
  kb.LoadSchemaString(kSchema);
  EXPECT_TRUE(CheckDomainRange(
      ParseQuery("SELECT ?v WHERE { ?v :name ?n }"), kb));
}

TEST(CheckDomainRange, DisjointClassesOnOneVariable) {
  KnowledgeBase kb = Films();
  kb.LoadSchemaString(kSchema);
  // ?v is a film (domain of director) and a person (domain of height).
  EXPECT_FALSE(CheckDomainRange(
      ParseQuery("SELECT ?v WHERE { ?v :director ?d . ?v :height ?h }"), kb));
  EXPECT_FALSE(CheckDomainRange(
      ParseQuery("SELECT ?v WHERE { ?v a :Person . ?v :director ?d }"), kb));
  EXPECT_TRUE(CheckDomainRange(
      ParseQuery("SELECT ?v WHERE { ?v a :Film . ?v :director ?d }"), kb));
}

TEST(LoadSchema, RejectsUnknownDirective) {
  KnowledgeBase kb;
  EXPECT_THROW(kb.LoadSchemaString("subclass :A :B\n"), KbParseError);
  EXPECT_THROW(kb.LoadSchemaString("domain :A\n"), KbParseError);
}

}  // namespace
}  // namespace qgen
