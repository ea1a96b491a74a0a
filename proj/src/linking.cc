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

#include "qgen/linking.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace qgen {
namespace {

using nlohmann::json;

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool IsWordChar(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80;
}

}  // namespace

std::string_view LinkKindName(LinkKind kind) {
  switch (kind) {
    case LinkKind::kEntity:
      return "entity";
    case LinkKind::kProperty:
      return "property";
    case LinkKind::kClass:
      return "class";
    case LinkKind::kLiteral:
      return "literal";
  }
  return "?";
}

std::optional<LinkKind> LinkKindFromName(std::string_view name) {
  for (LinkKind k : {LinkKind::kEntity, LinkKind::kProperty, LinkKind::kClass,
                     LinkKind::kLiteral}) {
    if (Lower(name) == LinkKindName(k)) return k;
  }
  return std::nullopt;
}

Gazetteer Gazetteer::FromFile(const std::string& path,
                              const PrefixTable& prefixes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return FromString(buf.str(), prefixes);
}

Gazetteer Gazetteer::FromString(std::string_view text,
                                const PrefixTable& prefixes) {
  Gazetteer g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream fs(line);
    std::string f;
    while (std::getline(fs, f, '\t')) fields.push_back(f);
    if (fields.size() != 3) {
      throw KbParseError(line_no, "expected surface<TAB>kind<TAB>symbol");
    }
    const auto kind = LinkKindFromName(fields[1]);
    if (!kind || *kind == LinkKind::kLiteral) {
      throw KbParseError(line_no, "unknown kind " + fields[1]);
    }
    try {
      g.Add(fields[0], *kind, prefixes.NormalizeIri(fields[2]));
    } catch (const SyntaxError& e) {
      throw KbParseError(line_no, e.what());
    }
  }
  return g;
}

void Gazetteer::Add(std::string_view surface, LinkKind kind,
                    std::string symbol) {
  auto& list = entries_[Lower(surface)];
  const std::pair<LinkKind, std::string> entry{kind, std::move(symbol)};
  if (std::find(list.begin(), list.end(), entry) == list.end()) {
    list.push_back(entry);
    ++size_;
  }
}

Linking Gazetteer::Link(std::string_view question) const {
  const std::string lower = Lower(question);
  std::size_t longest = 0;
  for (const auto& [surface, list] : entries_) {
    longest = std::max(longest, surface.size());
  }
  Linking out;
  std::size_t pos = 0;
  while (pos < lower.size()) {
    if (pos > 0 && IsWordChar(lower[pos - 1])) {
      ++pos;
      continue;
    }
    std::size_t matched = 0;
    for (std::size_t len = std::min(longest, lower.size() - pos); len > 0;
         --len) {
      const std::size_t end = pos + len;
      if (end < lower.size() && IsWordChar(lower[end]) &&
          IsWordChar(lower[end - 1])) {
        continue;
      }
      auto it = entries_.find(lower.substr(pos, len));
      if (it == entries_.end()) continue;
      // One mention per kind found under this surface.
      std::map<LinkKind, MentionLinks> by_kind;
      for (const auto& [kind, symbol] : it->second) {
        MentionLinks& m = by_kind[kind];
        m.mention = std::string(question.substr(pos, len));
        m.begin = pos;
        m.end = end;
        m.kind = kind;
        m.candidates.push_back({symbol, 1.0});
      }
      for (auto& [kind, m] : by_kind) out.push_back(std::move(m));
      matched = len;
      break;
    }
    pos += matched > 0 ? matched : 1;
  }
  return out;
}

std::vector<Mention> Gazetteer::Mentions(std::string_view question) const {
  std::vector<Mention> out;
  for (const MentionLinks& m : Link(question)) {
    // Surfaces listed under several kinds produce one span per kind; keep
    // the first so spans never overlap.
    if (!out.empty() && out.back().begin == m.begin) continue;
    out.push_back({m.begin, m.end, m.candidates.front().symbol, m.kind});
  }
  return out;
}

Linking GoldLinking(const QueryGraph& query) {
  Linking out;
  std::set<std::pair<LinkKind, std::string>> seen;
  auto add = [&](LinkKind kind, const std::string& symbol) {
    if (!seen.insert({kind, symbol}).second) return;
    MentionLinks m;
    m.mention = symbol;
    m.kind = kind;
    m.candidates = {{symbol, 1.0}};
    out.push_back(std::move(m));
  };
  for (const Triple& t : query.triples()) {
    if (!t.label.is_builtin()) add(LinkKind::kProperty, t.label.name());
    for (std::size_t v : {t.subject, t.object}) {
      const Vertex& vx = query.vertex(v);
      switch (vx.kind) {
        case VertexKind::kEntity:
          add(LinkKind::kEntity, vx.surface);
          break;
        case VertexKind::kClass:
          add(LinkKind::kClass, vx.surface);
          break;
        case VertexKind::kLiteral:
          if (!IsRankingLiteral(query, v)) add(LinkKind::kLiteral, vx.surface);
          break;
        default:
          break;
      }
    }
  }
  return out;
}

Linking ExtractLiterals(std::string_view question) {
  static const std::regex kPattern(R"re("([^"]+)"|\b(\d+(?:\.\d+)?)\b)re");
  Linking out;
  const std::string text(question);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kPattern);
       it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    MentionLinks links;
    links.mention = m.str(0);
    links.begin = static_cast<std::size_t>(m.position(0));
    links.end = links.begin + static_cast<std::size_t>(m.length(0));
    links.kind = LinkKind::kLiteral;
    if (m[1].matched) {
      links.candidates = {{"\"" + m.str(1) + "\"", 1.0},
                          {"\"" + m.str(1) + "\"@en", 1.0}};
    } else {
      links.candidates = {{m.str(2), 1.0}};
    }
    out.push_back(std::move(links));
  }
  return out;
}

DistractorPool DistractorPool::FromKb(const KnowledgeBase& kb) {
  std::map<LinkKind, std::set<std::string>> sets;
  for (const Fact& f : kb.facts()) {
    if (f.property == kb.type_property()) {
      sets[LinkKind::kClass].insert(kb.symbol(f.object));
      sets[LinkKind::kEntity].insert(kb.symbol(f.subject));
      continue;
    }
    sets[LinkKind::kProperty].insert(kb.symbol(f.property));
    sets[LinkKind::kEntity].insert(kb.symbol(f.subject));
    if (!kb.IsLiteral(f.object)) {
      sets[LinkKind::kEntity].insert(kb.symbol(f.object));
    }
  }
  DistractorPool pool;
  for (auto& [kind, s] : sets) pool.symbols[kind] = {s.begin(), s.end()};
  return pool;
}

Linking AddDistractors(const Linking& linking, const DistractorPool& pool,
                       std::size_t n, double ratio, std::mt19937_64& rng) {
  Linking out = linking;
  for (MentionLinks& m : out) {
    if (m.kind == LinkKind::kLiteral || m.candidates.empty()) continue;
    auto it = pool.symbols.find(m.kind);
    if (it == pool.symbols.end()) continue;
    std::vector<std::string> options;
    for (const std::string& s : it->second) {
      const bool present =
          std::any_of(m.candidates.begin(), m.candidates.end(),
                      [&](const Candidate& c) { return c.symbol == s; });
      if (!present) options.push_back(s);
    }
    std::shuffle(options.begin(), options.end(), rng);
    options.resize(std::min(n, options.size()));
    const double score = m.candidates.front().score * ratio;
    for (std::string& s : options) m.candidates.push_back({std::move(s), score});
    std::stable_sort(m.candidates.begin(), m.candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score > b.score;
                     });
  }
  return out;
}

std::string LinkingToJson(const Linking& linking) {
  json arr = json::array();
  for (const MentionLinks& m : linking) {
    json cands = json::array();
    for (const Candidate& c : m.candidates) {
      cands.push_back({{"symbol", c.symbol}, {"score", c.score}});
    }
    arr.push_back({{"mention", m.mention},
                   {"kind", std::string(LinkKindName(m.kind))},
                   {"begin", m.begin},
                   {"end", m.end},
                   {"candidates", cands}});
  }
  return arr.dump(1);
}

Linking LinkingFromJson(std::string_view text) {
  const json arr = json::parse(text);
  Linking out;
  for (const json& j : arr) {
    MentionLinks m;
    m.mention = j.at("mention").get<std::string>();
    const auto kind = LinkKindFromName(j.at("kind").get<std::string>());
    if (!kind) {
      throw std::invalid_argument("unknown link kind " + j.at("kind").dump());
    }
    m.kind = *kind;
    m.begin = j.value("begin", std::size_t{0});
    m.end = j.value("end", std::size_t{0});
    for (const json& c : j.at("candidates")) {
      m.candidates.push_back(
          {c.at("symbol").get<std::string>(), c.value("score", 1.0)});
    }
    std::stable_sort(m.candidates.begin(), m.candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score > b.score;
                     });
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace qgen
