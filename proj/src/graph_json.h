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

// JSON encoding shared by the catalog, model and report writers.

#ifndef QGEN_SRC_GRAPH_JSON_H_
#define QGEN_SRC_GRAPH_JSON_H_

#include <string>

#include "json.hpp"
#include "qgen/query_graph.h"

namespace qgen {

// {"vertices": [{"kind": "Variable", "surface": ""}, ...],
//  "triples": [{"s": 0, "p": "COUNT", "o": 1, "builtin": true}, ...],
//  "target": 1 | null, "ask": false}
nlohmann::json GraphToJson(const QueryGraph& g);
QueryGraph GraphFromJson(const nlohmann::json& j);

nlohmann::json KeyToJson(const StructureKey& key);
StructureKey KeyFromJson(const nlohmann::json& j);

nlohmann::json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const nlohmann::json& j);

}  // namespace qgen

#endif  // QGEN_SRC_GRAPH_JSON_H_
