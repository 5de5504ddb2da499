// SPDX-License-Identifier: Apache-2.0
//
// Graph serialization: a line-oriented text form for golden tests and a
// JSON form for trace dumps.
//
// Text form, one record per line:
//   graph "<origin>"
//   node <id> <TYPE> <Status> q=<query ids|-> <tool> [key=<value> ...]
//   edge <from> <to>
// Values are JSON scalars; unbound slots are written ?slot and fact
// references @fact. Parsing yields a fresh graph: every node Pending, no
// results or ledgers.
#pragma once

#include "trafficgraph/task_graph.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace trafficgraph {

nlohmann::json param_to_json(const ParamValue& value);
ParamValue param_from_json(const nlohmann::json& value);

nlohmann::json tool_call_to_json(const ToolCall& call);
ToolCall tool_call_from_json(const nlohmann::json& value);

nlohmann::json payload_to_json(const Payload& payload);

nlohmann::json graph_to_json(const TaskGraph& graph);
TaskGraph graph_from_json(const nlohmann::json& value);

std::string graph_to_text(const TaskGraph& graph);
TaskGraph graph_from_text(std::string_view text);

}  // namespace trafficgraph
