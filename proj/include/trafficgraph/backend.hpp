// SPDX-License-Identifier: Apache-2.0
//
// Text-completion backend contract and the deterministic scripted mock.
//
// Completions use three line forms the ReAct loop understands:
//   Thought: <text>            (optional, precedes an action)
//   Action: <tool> <json>      call a tool, observe, continue
//   Return: <tool> <json>      call a tool and finish with its result
//   Finish: <text>             finish; the last observation is the result
#pragma once

#include "trafficgraph/context.hpp"
#include "trafficgraph/task_graph.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace trafficgraph {

struct BackendRequest {
    std::string agent;
    ToolCall task;  // parameters already resolved
    int iteration = 0;
    std::string prompt;
    std::span<const ContextEntry> context;
    std::string last_observation;
};

struct Completion {
    std::string text;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual Completion complete(const BackendRequest& request) = 0;
};

/// Canned completions keyed by (agent, tool, signature); "*" matches any.
/// Step templates may use {tool}, {params} and {observation}. Past the end
/// of a script the last step repeats.
class ScriptTable {
public:
    struct Script {
        std::string agent = "*";
        std::string tool = "*";
        std::string signature = "*";
        std::vector<std::string> steps;
    };

    ScriptTable() = default;
    explicit ScriptTable(std::vector<Script> scripts) : scripts_(std::move(scripts)) {}

    /// Most specific match: exact signature, then tool, then agent.
    const std::vector<std::string>& lookup(const std::string& agent, const ToolCall& call) const;
    void add(Script script) { scripts_.push_back(std::move(script)); }

    static ScriptTable from_json(const nlohmann::json& value, const std::string& source);
    static ScriptTable load(const std::filesystem::path& path);

private:
    std::vector<Script> scripts_;
};

/// tokens_in = fixed per-tool prompt overhead + count(prompt) + context
/// sizes; tokens_out = count(completion). Pure function of the request.
class MockBackend : public Backend {
public:
    MockBackend(ScriptTable scripts, std::map<std::string, std::int64_t> prompt_overhead = {},
                TokenCounter counter = TokenCounter{});

    Completion complete(const BackendRequest& request) override;

private:
    ScriptTable scripts_;
    std::map<std::string, std::int64_t> prompt_overhead_;
    TokenCounter counter_;
};

}  // namespace trafficgraph
