// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/backend.hpp"

#include "trafficgraph/graph_io.hpp"
#include "trafficgraph/rules.hpp"

namespace trafficgraph {

using nlohmann::json;

namespace {

const std::vector<std::string>& default_script() {
    static const std::vector<std::string> steps{
        "Thought: {tool} answers this directly.\nAction: {tool} {params}",
        "Finish: {observation}",
    };
    return steps;
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = text.find(from, pos)) != std::string::npos; pos += to.size()) {
        text.replace(pos, from.size(), to);
    }
}

}  // namespace

const std::vector<std::string>& ScriptTable::lookup(const std::string& agent, const ToolCall& call) const {
    const auto sig = call.signature();
    const Script* best = nullptr;
    int best_score = -1;
    for (const auto& script : scripts_) {
        if (script.agent != "*" && script.agent != agent) continue;
        if (script.tool != "*" && script.tool != call.tool) continue;
        if (script.signature != "*" && script.signature != sig) continue;
        int score = (script.signature != "*") * 4 + (script.tool != "*") * 2 + (script.agent != "*");
        if (score > best_score) {
            best = &script;
            best_score = score;
        }
    }
    return best ? best->steps : default_script();
}

ScriptTable ScriptTable::from_json(const json& value, const std::string& source) {
    ScriptTable table;
    const json scripts = value.value("scripts", json::array());
    for (std::size_t i = 0; i < scripts.size(); ++i) {
        const auto where = source + ":scripts[" + std::to_string(i) + "]";
        Script script;
        try {
            script.agent = scripts[i].value("agent", "*");
            script.tool = scripts[i].value("tool", "*");
            script.signature = scripts[i].value("signature", "*");
            script.steps = scripts[i].at("steps").get<std::vector<std::string>>();
        } catch (const std::exception& e) {
            throw ConfigError(where, e.what());
        }
        if (script.steps.empty()) throw ConfigError(where, "script has no steps");
        table.add(std::move(script));
    }
    return table;
}

ScriptTable ScriptTable::load(const std::filesystem::path& path) {
    return from_json(load_json_file(path), path.string());
}

MockBackend::MockBackend(ScriptTable scripts, std::map<std::string, std::int64_t> prompt_overhead, TokenCounter counter)
    : scripts_(std::move(scripts)), prompt_overhead_(std::move(prompt_overhead)), counter_(counter) {}

Completion MockBackend::complete(const BackendRequest& request) {
    const auto& steps = scripts_.lookup(request.agent, request.task);
    const auto index = std::min<std::size_t>(static_cast<std::size_t>(std::max(request.iteration, 0)), steps.size() - 1);
    std::string text = steps[index];
    replace_all(text, "{tool}", request.task.tool);
    replace_all(text, "{params}", tool_call_to_json(request.task)["params"].dump());
    replace_all(text, "{observation}", request.last_observation);

    Completion out;
    out.text = std::move(text);
    auto overhead = prompt_overhead_.find(request.task.tool);
    out.tokens_in = (overhead == prompt_overhead_.end() ? 0 : overhead->second) + counter_(request.prompt);
    for (const auto& entry : request.context) out.tokens_in += entry.token_size;
    out.tokens_out = counter_(out.text);
    return out;
}

}  // namespace trafficgraph
