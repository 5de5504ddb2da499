// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/agents.hpp"

#include "trafficgraph/rules.hpp"

#include <algorithm>

namespace trafficgraph {

using nlohmann::json;

bool AgentSpec::binds(const std::string& tool) const {
    return std::find(tools.begin(), tools.end(), tool) != tools.end();
}

AgentRegistry::AgentRegistry(std::vector<AgentSpec> agents) : agents_(std::move(agents)) {
    for (auto type : kAllTaskTypes) {
        auto count = std::count_if(agents_.begin(), agents_.end(), [type](const AgentSpec& a) { return a.type == type; });
        if (count != 1) {
            throw Error(ErrorKind::Config, "expected exactly one agent for " + std::string(to_string(type)) + ", found " +
                                               std::to_string(count));
        }
    }
    for (const auto& agent : agents_) {
        if (agent.react_budget < 1) throw Error(ErrorKind::Config, agent.name + ": react budget must be >= 1");
    }
}

const AgentSpec& AgentRegistry::select_agent(TaskType type) const {
    for (const auto& agent : agents_) {
        if (agent.type == type) return agent;
    }
    return select_agent(TaskType::General);
}

const AgentSpec& AgentRegistry::by_name(const std::string& name) const {
    for (const auto& agent : agents_) {
        if (agent.name == name) return agent;
    }
    throw Error(ErrorKind::UnknownRecipient, "no agent named '" + name + "'");
}

void AgentRegistry::check_tools(const Toolbox& toolbox) const {
    for (const auto& agent : agents_) {
        for (const auto& tool : agent.tools) {
            if (!toolbox.has_tool(tool)) throw ConfigError("agents:" + agent.name, "unknown tool '" + tool + "'");
            if (toolbox.info(tool).type != agent.type) {
                throw ConfigError("agents:" + agent.name, "tool '" + tool + "' belongs to " +
                                                              std::string(to_string(toolbox.info(tool).type)));
            }
        }
    }
}

AgentRegistry AgentRegistry::from_json(const json& value, const std::string& source) {
    if (!value.contains("agents") || !value["agents"].is_array()) throw ConfigError(source, "missing agents list");
    std::vector<AgentSpec> agents;
    for (std::size_t i = 0; i < value["agents"].size(); ++i) {
        const auto& entry = value["agents"][i];
        const auto where = source + ":agents[" + std::to_string(i) + "]";
        AgentSpec spec;
        try {
            spec.name = entry.at("name").get<std::string>();
            spec.type = task_type_from_string(entry.at("type").get<std::string>());
            spec.tools = entry.at("tools").get<std::vector<std::string>>();
            spec.react_budget = entry.value("react_budget", kDefaultReactBudget);
            spec.knowledge = entry.value("knowledge", KnowledgeStore{});
        } catch (const std::exception& e) {
            throw ConfigError(where, e.what());
        }
        agents.push_back(std::move(spec));
    }
    try {
        return AgentRegistry(std::move(agents));
    } catch (const Error& e) {
        throw ConfigError(source, e.what());
    }
}

AgentRegistry AgentRegistry::load(const std::filesystem::path& path) {
    return from_json(load_json_file(path), path.string());
}

}  // namespace trafficgraph
