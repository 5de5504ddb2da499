// SPDX-License-Identifier: Apache-2.0
//
// Agent registry and routing by task type.
#pragma once

#include "trafficgraph/task_graph.hpp"
#include "trafficgraph/toolbox.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace trafficgraph {

inline constexpr int kDefaultReactBudget = 5;

struct AgentSpec {
    std::string name;
    TaskType type = TaskType::General;
    std::vector<std::string> tools;
    int react_budget = kDefaultReactBudget;
    KnowledgeStore knowledge;

    bool binds(const std::string& tool) const;
};

/// Exactly one agent per task type.
class AgentRegistry {
public:
    explicit AgentRegistry(std::vector<AgentSpec> agents);

    /// The agent handling `type`; anything unmatched goes to GeneralAgent.
    const AgentSpec& select_agent(TaskType type) const;
    const AgentSpec& by_name(const std::string& name) const;
    const std::vector<AgentSpec>& agents() const noexcept { return agents_; }

    /// Throws ConfigError when a bound tool is missing from `toolbox` or
    /// bound to an agent of a different type.
    void check_tools(const Toolbox& toolbox) const;

    static AgentRegistry from_json(const nlohmann::json& value, const std::string& source);
    static AgentRegistry load(const std::filesystem::path& path);

private:
    std::vector<AgentSpec> agents_;
};

}  // namespace trafficgraph
