// SPDX-License-Identifier: Apache-2.0
//
// Per-tool cost profile that drives the mock backend and the simulated
// clock. The shipped profile is fitted so the default workload lands on
// target reductions; it is an input, not a measurement.
#pragma once

#include "trafficgraph/context.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace trafficgraph {

enum class ExecutionPolicy { GraphParallel, ChainSequential };

std::string_view to_string(ExecutionPolicy policy);
ExecutionPolicy policy_from_string(std::string_view name);  // "graph" | "chain"

struct ToolCost {
    std::int64_t tokens_graph = 0;  // fixed prompt tokens per backend call
    std::int64_t tokens_chain = 0;
    double duration_graph_ms = 0.0;
    double duration_chain_ms = 0.0;

    std::int64_t tokens(ExecutionPolicy policy) const {
        return policy == ExecutionPolicy::GraphParallel ? tokens_graph : tokens_chain;
    }
    double duration_ms(ExecutionPolicy policy) const {
        return policy == ExecutionPolicy::GraphParallel ? duration_graph_ms : duration_chain_ms;
    }
};

struct Overhead {
    std::int64_t tokens = 0;
    double ms = 0.0;
};

struct CalibrationProfile {
    std::map<std::string, ToolCost> tools;
    Overhead decomposition;        // per query, both policies
    Overhead graph_construction;   // per query, graph policy only
    double price_per_1k_tokens = 0.01;
    CountingScheme counting = CountingScheme::Chars4;
    std::int64_t context_cap = 512;

    /// Throws ConfigError for tools absent from the profile.
    const ToolCost& tool(const std::string& name) const;
    std::map<std::string, std::int64_t> prompt_overhead(ExecutionPolicy policy) const;

    nlohmann::json to_json() const;
    static CalibrationProfile from_json(const nlohmann::json& value, const std::string& source);
    static CalibrationProfile load(const std::filesystem::path& path);
};

}  // namespace trafficgraph
