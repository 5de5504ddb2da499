// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/calibration.hpp"

#include "trafficgraph/rules.hpp"

namespace trafficgraph {

using nlohmann::json;

std::string_view to_string(ExecutionPolicy policy) {
    return policy == ExecutionPolicy::GraphParallel ? "graph" : "chain";
}

ExecutionPolicy policy_from_string(std::string_view name) {
    if (name == "graph" || name == "GraphParallel") return ExecutionPolicy::GraphParallel;
    if (name == "chain" || name == "ChainSequential") return ExecutionPolicy::ChainSequential;
    throw Error(ErrorKind::InvalidArgument, "unknown policy '" + std::string(name) + "'");
}

const ToolCost& CalibrationProfile::tool(const std::string& name) const {
    auto it = tools.find(name);
    if (it == tools.end()) throw ConfigError("calibration", "no cost entry for tool '" + name + "'");
    return it->second;
}

std::map<std::string, std::int64_t> CalibrationProfile::prompt_overhead(ExecutionPolicy policy) const {
    std::map<std::string, std::int64_t> out;
    for (const auto& [name, cost] : tools) out[name] = cost.tokens(policy);
    return out;
}

json CalibrationProfile::to_json() const {
    json tools_json = json::object();
    for (const auto& [name, cost] : tools) {
        tools_json[name] = {{"tokens_graph", cost.tokens_graph},
                            {"tokens_chain", cost.tokens_chain},
                            {"duration_graph_ms", cost.duration_graph_ms},
                            {"duration_chain_ms", cost.duration_chain_ms}};
    }
    return {{"tools", tools_json},
            {"decomposition_overhead", {{"tokens", decomposition.tokens}, {"ms", decomposition.ms}}},
            {"graph_construction_overhead", {{"tokens", graph_construction.tokens}, {"ms", graph_construction.ms}}},
            {"pricing", {{"per_1k_tokens", price_per_1k_tokens}}},
            {"token_counting", to_string(counting)},
            {"context_cap", context_cap}};
}

namespace {

Overhead parse_overhead(const json& value, const std::string& where) {
    Overhead o;
    try {
        o.tokens = value.at("tokens").get<std::int64_t>();
        o.ms = value.at("ms").get<double>();
    } catch (const std::exception& e) {
        throw ConfigError(where, e.what());
    }
    if (o.tokens < 0 || o.ms < 0) throw ConfigError(where, "overhead must be non-negative");
    return o;
}

}  // namespace

CalibrationProfile CalibrationProfile::from_json(const json& value, const std::string& source) {
    if (!value.is_object() || !value.contains("tools")) throw ConfigError(source, "missing tools table");
    CalibrationProfile profile;
    for (const auto& [name, entry] : value["tools"].items()) {
        const auto where = source + ":tools." + name;
        ToolCost cost;
        try {
            cost.tokens_graph = entry.at("tokens_graph").get<std::int64_t>();
            cost.tokens_chain = entry.at("tokens_chain").get<std::int64_t>();
            cost.duration_graph_ms = entry.at("duration_graph_ms").get<double>();
            cost.duration_chain_ms = entry.at("duration_chain_ms").get<double>();
        } catch (const std::exception& e) {
            throw ConfigError(where, e.what());
        }
        if (cost.tokens_graph < 0 || cost.tokens_chain < 0 || cost.duration_graph_ms < 0 || cost.duration_chain_ms < 0) {
            throw ConfigError(where, "costs must be non-negative");
        }
        profile.tools.emplace(name, cost);
    }
    profile.decomposition = parse_overhead(value.value("decomposition_overhead", json{{"tokens", 0}, {"ms", 0}}),
                                           source + ":decomposition_overhead");
    profile.graph_construction = parse_overhead(
        value.value("graph_construction_overhead", json{{"tokens", 0}, {"ms", 0}}), source + ":graph_construction_overhead");
    if (value.contains("pricing")) profile.price_per_1k_tokens = value["pricing"].value("per_1k_tokens", 0.01);
    if (profile.price_per_1k_tokens < 0) throw ConfigError(source + ":pricing", "price must be non-negative");
    try {
        profile.counting = counting_scheme_from_string(value.value("token_counting", "chars4"));
    } catch (const Error& e) {
        throw ConfigError(source + ":token_counting", e.what());
    }
    profile.context_cap = value.value("context_cap", std::int64_t{512});
    if (profile.context_cap <= 0) throw ConfigError(source + ":context_cap", "cap must be positive");
    return profile;
}

CalibrationProfile CalibrationProfile::load(const std::filesystem::path& path) {
    return from_json(load_json_file(path), path.string());
}

}  // namespace trafficgraph
