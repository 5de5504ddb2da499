// SPDX-License-Identifier: Apache-2.0
//
// Decomposition rule table: keyword matchers, slot extractors, task
// templates, slot default-resolution rules and context relevance tags.
#pragma once

#include "trafficgraph/task_graph.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace trafficgraph {

enum class Category { GeneralQA, Clear, Fuzzy, OpenEnded };

std::string_view to_string(Category category);
Category category_from_string(std::string_view name);

/// How an unspecified parameter can be filled without asking the user.
struct SlotDefault {
    std::string fact;                  // fact published by a producer result
    std::set<std::string> producers;   // tools whose summaries carry `fact`
    std::string clarification;         // the user's answer when asked
};

struct SlotSpec {
    std::string name;
    std::string pattern;  // first capture group is the value
    bool required = true;
    bool integer = false;
    std::regex regex;
};

/// Template parameter values: "{slot}" substitutes a slot (or {query} for
/// the full text), "@fact" becomes a fact reference, other JSON scalars are
/// literals.
struct TaskTemplate {
    TaskType type = TaskType::General;
    std::string tool;
    nlohmann::json params = nlohmann::json::object();
};

struct DecompositionRule {
    std::string name;
    std::optional<Category> category;  // only GeneralQA / OpenEnded are fixed
    std::vector<std::string> all;      // lowercase keywords, every one required
    std::vector<std::string> any;      // at least one required when non-empty
    std::vector<std::string> none;     // none may appear
    std::optional<std::regex> requires_pattern;
    std::vector<SlotSpec> slots;
    std::vector<TaskTemplate> tasks;
    std::vector<Edge> edges;  // indices into tasks

    bool matches(const std::string& text) const;
};

struct RuleTable {
    std::vector<DecompositionRule> rules;
    std::map<std::string, SlotDefault> slot_defaults;
    std::map<std::string, std::set<std::string>> relevance;  // producer -> consumers
    std::string source = "rules";

    /// First rule whose matcher accepts `text`, or nullptr.
    const DecompositionRule* match(const std::string& text) const;
    std::set<std::string> consumers_of(const std::string& producer) const;
    const SlotDefault* slot_default(const std::string& slot) const;

    static RuleTable from_json(const nlohmann::json& value, const std::string& source);
    static RuleTable load(const std::filesystem::path& path);
};

/// Parses a JSON file, mapping syntax errors to ConfigError("file:line").
nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace trafficgraph
