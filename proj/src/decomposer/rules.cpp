// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/rules.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace trafficgraph {

using nlohmann::json;

std::string_view to_string(Category category) {
    switch (category) {
    case Category::GeneralQA: return "GeneralQA";
    case Category::Clear: return "Clear";
    case Category::Fuzzy: return "Fuzzy";
    case Category::OpenEnded: return "OpenEnded";
    }
    return "GeneralQA";
}

Category category_from_string(std::string_view name) {
    if (name == "GeneralQA") return Category::GeneralQA;
    if (name == "Clear") return Category::Clear;
    if (name == "Fuzzy") return Category::Fuzzy;
    if (name == "OpenEnded") return Category::OpenEnded;
    throw Error(ErrorKind::InvalidArgument, "unknown category '" + std::string(name) + "'");
}

namespace {

std::string lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return text;
}

std::vector<std::string> keywords(const json& match, const char* key, const std::string& where) {
    std::vector<std::string> out;
    if (!match.contains(key)) return out;
    if (!match[key].is_array()) throw ConfigError(where, std::string("match.") + key + " must be a list");
    for (const auto& word : match[key]) {
        if (!word.is_string() || word.get<std::string>().empty()) {
            throw ConfigError(where, std::string("match.") + key + " entries must be non-empty strings");
        }
        out.push_back(lower(word.get<std::string>()));
    }
    return out;
}

std::regex compile(const std::string& pattern, const std::string& where) {
    try {
        return std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
        throw ConfigError(where, "bad pattern '" + pattern + "': " + e.what());
    }
}

void check_template_params(const json& params, const DecompositionRule& rule, const std::string& where) {
    for (const auto& [key, value] : params.items()) {
        if (value.is_object() || value.is_array() || value.is_null()) {
            throw ConfigError(where, "parameter '" + key + "' must be a scalar");
        }
        if (!value.is_string()) continue;
        const auto text = value.get<std::string>();
        if (text.size() > 2 && text.front() == '{' && text.back() == '}') {
            const auto slot = text.substr(1, text.size() - 2);
            bool known = slot == "query" ||
                         std::any_of(rule.slots.begin(), rule.slots.end(), [&](const SlotSpec& s) { return s.name == slot; });
            if (!known) throw ConfigError(where, "parameter '" + key + "' names undeclared slot '" + slot + "'");
        }
    }
}

DecompositionRule parse_rule(const json& value, const std::string& where) {
    if (!value.is_object()) throw ConfigError(where, "rule must be an object");
    DecompositionRule rule;
    rule.name = value.value("name", "");
    if (rule.name.empty()) throw ConfigError(where, "rule needs a name");
    if (value.contains("category")) {
        try {
            rule.category = category_from_string(value["category"].get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(where, e.what());
        }
    }
    const json match = value.value("match", json::object());
    rule.all = keywords(match, "all", where);
    rule.any = keywords(match, "any", where);
    rule.none = keywords(match, "none", where);
    if (match.contains("pattern")) rule.requires_pattern = compile(match["pattern"].get<std::string>(), where);
    if (rule.all.empty() && rule.any.empty() && !rule.requires_pattern) {
        throw ConfigError(where, "rule matches every query");
    }

    const json slots = value.value("slots", json::object());
    for (const auto& slot : slots.items()) {
        SlotSpec spec;
        spec.name = slot.key();
        spec.pattern = slot.value().value("pattern", "");
        spec.required = slot.value().value("required", true);
        const auto type = slot.value().value("type", "string");
        if (type != "string" && type != "int") throw ConfigError(where, "slot '" + spec.name + "' has unknown type " + type);
        spec.integer = type == "int";
        spec.regex = compile(spec.pattern, where);
        if (spec.regex.mark_count() < 1) throw ConfigError(where, "slot '" + spec.name + "' pattern needs a capture group");
        rule.slots.push_back(std::move(spec));
    }

    const json tasks = value.value("tasks", json::array());
    if (!tasks.is_array() || tasks.empty()) throw ConfigError(where, "rule emits no tasks");
    for (const auto& task : tasks) {
        TaskTemplate tmpl;
        try {
            tmpl.type = task_type_from_string(task.at("type").get<std::string>());
            tmpl.tool = task.at("tool").get<std::string>();
        } catch (const std::exception& e) {
            throw ConfigError(where, std::string("bad task: ") + e.what());
        }
        tmpl.params = task.value("params", json::object());
        if (!tmpl.params.is_object()) throw ConfigError(where, "task params must be an object");
        check_template_params(tmpl.params, rule, where);
        rule.tasks.push_back(std::move(tmpl));
    }

    TaskGraph probe;
    for (std::size_t i = 0; i < rule.tasks.size(); ++i) {
        TaskNode node;
        node.id = static_cast<NodeId>(i);
        probe.add_task(std::move(node));
    }
    for (const auto& edge : value.value("edges", json::array())) {
        if (!edge.is_array() || edge.size() != 2) throw ConfigError(where, "edge must be a [from, to] pair");
        Edge e{edge[0].get<NodeId>(), edge[1].get<NodeId>()};
        try {
            probe.add_dependency(e.first, e.second);
        } catch (const Error& err) {
            throw ConfigError(where, std::string("bad edge: ") + err.what());
        }
        rule.edges.push_back(e);
    }
    return rule;
}

}  // namespace

bool DecompositionRule::matches(const std::string& text) const {
    const auto lowered = lower(text);
    auto has = [&](const std::string& word) { return lowered.find(word) != std::string::npos; };
    if (!std::all_of(all.begin(), all.end(), has)) return false;
    if (!any.empty() && !std::any_of(any.begin(), any.end(), has)) return false;
    if (std::any_of(none.begin(), none.end(), has)) return false;
    if (requires_pattern && !std::regex_search(text, *requires_pattern)) return false;
    return true;
}

const DecompositionRule* RuleTable::match(const std::string& text) const {
    for (const auto& rule : rules) {
        if (rule.matches(text)) return &rule;
    }
    return nullptr;
}

std::set<std::string> RuleTable::consumers_of(const std::string& producer) const {
    auto it = relevance.find(producer);
    return it == relevance.end() ? std::set<std::string>{} : it->second;
}

const SlotDefault* RuleTable::slot_default(const std::string& slot) const {
    auto it = slot_defaults.find(slot);
    return it == slot_defaults.end() ? nullptr : &it->second;
}

RuleTable RuleTable::from_json(const json& value, const std::string& source) {
    if (!value.is_object()) throw ConfigError(source, "rule table must be an object");
    RuleTable table;
    table.source = source;
    const json defaults = value.value("slot_defaults", json::object());
    for (const auto& [slot, spec] : defaults.items()) {
        SlotDefault def;
        def.fact = spec.value("fact", "");
        def.clarification = spec.value("clarification", "");
        for (const auto& p : spec.value("producers", json::array())) def.producers.insert(p.get<std::string>());
        if (!def.fact.empty() && def.producers.empty()) {
            throw ConfigError(source + ":slot_defaults." + slot, "fact without producers");
        }
        table.slot_defaults.emplace(slot, std::move(def));
    }
    const json relevance = value.value("relevance", json::object());
    for (const auto& [producer, consumers] : relevance.items()) {
        auto& set = table.relevance[producer];
        for (const auto& c : consumers) set.insert(c.get<std::string>());
    }
    const json rules = value.value("rules", json::array());
    if (!rules.is_array()) throw ConfigError(source, "rules must be a list");
    for (std::size_t i = 0; i < rules.size(); ++i) {
        table.rules.push_back(parse_rule(rules[i], source + ":rule[" + std::to_string(i) + "]"));
    }
    return table;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ConfigError(path.string() + ":" + std::to_string(line), e.what());
    }
}

RuleTable RuleTable::load(const std::filesystem::path& path) {
    return from_json(load_json_file(path), path.string());
}

}  // namespace trafficgraph
