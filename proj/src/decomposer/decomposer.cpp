// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/decomposer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace trafficgraph {

using nlohmann::json;

namespace {

std::string trim(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

using SlotValues = std::map<std::string, ParamValue>;

SlotValues extract_slots(const DecompositionRule& rule, const std::string& text) {
    SlotValues values;
    values["query"] = trim(text);
    for (const auto& slot : rule.slots) {
        std::smatch m;
        if (std::regex_search(text, m, slot.regex) && m[1].matched) {
            auto raw = trim(m[1].str());
            if (slot.integer) {
                try {
                    values[slot.name] = static_cast<std::int64_t>(std::stoll(raw));
                    continue;
                } catch (const std::exception&) {
                }
            } else if (!raw.empty()) {
                values[slot.name] = raw;
                continue;
            }
        }
        if (slot.required) values[slot.name] = Unbound{slot.name};
    }
    return values;
}

std::optional<ParamValue> instantiate_param(const json& value, const SlotValues& slots) {
    if (value.is_boolean()) return ParamValue{value.get<bool>()};
    if (value.is_number_integer()) return ParamValue{value.get<std::int64_t>()};
    if (value.is_number()) return ParamValue{value.get<double>()};
    auto text = value.get<std::string>();
    if (text.size() > 2 && text.front() == '{' && text.back() == '}') {
        auto it = slots.find(text.substr(1, text.size() - 2));
        if (it == slots.end()) return std::nullopt;  // optional slot absent
        return it->second;
    }
    if (text.size() > 1 && text.front() == '@') return ParamValue{FactRef{text.substr(1)}};
    return ParamValue{text};
}

}  // namespace

Category Decomposer::classify_query(const std::string& text) const {
    return instantiate(Query{0, text, Category::GeneralQA}).category;
}

Query Decomposer::make_query(QueryId id, const std::string& text) const {
    return Query{id, text, classify_query(text)};
}

Decomposition Decomposer::breakdown_query(const Query& query) const {
    auto out = instantiate(query);
    out.category = query.category;
    return out;
}

Decomposition Decomposer::instantiate(const Query& query) const {
    if (trim(query.text).empty()) throw Error(ErrorKind::EmptyQuery, "query text is empty");
    Decomposition out;
    const auto* rule = rules_.match(query.text);
    if (!rule) {
        TaskNode node;
        node.type = TaskType::General;
        node.call = ToolCall{"general_answer", {{"topic", trim(query.text)}}};
        node.provenance = {query.id};
        out.tasks.push_back(std::move(node));
        out.category = Category::GeneralQA;
        return out;
    }
    out.rule = rule->name;
    const auto slots = extract_slots(*rule, query.text);
    bool unbound = false;
    for (std::size_t i = 0; i < rule->tasks.size(); ++i) {
        const auto& tmpl = rule->tasks[i];
        TaskNode node;
        node.id = static_cast<NodeId>(i);
        node.type = tmpl.type;
        node.call.tool = tmpl.tool;
        for (const auto& [key, value] : tmpl.params.items()) {
            if (auto param = instantiate_param(value, slots)) {
                unbound = unbound || std::holds_alternative<Unbound>(*param);
                node.call.params.emplace(key, std::move(*param));
            }
        }
        node.provenance = {query.id};
        out.tasks.push_back(std::move(node));
    }
    out.edges = rule->edges;
    if (rule->category) {
        out.category = *rule->category;
    } else {
        out.category = unbound ? Category::Fuzzy : Category::Clear;
    }
    return out;
}

QueryBatch Decomposer::make_batch(const std::vector<std::string>& texts) const {
    QueryBatch batch;
    std::vector<TaskGraph> graphs;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        batch.queries.push_back(make_query(static_cast<QueryId>(i), texts[i]));
        batch.parts.push_back(breakdown_query(batch.queries.back()));
        graphs.push_back(build_dependency_graph(batch.parts.back().tasks, batch.parts.back().edges,
                                                "q" + std::to_string(i)));
    }
    batch.merged = merge_query_graphs(graphs);
    return batch;
}

TaskGraph build_dependency_graph(const std::vector<TaskNode>& tasks, const std::vector<Edge>& edges,
                                 std::string origin) {
    if (tasks.empty()) throw Error(ErrorKind::InvalidArgument, "cannot build a graph without tasks");
    TaskGraph graph(std::move(origin));
    for (const auto& task : tasks) graph.add_task(task);
    for (const auto& [from, to] : edges) graph.add_dependency(from, to);
    return graph;
}

TaskGraph merge_query_graphs(std::span<const TaskGraph> graphs) {
    TaskGraph merged;
    std::string origin;
    std::map<std::string, NodeId> by_signature;
    std::vector<std::map<NodeId, NodeId>> remap(graphs.size());
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        if (!origin.empty()) origin += "+";
        origin += graphs[g].origin();
        for (const auto& node : graphs[g].nodes()) {
            const auto sig = node.call.signature();
            auto it = by_signature.find(sig);
            if (it == by_signature.end()) {
                TaskNode copy;
                copy.id = static_cast<NodeId>(merged.size());
                copy.type = node.type;
                copy.call = node.call;
                copy.provenance = node.provenance;
                it = by_signature.emplace(sig, copy.id).first;
                merged.add_task(std::move(copy));
            } else {
                for (auto q : node.provenance) merged.add_provenance(it->second, q);
            }
            remap[g][node.id] = it->second;
        }
    }
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        for (const auto& [from, to] : graphs[g].edges()) {
            const Edge e{remap[g][from], remap[g][to]};
            if (!merged.edges().contains(e)) merged.add_dependency(e.first, e.second);
        }
    }
    merged.set_origin(origin);
    return merged;
}

TaskGraph merge_query_graphs(const QueryBatch& batch) {
    std::vector<TaskGraph> graphs;
    for (std::size_t i = 0; i < batch.parts.size(); ++i) {
        graphs.push_back(build_dependency_graph(batch.parts[i].tasks, batch.parts[i].edges, "q" + std::to_string(i)));
    }
    return merge_query_graphs(graphs);
}

std::vector<std::string> unbound_slots(const TaskNode& node) {
    std::vector<std::string> out;
    for (const auto& [key, value] : node.call.params) {
        if (const auto* u = std::get_if<Unbound>(&value)) out.push_back(u->slot);
    }
    return out;
}

bool slot_bindable(const TaskGraph& graph, NodeId node, const std::string& slot, const RuleTable& rules) {
    const auto* def = rules.slot_default(slot);
    if (!def || def->fact.empty()) return false;
    for (const auto& [ancestor, distance] : graph.ancestors(node)) {
        if (def->producers.contains(graph.node(ancestor).call.tool)) return true;
    }
    return false;
}

}  // namespace trafficgraph
