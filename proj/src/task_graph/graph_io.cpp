// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/graph_io.hpp"

#include <sstream>

namespace trafficgraph {

using nlohmann::json;

namespace {

std::string join_ids(const std::set<QueryId>& ids) {
    if (ids.empty()) return "-";
    std::string out;
    for (QueryId id : ids) {
        if (!out.empty()) out += ',';
        out += std::to_string(id);
    }
    return out;
}

std::set<QueryId> split_ids(std::string_view text) {
    std::set<QueryId> out;
    if (text == "-") return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        out.insert(static_cast<QueryId>(std::stoul(std::string(piece))));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string text_value(const ParamValue& value) {
    if (const auto* u = std::get_if<Unbound>(&value)) return "?" + u->slot;
    if (const auto* f = std::get_if<FactRef>(&value)) return "@" + f->fact;
    return param_to_json(value).dump();
}

ParamValue parse_text_value(const std::string& token) {
    if (!token.empty() && token[0] == '?') return Unbound{token.substr(1)};
    if (!token.empty() && token[0] == '@') return FactRef{token.substr(1)};
    return param_from_json(json::parse(token));
}

// Splits on spaces, keeping double-quoted runs (with backslash escapes)
// inside a single token.
std::vector<std::string> tokenize(std::string_view line) {
    std::vector<std::string> tokens;
    std::string current;
    bool quoted = false;
    bool have = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            current += c;
            if (c == '\\' && i + 1 < line.size()) {
                current += line[++i];
            } else if (c == '"') {
                quoted = false;
            }
        } else if (c == ' ') {
            if (have) tokens.push_back(std::move(current));
            current.clear();
            have = false;
        } else {
            if (c == '"') quoted = true;
            current += c;
            have = true;
        }
    }
    if (quoted) throw Error(ErrorKind::InvalidArgument, "unterminated quote in line: " + std::string(line));
    if (have) tokens.push_back(std::move(current));
    return tokens;
}

}  // namespace

json param_to_json(const ParamValue& value) {
    struct Visitor {
        json operator()(const std::string& s) const { return s; }
        json operator()(std::int64_t v) const { return v; }
        json operator()(double v) const { return v; }
        json operator()(bool v) const { return v; }
        json operator()(const Unbound& u) const { return json{{"unbound", u.slot}}; }
        json operator()(const FactRef& f) const { return json{{"fact", f.fact}}; }
    };
    return std::visit(Visitor{}, value);
}

ParamValue param_from_json(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>();
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number()) return value.get<double>();
    if (value.is_object() && value.contains("unbound")) return Unbound{value.at("unbound").get<std::string>()};
    if (value.is_object() && value.contains("fact")) return FactRef{value.at("fact").get<std::string>()};
    throw Error(ErrorKind::InvalidArgument, "unsupported parameter value " + value.dump());
}

json tool_call_to_json(const ToolCall& call) {
    json params = json::object();
    for (const auto& [key, value] : call.params) params[key] = param_to_json(value);
    return json{{"tool", call.tool}, {"params", params}};
}

ToolCall tool_call_from_json(const json& value) {
    ToolCall call;
    call.tool = value.at("tool").get<std::string>();
    if (value.contains("params")) {
        for (const auto& [key, param] : value.at("params").items()) call.params.emplace(key, param_from_json(param));
    }
    return call;
}

json payload_to_json(const Payload& payload) {
    struct Visitor {
        json operator()(std::monostate) const { return nullptr; }
        json operator()(double v) const { return json{{"scalar", v}}; }
        json operator()(const std::string& s) const { return json{{"text", s}}; }
        json operator()(const Table& t) const { return json{{"table", {{"columns", t.columns}, {"rows", t.rows}}}}; }
        json operator()(const Artifact& a) const {
            return json{{"artifact", {{"kind", a.kind}, {"path", a.path}, {"digest", a.digest}}}};
        }
    };
    return std::visit(Visitor{}, payload);
}

json graph_to_json(const TaskGraph& graph) {
    json nodes = json::array();
    for (const auto& node : graph.nodes()) {
        json entry{{"id", node.id},
                   {"type", std::string(to_string(node.type))},
                   {"status", std::string(to_string(node.status))},
                   {"call", tool_call_to_json(node.call)},
                   {"signature", node.call.signature()},
                   {"queries", node.provenance}};
        if (node.status == TaskStatus::Complete || node.status == TaskStatus::Failed) {
            entry["ledger"] = {{"tokens_in", node.ledger.tokens_in},
                               {"tokens_out", node.ledger.tokens_out},
                               {"duration_ms", node.ledger.duration_ms}};
        }
        if (node.result) {
            entry["result"] = {{"summary", node.result->summary},
                               {"token_size", node.result->token_size},
                               {"payload", payload_to_json(node.result->payload)}};
        }
        if (!node.failure.empty()) entry["failure"] = node.failure;
        nodes.push_back(std::move(entry));
    }
    json edges = json::array();
    for (const auto& [from, to] : graph.edges()) edges.push_back({from, to});
    return json{{"origin", graph.origin()}, {"nodes", nodes}, {"edges", edges}};
}

TaskGraph graph_from_json(const json& value) {
    TaskGraph graph(value.value("origin", std::string{}));
    for (const auto& entry : value.at("nodes")) {
        TaskNode node;
        node.id = entry.at("id").get<NodeId>();
        node.type = task_type_from_string(entry.at("type").get<std::string>());
        node.call = tool_call_from_json(entry.at("call"));
        node.provenance = entry.value("queries", std::set<QueryId>{});
        graph.add_task(std::move(node));
    }
    for (const auto& edge : value.at("edges")) graph.add_dependency(edge.at(0).get<NodeId>(), edge.at(1).get<NodeId>());
    return graph;
}

std::string graph_to_text(const TaskGraph& graph) {
    std::ostringstream out;
    out << "graph " << json(graph.origin()).dump() << '\n';
    for (const auto& node : graph.nodes()) {
        out << "node " << node.id << ' ' << to_string(node.type) << ' ' << to_string(node.status) << " q="
            << join_ids(node.provenance) << ' ' << node.call.tool;
        for (const auto& [key, value] : node.call.params) out << ' ' << key << '=' << text_value(value);
        out << '\n';
    }
    for (const auto& [from, to] : graph.edges()) out << "edge " << from << ' ' << to << '\n';
    return out.str();
}

TaskGraph graph_from_text(std::string_view text) {
    TaskGraph graph;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto tokens = tokenize(line);
        const auto where = "line " + std::to_string(line_no) + ": ";
        if (tokens[0] == "graph" && tokens.size() == 2) {
            graph.set_origin(json::parse(tokens[1]).get<std::string>());
        } else if (tokens[0] == "node" && tokens.size() >= 6) {
            TaskNode node;
            node.id = static_cast<NodeId>(std::stoul(tokens[1]));
            node.type = task_type_from_string(tokens[2]);
            task_status_from_string(tokens[3]);
            if (tokens[4].rfind("q=", 0) != 0) throw Error(ErrorKind::InvalidArgument, where + "expected q=");
            node.provenance = split_ids(std::string_view(tokens[4]).substr(2));
            node.call.tool = tokens[5];
            for (std::size_t i = 6; i < tokens.size(); ++i) {
                auto eq = tokens[i].find('=');
                if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, where + "bad parameter " + tokens[i]);
                node.call.params.emplace(tokens[i].substr(0, eq), parse_text_value(tokens[i].substr(eq + 1)));
            }
            graph.add_task(std::move(node));
        } else if (tokens[0] == "edge" && tokens.size() == 3) {
            graph.add_dependency(static_cast<NodeId>(std::stoul(tokens[1])), static_cast<NodeId>(std::stoul(tokens[2])));
        } else {
            throw Error(ErrorKind::InvalidArgument, where + "unrecognized record '" + line + "'");
        }
    }
    return graph;
}

}  // namespace trafficgraph
