// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/task_graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <deque>
#include <queue>

namespace trafficgraph {

namespace {

constexpr std::array<std::string_view, 6> kTypeNames{"DATA",       "ANALYSIS", "VISUAL",
                                                     "SIMULATION", "OPTIMIZE", "GENERAL"};
constexpr std::array<std::string_view, 5> kStatusNames{"Pending", "Ready", "Running", "Complete",
                                                       "Failed"};

std::string trim(std::string_view text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

std::string render_number(double value) {
    if (std::isfinite(value) && value == std::floor(value) && std::fabs(value) < 1e15) {
        return std::to_string(static_cast<std::int64_t>(value));
    }
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.10f", value);
    std::string text(buffer);
    while (!text.empty() && text.back() == '0') text.pop_back();
    if (!text.empty() && text.back() == '.') text.pop_back();
    return text;
}

std::string id_list(const std::vector<NodeId>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += " -> ";
        out += std::to_string(ids[i]);
    }
    return out;
}

}  // namespace

std::string_view to_string(TaskType type) { return kTypeNames[static_cast<std::size_t>(type)]; }

TaskType task_type_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
        if (kTypeNames[i] == name) return static_cast<TaskType>(i);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown task type '" + std::string(name) + "'");
}

std::string_view to_string(TaskStatus status) {
    return kStatusNames[static_cast<std::size_t>(status)];
}

TaskStatus task_status_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
        if (kStatusNames[i] == name) return static_cast<TaskStatus>(i);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown task status '" + std::string(name) + "'");
}

std::string render_param(const ParamValue& value) {
    struct Visitor {
        std::string operator()(const std::string& s) const { return trim(s); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return render_number(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const Unbound& u) const { return "?" + u.slot; }
        std::string operator()(const FactRef& f) const { return "@" + f.fact; }
    };
    return std::visit(Visitor{}, value);
}

bool is_resolved(const ParamValue& value) {
    return !std::holds_alternative<Unbound>(value) && !std::holds_alternative<FactRef>(value);
}

std::string ToolCall::signature() const {
    std::string out;
    out.reserve(tool.size() + 16 * params.size());
    for (char c : tool) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out += '(';
    bool first = true;
    for (const auto& [key, value] : params) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        out += key;
        out += '=';
        out += render_param(value);
    }
    out += ')';
    return out;
}

bool ToolCall::fully_bound() const {
    return std::all_of(params.begin(), params.end(),
                       [](const auto& kv) { return is_resolved(kv.second); });
}

void TaskGraph::add_task(TaskNode node) {
    if (index_.contains(node.id)) {
        throw Error(ErrorKind::DuplicateId, "task id " + std::to_string(node.id) + " already present");
    }
    node.status = TaskStatus::Pending;
    node.result.reset();
    node.ledger = {};
    node.failure.clear();
    index_.emplace(node.id, nodes_.size());
    preds_[node.id];
    succs_[node.id];
    nodes_.push_back(std::move(node));
}

std::optional<std::vector<NodeId>> TaskGraph::find_path(NodeId from, NodeId to) const {
    // BFS over successor edges; parents give the path back.
    std::map<NodeId, NodeId> parent;
    std::deque<NodeId> frontier{from};
    parent.emplace(from, from);
    while (!frontier.empty()) {
        NodeId current = frontier.front();
        frontier.pop_front();
        if (current == to) {
            std::vector<NodeId> path{to};
            while (path.back() != from) path.push_back(parent.at(path.back()));
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (NodeId next : succs_.at(current)) {
            if (parent.emplace(next, current).second) frontier.push_back(next);
        }
    }
    return std::nullopt;
}

void TaskGraph::add_dependency(NodeId from, NodeId to) {
    for (NodeId id : {from, to}) {
        if (!index_.contains(id)) {
            throw Error(ErrorKind::UnknownId, "edge endpoint " + std::to_string(id) + " does not exist");
        }
    }
    if (edges_.contains({from, to})) {
        throw Error(ErrorKind::DuplicateEdge,
                    "edge " + std::to_string(from) + " -> " + std::to_string(to) + " already present");
    }
    if (from == to) {
        throw CycleError({from, from}, "self-dependency on task " + std::to_string(from));
    }
    if (auto back = find_path(to, from)) {
        std::vector<NodeId> cycle{from};
        cycle.insert(cycle.end(), back->begin(), back->end());
        throw CycleError(cycle, "edge " + std::to_string(from) + " -> " + std::to_string(to) +
                                    " closes cycle " + id_list(cycle));
    }
    edges_.emplace(from, to);
    succs_[from].insert(to);
    preds_[to].insert(from);
}

std::vector<NodeId> TaskGraph::get_independent_tasks() {
    std::vector<NodeId> ready;
    for (auto& node : nodes_) {
        if (node.status != TaskStatus::Pending) continue;
        const auto& preds = preds_.at(node.id);
        bool all_done = std::all_of(preds.begin(), preds.end(), [this](NodeId p) {
            return nodes_[index_.at(p)].status == TaskStatus::Complete;
        });
        if (all_done) ready.push_back(node.id);
    }
    std::sort(ready.begin(), ready.end());
    for (NodeId id : ready) mutable_node(id).status = TaskStatus::Ready;
    return ready;
}

void TaskGraph::require_status(const TaskNode& node, TaskStatus expected, std::string_view action) const {
    if (node.status != expected) {
        throw Error(ErrorKind::IllegalTransition,
                    "cannot " + std::string(action) + " task " + std::to_string(node.id) + " in status " +
                        std::string(to_string(node.status)));
    }
}

void TaskGraph::mark_running(NodeId id) {
    auto& node = mutable_node(id);
    require_status(node, TaskStatus::Ready, "start");
    node.status = TaskStatus::Running;
}

void TaskGraph::mark_complete(NodeId id, ResultRecord result, Ledger ledger) {
    auto& node = mutable_node(id);
    require_status(node, TaskStatus::Running, "complete");
    result.node = id;
    node.result = std::move(result);
    node.ledger = ledger;
    node.status = TaskStatus::Complete;
}

void TaskGraph::mark_failed(NodeId id, std::string reason, Ledger ledger) {
    auto& node = mutable_node(id);
    require_status(node, TaskStatus::Running, "fail");
    node.failure = std::move(reason);
    node.ledger = ledger;
    node.status = TaskStatus::Failed;
}

std::vector<NodeId> TaskGraph::cascade_failure(NodeId id) {
    std::vector<NodeId> affected;
    std::deque<NodeId> frontier(succs_.at(id).begin(), succs_.at(id).end());
    std::set<NodeId> seen;
    while (!frontier.empty()) {
        NodeId current = frontier.front();
        frontier.pop_front();
        if (!seen.insert(current).second) continue;
        auto& node = mutable_node(current);
        if (node.status == TaskStatus::Pending || node.status == TaskStatus::Ready) {
            node.status = TaskStatus::Failed;
            node.failure = "dependency failed";
            affected.push_back(current);
        }
        for (NodeId next : succs_.at(current)) frontier.push_back(next);
    }
    std::sort(affected.begin(), affected.end());
    return affected;
}

bool TaskGraph::unprocessed_tasks() const {
    return std::any_of(nodes_.begin(), nodes_.end(), [](const TaskNode& n) {
        return n.status != TaskStatus::Complete && n.status != TaskStatus::Failed;
    });
}

const TaskNode& TaskGraph::node(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::UnknownId, "no task with id " + std::to_string(id));
    return nodes_[it->second];
}

TaskNode& TaskGraph::mutable_node(NodeId id) { return const_cast<TaskNode&>(std::as_const(*this).node(id)); }

const std::set<NodeId>& TaskGraph::predecessors(NodeId id) const {
    auto it = preds_.find(id);
    if (it == preds_.end()) throw Error(ErrorKind::UnknownId, "no task with id " + std::to_string(id));
    return it->second;
}

const std::set<NodeId>& TaskGraph::successors(NodeId id) const {
    auto it = succs_.find(id);
    if (it == succs_.end()) throw Error(ErrorKind::UnknownId, "no task with id " + std::to_string(id));
    return it->second;
}

std::vector<std::pair<NodeId, int>> TaskGraph::ancestors(NodeId id) const {
    std::map<NodeId, int> distance;
    std::deque<NodeId> frontier{id};
    distance.emplace(id, 0);
    while (!frontier.empty()) {
        NodeId current = frontier.front();
        frontier.pop_front();
        for (NodeId p : predecessors(current)) {
            if (distance.emplace(p, distance.at(current) + 1).second) frontier.push_back(p);
        }
    }
    distance.erase(id);
    std::vector<std::pair<NodeId, int>> out(distance.begin(), distance.end());
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    return out;
}

std::vector<NodeId> TaskGraph::topological_order() const {
    std::map<NodeId, std::size_t> indegree;
    for (const auto& node : nodes_) indegree[node.id] = preds_.at(node.id).size();
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push(id);
    }
    std::vector<NodeId> order;
    order.reserve(nodes_.size());
    while (!ready.empty()) {
        NodeId id = ready.top();
        ready.pop();
        order.push_back(id);
        for (NodeId next : succs_.at(id)) {
            if (--indegree[next] == 0) ready.push(next);
        }
    }
    return order;
}

void TaskGraph::add_provenance(NodeId id, QueryId query) { mutable_node(id).provenance.insert(query); }

double critical_path_length(const TaskGraph& graph, const std::map<NodeId, double>& durations) {
    std::map<NodeId, double> finish;
    double longest = 0.0;
    for (NodeId id : graph.topological_order()) {
        auto it = durations.find(id);
        if (it == durations.end()) {
            throw Error(ErrorKind::MissingDuration, "no duration for task " + std::to_string(id));
        }
        double start = 0.0;
        for (NodeId p : graph.predecessors(id)) start = std::max(start, finish.at(p));
        finish[id] = start + it->second;
        longest = std::max(longest, finish[id]);
    }
    return longest;
}

}  // namespace trafficgraph
