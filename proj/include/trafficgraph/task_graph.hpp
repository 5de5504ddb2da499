// SPDX-License-Identifier: Apache-2.0
//
// Task nodes, the dependency DAG, readiness frontier and completion
// bookkeeping.
#pragma once

#include "trafficgraph/error.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace trafficgraph {

using NodeId = std::uint32_t;
using QueryId = std::uint32_t;

enum class TaskType { Data, Analysis, Visual, Simulation, Optimize, General };

inline constexpr std::array<TaskType, 6> kAllTaskTypes{
    TaskType::Data,     TaskType::Analysis, TaskType::Visual,
    TaskType::Simulation, TaskType::Optimize, TaskType::General};

std::string_view to_string(TaskType type);
TaskType task_type_from_string(std::string_view name);

enum class TaskStatus { Pending, Ready, Running, Complete, Failed };

std::string_view to_string(TaskStatus status);
TaskStatus task_status_from_string(std::string_view name);

/// A required parameter the query text did not supply.
struct Unbound {
    std::string slot;
    friend bool operator==(const Unbound&, const Unbound&) = default;
};

/// A parameter whose value is a named fact published by an upstream
/// result (e.g. "top_time_loss").
struct FactRef {
    std::string fact;
    friend bool operator==(const FactRef&, const FactRef&) = default;
};

using ParamValue = std::variant<std::string, std::int64_t, double, bool, Unbound, FactRef>;
using ParamMap = std::map<std::string, ParamValue>;

/// Canonical rendering: numbers without trailing zeros, strings trimmed,
/// unbound slots as "?slot", fact references as "@fact".
std::string render_param(const ParamValue& value);
bool is_resolved(const ParamValue& value);

struct ToolCall {
    std::string tool;
    ParamMap params;

    /// Lowercase tool name followed by key-sorted, normalized parameters.
    /// Two calls with equal signatures compute the same result.
    std::string signature() const;
    bool fully_bound() const;

    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct Artifact {
    std::string kind;    // heatmap-data | map-marker | sim-log
    std::string path;    // relative to the artifact root
    std::string digest;  // sha256 of the file content, hex
    friend bool operator==(const Artifact&, const Artifact&) = default;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    friend bool operator==(const Table&, const Table&) = default;
};

using Payload = std::variant<std::monostate, double, std::string, Table, Artifact>;

struct ResultRecord {
    NodeId node = 0;
    Payload payload;
    std::string summary;
    std::int64_t token_size = 0;
};

struct Ledger {
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    double duration_ms = 0.0;

    std::int64_t tokens() const { return tokens_in + tokens_out; }
    friend bool operator==(const Ledger&, const Ledger&) = default;
};

struct TaskNode {
    NodeId id = 0;
    TaskType type = TaskType::General;
    ToolCall call;
    TaskStatus status = TaskStatus::Pending;
    std::optional<ResultRecord> result;
    Ledger ledger;
    std::set<QueryId> provenance;
    std::string failure;
};

using Edge = std::pair<NodeId, NodeId>;

/// Directed acyclic dependency graph. An edge (from, to) means `to`
/// depends on `from`. Single writer; copies are cheap snapshots.
class TaskGraph {
public:
    explicit TaskGraph(std::string origin = {}) : origin_(std::move(origin)) {}

    const std::string& origin() const noexcept { return origin_; }
    void set_origin(std::string origin) { origin_ = std::move(origin); }

    void add_task(TaskNode node);
    void add_dependency(NodeId from, NodeId to);

    /// Pending nodes whose predecessors are all Complete, ascending by id.
    /// Each returned node is moved to Ready.
    std::vector<NodeId> get_independent_tasks();

    void mark_running(NodeId id);
    void mark_complete(NodeId id, ResultRecord result, Ledger ledger = {});
    void mark_failed(NodeId id, std::string reason, Ledger ledger = {});

    /// Marks every transitive dependent that has not run yet as Failed
    /// with reason "dependency failed". Returns the affected ids ascending.
    std::vector<NodeId> cascade_failure(NodeId id);

    bool unprocessed_tasks() const;

    bool contains(NodeId id) const { return index_.contains(id); }
    const TaskNode& node(NodeId id) const;
    const std::vector<TaskNode>& nodes() const noexcept { return nodes_; }
    const std::set<Edge>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }

    const std::set<NodeId>& predecessors(NodeId id) const;
    const std::set<NodeId>& successors(NodeId id) const;

    /// Ancestors with their hop distance, nearest first, ties by id.
    std::vector<std::pair<NodeId, int>> ancestors(NodeId id) const;

    /// Kahn order with ascending-id tie-breaking.
    std::vector<NodeId> topological_order() const;

    void add_provenance(NodeId id, QueryId query);

private:
    TaskNode& mutable_node(NodeId id);
    void require_status(const TaskNode& node, TaskStatus expected, std::string_view action) const;
    std::optional<std::vector<NodeId>> find_path(NodeId from, NodeId to) const;

    std::string origin_;
    std::vector<TaskNode> nodes_;
    std::map<NodeId, std::size_t> index_;
    std::set<Edge> edges_;
    std::map<NodeId, std::set<NodeId>> preds_;
    std::map<NodeId, std::set<NodeId>> succs_;
};

/// Longest duration-weighted path over the graph.
double critical_path_length(const TaskGraph& graph, const std::map<NodeId, double>& durations);

}  // namespace trafficgraph
