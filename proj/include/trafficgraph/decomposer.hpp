// SPDX-License-Identifier: Apache-2.0
//
// Query classification, rule-based task breakdown, graph construction and
// multi-query coalescing.
#pragma once

#include "trafficgraph/rules.hpp"
#include "trafficgraph/task_graph.hpp"

#include <span>
#include <string>
#include <vector>

namespace trafficgraph {

struct Query {
    QueryId id = 0;
    std::string text;
    Category category = Category::GeneralQA;
};

/// Tasks with local ids 0..n-1 and the edges among them.
struct Decomposition {
    std::string rule;  // empty when no rule matched
    Category category = Category::GeneralQA;
    std::vector<TaskNode> tasks;
    std::vector<Edge> edges;
};

struct QueryBatch {
    std::vector<Query> queries;
    std::vector<Decomposition> parts;  // parallel to queries
    TaskGraph merged;
};

/// Deterministic keyword-rule decomposer. Any other decomposer (e.g. one
/// backed by a language model) only has to produce the same Decomposition.
class Decomposer {
public:
    explicit Decomposer(RuleTable rules) : rules_(std::move(rules)) {}

    Category classify_query(const std::string& text) const;
    Query make_query(QueryId id, const std::string& text) const;
    Decomposition breakdown_query(const Query& query) const;

    /// Classifies, decomposes and merges `texts`; query ids are positions.
    QueryBatch make_batch(const std::vector<std::string>& texts) const;

    const RuleTable& rules() const noexcept { return rules_; }

private:
    Decomposition instantiate(const Query& query) const;

    RuleTable rules_;
};

TaskGraph build_dependency_graph(const std::vector<TaskNode>& tasks, const std::vector<Edge>& edges,
                                 std::string origin = {});

/// Union of `graphs` with nodes of equal signature coalesced. Surviving
/// ids are dense, in first-appearance order; provenance is the union.
TaskGraph merge_query_graphs(std::span<const TaskGraph> graphs);
TaskGraph merge_query_graphs(const QueryBatch& batch);

/// Unbound slots of `node`, in parameter-key order.
std::vector<std::string> unbound_slots(const TaskNode& node);

/// True when an ancestor of `node` runs a tool that publishes the fact
/// the slot's default rule reads.
bool slot_bindable(const TaskGraph& graph, NodeId node, const std::string& slot, const RuleTable& rules);

}  // namespace trafficgraph
