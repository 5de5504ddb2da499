// SPDX-License-Identifier: Apache-2.0
//
// Executors: the wavefront graph executor and the sequential chain
// baseline, on a virtual clock or on real threads.
#pragma once

#include "trafficgraph/agents.hpp"
#include "trafficgraph/backend.hpp"
#include "trafficgraph/bus.hpp"
#include "trafficgraph/calibration.hpp"
#include "trafficgraph/context.hpp"
#include "trafficgraph/decomposer.hpp"
#include "trafficgraph/react.hpp"
#include "trafficgraph/toolbox.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace trafficgraph {

enum class ClockMode { Simulated, Wall };

std::string_view to_string(ClockMode mode);
ClockMode clock_mode_from_string(std::string_view name);  // "simulated" | "wall"

struct TraceEvent {
    std::string kind;  // decompose | build_graph | task
    NodeId node = 0;   // query id for overhead events
    double t_start = 0.0;
    double t_end = 0.0;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct RunTrace {
    std::vector<TraceEvent> events;
    std::map<NodeId, Ledger> ledgers;

    std::int64_t tokens() const;
};

/// Last end minus first start; 0 for an empty trace.
double makespan(const RunTrace& trace);

std::string trace_to_text(const RunTrace& trace);
nlohmann::json trace_to_json(const RunTrace& trace);

// ---- clock-level executors ------------------------------------------------

struct TaskOutcome {
    bool ok = true;
    ResultRecord result;
    Ledger ledger;  // tokens; the clock fills in the duration
    std::string error;
};

/// Executes the given Ready nodes (possibly concurrently) and returns
/// one outcome per node, in the same order.
using BatchRunner = std::function<std::vector<TaskOutcome>(const TaskGraph&, const std::vector<NodeId>&)>;
/// Called after a node reaches Complete, before anything else starts.
using CompletionHook = std::function<void(const TaskGraph&, NodeId)>;

/// Discrete-event wavefront loop: whenever tasks finish at virtual time t,
/// every newly independent task starts at t. Failed nodes are charged their
/// duration and their dependents are failed without running.
void simulate_graph_parallel(TaskGraph& graph, const std::map<NodeId, double>& durations, double start_ms,
                             const BatchRunner& runner, RunTrace& trace, const CompletionHook& on_complete = {});

/// One task at a time in ascending-id topological order. Before the first
/// task of each query (smallest provenance id) a "decompose" event of
/// `per_query` is inserted.
void simulate_chain(TaskGraph& graph, const std::map<NodeId, double>& durations, double start_ms,
                    const BatchRunner& runner, RunTrace& trace, const CompletionHook& on_complete = {},
                    Overhead per_query = {});

// ---- orchestration --------------------------------------------------------

struct OrchestratorConfig {
    ExecutionPolicy policy = ExecutionPolicy::GraphParallel;
    ClockMode clock = ClockMode::Simulated;
    std::size_t workers = 0;   // 0: one per ready task (simulated) / hardware threads (wall)
    double time_scale = 0.01;  // wall mode sleeps duration * time_scale ms
};

struct RunResult {
    ExecutionPolicy policy = ExecutionPolicy::GraphParallel;
    std::vector<Query> queries;
    TaskGraph graph;  // merged (graph) or disjoint union (chain), final statuses
    RunTrace trace;
    ContextStore context;
    std::string response;
    std::int64_t total_tokens = 0;
    int clarifications = 0;
    std::map<NodeId, std::vector<ReActStep>> react;
    std::map<NodeId, ToolCall> resolved;

    double makespan_ms() const { return makespan(trace); }
};

/// Disjoint union with ids renumbered densely in input order.
TaskGraph disjoint_union(std::span<const TaskGraph> graphs);

/// Number of user clarifications the policy needs for `graph`. The chain
/// asks for every unbound slot; the graph only for slots no in-graph
/// producer can bind.
int count_clarifications(const TaskGraph& graph, ExecutionPolicy policy, const RuleTable& rules);

/// Per-query sections built from sink results; failed sinks become error
/// sections. A single query yields just its sink summaries.
std::string combine_results(const TaskGraph& graph);

class Orchestrator {
public:
    Orchestrator(const Decomposer& decomposer, const AgentRegistry& agents, const Toolbox& toolbox,
                 const CalibrationProfile& calibration, ScriptTable scripts);

    RunResult process_query(const std::vector<std::string>& texts, const OrchestratorConfig& config) const;
    RunResult process_batch(const QueryBatch& batch, const OrchestratorConfig& config) const;

private:
    const Decomposer& decomposer_;
    const AgentRegistry& agents_;
    const Toolbox& toolbox_;
    const CalibrationProfile& calibration_;
    ScriptTable scripts_;
};

}  // namespace trafficgraph
