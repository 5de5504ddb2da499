// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "trafficgraph/benchmark.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#ifndef TRAFFICGRAPH_DATA_DIR
#define TRAFFICGRAPH_DATA_DIR "data"
#endif

namespace trafficgraph::support {

inline std::filesystem::path data_dir() { return TRAFFICGRAPH_DATA_DIR; }

// Per-process temp dirs, removed at exit.
inline std::filesystem::path scratch_dir(const std::string& name) {
    struct Registry {
        std::set<std::filesystem::path> dirs;
        ~Registry() {
            std::error_code ec;
            for (const auto& d : dirs) std::filesystem::remove_all(d, ec);
        }
    };
    static Registry registry;
    auto dir = std::filesystem::temp_directory_path() / ("trafficgraph_test_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    registry.dirs.insert(dir);
    return dir;
}

inline EnginePaths default_paths(const std::string& scratch = "engine") {
    auto paths = EnginePaths::defaults(data_dir());
    paths.out_dir = scratch_dir(scratch);
    return paths;
}

// Engine over the shipped data files; artifacts go to a scratch dir.
inline const Engine& shared_engine() {
    static const Engine engine(default_paths());
    return engine;
}

inline const Workload& shared_workload() {
    static const Workload workload = Workload::load(data_dir() / "workload.json");
    return workload;
}

// Random DAG on n nodes: edges only from lower to higher id.
inline TaskGraph random_dag(std::mt19937_64& rng, int n, double density) {
    TaskGraph g;
    for (int i = 0; i < n; ++i) {
        TaskNode node;
        node.id = static_cast<NodeId>(i);
        node.provenance = {0};
        g.add_task(std::move(node));
    }
    std::bernoulli_distribution edge(density);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (edge(rng)) g.add_dependency(static_cast<NodeId>(a), static_cast<NodeId>(b));
        }
    }
    return g;
}

// Real tool calls with distinct signatures and no parameter dependencies.
inline ToolCall synthetic_call(std::mt19937_64& rng, int i) {
    switch (rng() % 7) {
    case 0: return {"simulation_controller", {{"steps", std::int64_t{1 + i}}}};
    case 1: return {"retrieve_traffic_data", {{"scope", std::string(i % 2 ? "roads" : "network")}, {"n", std::int64_t{i}}}};
    case 2: return {"intersection_performance", {{"top", std::int64_t{1 + i % 5}}}};
    case 3: return {"map_marker", {{"intersection", std::string(i % 2 ? "4493" : "7559")}, {"n", std::int64_t{i}}}};
    case 4: return {"webster", {{"intersection", std::string("8285")}, {"n", std::int64_t{i}}}};
    case 5: return {"general_answer", {{"topic", "signal timing " + std::to_string(i)}}};
    default: return {"road_name_to_id", {{"name", std::string("Main St")}, {"n", std::int64_t{i}}}};
    }
}

inline TaskType type_for(const std::string& tool) {
    if (tool == "simulation_controller") return TaskType::Simulation;
    if (tool == "retrieve_traffic_data" || tool == "road_name_to_id") return TaskType::Data;
    if (tool == "intersection_performance") return TaskType::Analysis;
    if (tool == "map_marker") return TaskType::Visual;
    if (tool == "webster") return TaskType::Optimize;
    return TaskType::General;
}

// Single-query batch over a random DAG of real tool calls.
inline QueryBatch synthetic_batch(std::mt19937_64& rng, int n, double density) {
    auto shape = random_dag(rng, n, density);
    Decomposition part;
    part.category = Category::Clear;
    for (const auto& node : shape.nodes()) {
        TaskNode t;
        t.id = node.id;
        t.call = synthetic_call(rng, static_cast<int>(node.id));
        t.type = type_for(t.call.tool);
        t.provenance = {0};
        part.tasks.push_back(std::move(t));
    }
    part.edges.assign(shape.edges().begin(), shape.edges().end());
    QueryBatch batch;
    batch.queries = {Query{0, "synthetic", Category::Clear}};
    batch.merged = build_dependency_graph(part.tasks, part.edges, "q0");
    batch.parts = {std::move(part)};
    return batch;
}

inline const TraceEvent* task_event(const RunTrace& trace, NodeId id) {
    for (const auto& e : trace.events) {
        if (e.kind == "task" && e.node == id) return &e;
    }
    return nullptr;
}

// Exactly-once (cascaded failures never run) and edge ordering.
inline std::vector<std::string> schedule_problems(const TaskGraph& g, const RunTrace& trace) {
    std::vector<std::string> out;
    std::map<NodeId, int> runs;
    for (const auto& e : trace.events) {
        if (e.kind == "task") ++runs[e.node];
        if (e.t_start > e.t_end) out.push_back("event ends before it starts");
    }
    for (const auto& n : g.nodes()) {
        const bool cascaded = n.status == TaskStatus::Failed && n.failure == "dependency failed";
        if (runs[n.id] != (cascaded ? 0 : 1)) out.push_back("node " + std::to_string(n.id) + " ran " + std::to_string(runs[n.id]) + "x");
    }
    for (auto [a, b] : g.edges()) {
        const auto* ea = task_event(trace, a);
        const auto* eb = task_event(trace, b);
        if (ea && eb && ea->t_end > eb->t_start) out.push_back("edge " + std::to_string(a) + "->" + std::to_string(b) + " overlaps");
    }
    return out;
}

// Ledger audit for one pair: every merged node runs and is charged once,
// from its own trace event; a signature both queries contain is charged
// once in the merged run and once per query across the chain runs; the
// run total equals the sum over all trace events.
inline std::vector<std::string> dedup_audit(const Engine& engine, const Workload& workload, const QueryPair& pair,
                                            int* shared_seen = nullptr) {
    std::vector<std::string> out;
    auto fail = [&](const std::string& what) { out.push_back(pair.name + ": " + what); };
    std::vector<std::string> texts;
    for (const auto& l : pair.labels) texts.push_back(workload.by_label(l).text);
    auto merged = engine.orchestrator().process_query(texts, {ExecutionPolicy::GraphParallel});
    const auto merged_batch = engine.decomposer().make_batch(texts);

    std::map<std::string, int> occurrences;
    std::vector<std::pair<RunResult, QueryBatch>> chains;
    for (const auto& text : texts) {
        auto batch = engine.decomposer().make_batch({text});
        std::set<std::string> sigs;
        for (const auto& n : batch.merged.nodes()) sigs.insert(n.call.signature());
        for (const auto& s : sigs) ++occurrences[s];
        chains.emplace_back(engine.orchestrator().process_batch(batch, {ExecutionPolicy::ChainSequential}), std::move(batch));
    }

    for (const auto& node : merged.graph.nodes()) {
        const auto sig = merged_batch.merged.node(node.id).call.signature();
        int events = 0;
        std::int64_t charged = 0;
        for (const auto& e : merged.trace.events) {
            if (e.kind == "task" && e.node == node.id) {
                ++events;
                charged += e.tokens_in + e.tokens_out;
            }
        }
        if (events != 1) fail("node " + std::to_string(node.id) + " has " + std::to_string(events) + " events");
        if (charged != node.ledger.tokens()) fail("node " + std::to_string(node.id) + " ledger mismatch");
        if (occurrences[sig] < 2) continue;
        if (shared_seen) ++*shared_seen;
        if (node.provenance.size() != 2) fail("shared node " + std::to_string(node.id) + " lost provenance");
        int chain_charges = 0;
        for (const auto& [run, batch] : chains) {
            for (const auto& n : run.graph.nodes()) {
                if (batch.merged.node(n.id).call.signature() != sig) continue;
                for (const auto& e : run.trace.events) {
                    if (e.kind == "task" && e.node == n.id && e.tokens_in + e.tokens_out > 0) ++chain_charges;
                }
            }
        }
        if (chain_charges != occurrences[sig]) fail("chain charged " + sig + " " + std::to_string(chain_charges) + "x");
    }
    std::int64_t total = 0, ledgers = 0, overhead = 0;
    for (const auto& e : merged.trace.events) {
        total += e.tokens_in + e.tokens_out;
        if (e.kind != "task") overhead += e.tokens_in + e.tokens_out;
    }
    for (const auto& n : merged.graph.nodes()) ledgers += n.ledger.tokens();
    if (merged.total_tokens != total || total != ledgers + overhead) fail("token totals do not add up");
    return out;
}

}  // namespace trafficgraph::support
