// SPDX-License-Identifier: Apache-2.0
//
// Benchmark harness: workload and pair files, per-function token and
// latency comparison of the two policies, combined-query timing, rounds
// and cost.
#pragma once

#include "trafficgraph/agents.hpp"
#include "trafficgraph/calibration.hpp"
#include "trafficgraph/decomposer.hpp"
#include "trafficgraph/network.hpp"
#include "trafficgraph/scheduler.hpp"
#include "trafficgraph/toolbox.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace trafficgraph {

struct WorkloadQuery {
    std::string label;
    std::string text;
    std::optional<Category> expected;
};

struct Workload {
    std::vector<WorkloadQuery> queries;

    const WorkloadQuery& by_label(const std::string& label) const;
    static Workload from_json(const nlohmann::json& value, const std::string& source);
    static Workload load(const std::filesystem::path& path);
};

struct QueryPair {
    std::string name;
    std::vector<std::string> labels;  // workload labels, usually two
};

/// Entries reference workload queries by label or by index.
std::vector<QueryPair> load_pairs(const std::filesystem::path& path, const Workload& workload);
std::vector<QueryPair> pairs_from_json(const nlohmann::json& value, const std::string& source, const Workload& workload);

struct EnginePaths {
    std::filesystem::path rules;
    std::filesystem::path agents;
    std::filesystem::path scripts;
    std::filesystem::path calibration;
    std::optional<std::filesystem::path> network;  // generated when absent
    std::uint64_t seed = 42;
    int intersections = 5;
    int roads = 10;
    std::filesystem::path out_dir = "out";

    /// Default file names under `data_dir`.
    static EnginePaths defaults(const std::filesystem::path& data_dir);
};

/// Everything a run needs, loaded once.
class Engine {
public:
    explicit Engine(const EnginePaths& paths);

    const Decomposer& decomposer() const noexcept { return decomposer_; }
    const AgentRegistry& agents() const noexcept { return agents_; }
    const Toolbox& toolbox() const noexcept { return toolbox_; }
    const CalibrationProfile& calibration() const noexcept { return calibration_; }
    const RoadNetwork& network() const noexcept { return *network_; }
    const Orchestrator& orchestrator() const noexcept { return orchestrator_; }

private:
    Decomposer decomposer_;
    AgentRegistry agents_;
    CalibrationProfile calibration_;
    std::shared_ptr<const RoadNetwork> network_;
    Toolbox toolbox_;
    Orchestrator orchestrator_;
};

/// Rounds model: 1 + clarification exchanges. The chain additionally
/// spends one synthesis exchange per open-ended sub-goal beyond the first
/// (sub-goals are the root-to-sink paths of the decomposition).
int conversational_rounds(const Decomposition& part, ExecutionPolicy policy, const RuleTable& rules);

std::int64_t count_root_to_sink_paths(const TaskGraph& graph);

struct FunctionMetrics {
    std::string label;
    Category category = Category::GeneralQA;
    std::int64_t tokens_graph = 0;
    std::int64_t tokens_chain = 0;
    double latency_graph_ms = 0.0;
    double latency_chain_ms = 0.0;
    int rounds_graph = 1;
    int rounds_chain = 1;
    std::size_t tasks = 0;

    double token_reduction_pct() const;
    double latency_improvement_pct() const;
};

struct PairMetrics {
    std::string name;
    std::vector<std::string> labels;
    double sequential_ms = 0.0;
    double merged_ms = 0.0;
    std::size_t nodes_separate = 0;
    std::size_t nodes_merged = 0;
    std::int64_t tokens_sequential = 0;
    std::int64_t tokens_merged = 0;

    double improvement_pct() const;
};

struct CategoryRounds {
    Category category = Category::GeneralQA;
    int queries = 0;
    double graph_mean = 0.0;
    double chain_mean = 0.0;
};

struct CostLine {
    ExecutionPolicy policy = ExecutionPolicy::GraphParallel;
    double tokens_per_query = 0.0;
    double cost_per_query = 0.0;
    double cost_total = 0.0;
};

struct CostTable {
    std::int64_t queries = 0;
    double price_per_1k_tokens = 0.0;
    CostLine graph;
    CostLine chain;
};

struct MetricsReport {
    std::vector<FunctionMetrics> functions;
    std::vector<PairMetrics> pairs;
    std::vector<CategoryRounds> rounds;
    std::optional<CostTable> cost;
    std::vector<std::string> violations;  // invariant checks that failed

    double mean_token_reduction() const;
    double mean_latency_improvement() const;
    double mean_pair_improvement() const;
    double mean_tokens(ExecutionPolicy policy) const;
    const FunctionMetrics* function(const std::string& label) const;
    const PairMetrics* pair(const std::string& name) const;
};

double reduction_pct(double baseline, double candidate);

struct BenchmarkRun {
    MetricsReport report;
    std::vector<RunResult> graph_runs;
    std::vector<RunResult> chain_runs;
};

/// Every workload query under both policies, Simulated clock.
BenchmarkRun run_benchmark(const Engine& engine, const Workload& workload);

std::vector<PairMetrics> combined_query_benchmark(const Engine& engine, const Workload& workload,
                                                  const std::vector<QueryPair>& pairs,
                                                  std::vector<std::string>* violations = nullptr);

std::vector<CategoryRounds> rounds_benchmark(const Engine& engine, const Workload& workload);

/// cost = mean tokens per query x price per token x n, per policy.
CostTable estimate_cost(const MetricsReport& report, double price_per_1k_tokens, std::int64_t n_queries);

/// Structural checks on a finished run; returns human-readable failures.
std::vector<std::string> check_run(const RunResult& run, const Engine& engine);

}  // namespace trafficgraph
