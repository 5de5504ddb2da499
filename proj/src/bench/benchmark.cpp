// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace trafficgraph {

using nlohmann::json;

const WorkloadQuery& Workload::by_label(const std::string& label) const {
    for (const auto& q : queries) {
        if (q.label == label) return q;
    }
    throw Error(ErrorKind::NotFound, "no workload query labelled '" + label + "'");
}

Workload Workload::from_json(const json& value, const std::string& source) {
    if (!value.is_object() || !value.contains("queries") || !value["queries"].is_array()) {
        throw ConfigError(source, "missing queries list");
    }
    Workload workload;
    for (std::size_t i = 0; i < value["queries"].size(); ++i) {
        const auto& entry = value["queries"][i];
        const auto where = source + ":queries[" + std::to_string(i) + "]";
        WorkloadQuery q;
        try {
            q.text = entry.at("text").get<std::string>();
            q.label = entry.value("label", "q" + std::to_string(i));
            if (entry.contains("category")) q.expected = category_from_string(entry["category"].get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(where, e.what());
        }
        for (const auto& other : workload.queries) {
            if (other.label == q.label) throw ConfigError(where, "duplicate label '" + q.label + "'");
        }
        workload.queries.push_back(std::move(q));
    }
    return workload;
}

Workload Workload::load(const std::filesystem::path& path) { return from_json(load_json_file(path), path.string()); }

std::vector<QueryPair> pairs_from_json(const json& value, const std::string& source, const Workload& workload) {
    if (!value.is_object() || !value.contains("pairs") || !value["pairs"].is_array()) {
        throw ConfigError(source, "missing pairs list");
    }
    std::vector<QueryPair> pairs;
    for (std::size_t i = 0; i < value["pairs"].size(); ++i) {
        const auto& entry = value["pairs"][i];
        const auto where = source + ":pairs[" + std::to_string(i) + "]";
        QueryPair pair;
        pair.name = entry.value("name", "pair" + std::to_string(i));
        if (!entry.contains("queries") || !entry["queries"].is_array() || entry["queries"].empty()) {
            throw ConfigError(where, "pair needs a non-empty queries list");
        }
        for (const auto& ref : entry["queries"]) {
            if (ref.is_number_integer()) {
                auto index = ref.get<std::int64_t>();
                if (index < 0 || static_cast<std::size_t>(index) >= workload.queries.size()) {
                    throw ConfigError(where, "query index " + std::to_string(index) + " out of range");
                }
                pair.labels.push_back(workload.queries[static_cast<std::size_t>(index)].label);
            } else if (ref.is_string()) {
                try {
                    workload.by_label(ref.get<std::string>());
                } catch (const Error& e) {
                    throw ConfigError(where, e.what());
                }
                pair.labels.push_back(ref.get<std::string>());
            } else {
                throw ConfigError(where, "query reference must be a label or an index");
            }
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<QueryPair> load_pairs(const std::filesystem::path& path, const Workload& workload) {
    return pairs_from_json(load_json_file(path), path.string(), workload);
}

EnginePaths EnginePaths::defaults(const std::filesystem::path& data_dir) {
    EnginePaths p;
    p.rules = data_dir / "rules.json";
    p.agents = data_dir / "agents.json";
    p.scripts = data_dir / "scripts.json";
    p.calibration = data_dir / "calibration.json";
    return p;
}

namespace {

std::shared_ptr<const RoadNetwork> load_network(const EnginePaths& paths) {
    if (paths.network) {
        return std::make_shared<const RoadNetwork>(network_from_json(load_json_file(*paths.network), paths.network->string()));
    }
    return std::make_shared<const RoadNetwork>(generate_network(paths.seed, paths.intersections, paths.roads));
}

}  // namespace

Engine::Engine(const EnginePaths& paths)
    : decomposer_(RuleTable::load(paths.rules)),
      agents_(AgentRegistry::load(paths.agents)),
      calibration_(CalibrationProfile::load(paths.calibration)),
      network_(load_network(paths)),
      toolbox_(network_, ArtifactWriter(paths.out_dir)),
      orchestrator_(decomposer_, agents_, toolbox_, calibration_, ScriptTable::load(paths.scripts)) {
    agents_.check_tools(toolbox_);
    for (const auto& rule : decomposer_.rules().rules) {
        for (const auto& task : rule.tasks) {
            if (!toolbox_.has_tool(task.tool)) {
                throw ConfigError(paths.rules.string() + ":" + rule.name, "unknown tool '" + task.tool + "'");
            }
            calibration_.tool(task.tool);
        }
    }
    calibration_.tool("general_answer");
}

std::int64_t count_root_to_sink_paths(const TaskGraph& graph) {
    std::map<NodeId, std::int64_t> paths;  // paths from any root ending here
    std::int64_t total = 0;
    for (auto id : graph.topological_order()) {
        const auto& preds = graph.predecessors(id);
        std::int64_t n = preds.empty() ? 1 : 0;
        for (auto p : preds) n += paths[p];
        paths[id] = n;
        if (graph.successors(id).empty()) total += n;
    }
    return total;
}

int conversational_rounds(const Decomposition& part, ExecutionPolicy policy, const RuleTable& rules) {
    const auto graph = build_dependency_graph(part.tasks, part.edges);
    int rounds = 1 + count_clarifications(graph, policy, rules);
    if (policy == ExecutionPolicy::ChainSequential && part.category == Category::OpenEnded) {
        rounds += static_cast<int>(count_root_to_sink_paths(graph) - 1);
    }
    return rounds;
}

double reduction_pct(double baseline, double candidate) {
    if (baseline == 0.0) return 0.0;
    return (baseline - candidate) / baseline * 100.0;
}

double FunctionMetrics::token_reduction_pct() const {
    return reduction_pct(static_cast<double>(tokens_chain), static_cast<double>(tokens_graph));
}

double FunctionMetrics::latency_improvement_pct() const { return reduction_pct(latency_chain_ms, latency_graph_ms); }

double PairMetrics::improvement_pct() const { return reduction_pct(sequential_ms, merged_ms); }

namespace {

template <class T, class F>
double mean_of(const std::vector<T>& items, F f) {
    if (items.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& item : items) sum += f(item);
    return sum / static_cast<double>(items.size());
}

}  // namespace

double MetricsReport::mean_token_reduction() const {
    return mean_of(functions, [](const FunctionMetrics& f) { return f.token_reduction_pct(); });
}

double MetricsReport::mean_latency_improvement() const {
    return mean_of(functions, [](const FunctionMetrics& f) { return f.latency_improvement_pct(); });
}

double MetricsReport::mean_pair_improvement() const {
    return mean_of(pairs, [](const PairMetrics& p) { return p.improvement_pct(); });
}

double MetricsReport::mean_tokens(ExecutionPolicy policy) const {
    return mean_of(functions, [policy](const FunctionMetrics& f) {
        return static_cast<double>(policy == ExecutionPolicy::GraphParallel ? f.tokens_graph : f.tokens_chain);
    });
}

const FunctionMetrics* MetricsReport::function(const std::string& label) const {
    for (const auto& f : functions) {
        if (f.label == label) return &f;
    }
    return nullptr;
}

const PairMetrics* MetricsReport::pair(const std::string& name) const {
    for (const auto& p : pairs) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::vector<std::string> check_run(const RunResult& run, const Engine& engine) {
    std::vector<std::string> problems;
    const auto& graph = run.graph;
    auto fail = [&](const std::string& what) { problems.push_back(graph.origin() + ": " + what); };

    std::map<NodeId, const TraceEvent*> task_events;
    for (const auto& e : run.trace.events) {
        if (e.kind != "task") continue;
        if (!task_events.emplace(e.node, &e).second) fail("node " + std::to_string(e.node) + " ran twice");
    }
    for (const auto& node : graph.nodes()) {
        const bool ran = task_events.contains(node.id);
        const bool skipped = node.status == TaskStatus::Failed && node.failure == "dependency failed";
        if (ran == skipped) fail("node " + std::to_string(node.id) + " ran " + (ran ? "despite" : "without") + " cause");
        if (node.status != TaskStatus::Complete && node.status != TaskStatus::Failed) {
            fail("node " + std::to_string(node.id) + " left " + std::string(to_string(node.status)));
        }
    }
    for (const auto& [from, to] : graph.edges()) {
        if (!task_events.contains(from) || !task_events.contains(to)) continue;
        if (task_events[from]->t_end > task_events[to]->t_start) {
            fail("edge " + std::to_string(from) + "->" + std::to_string(to) + " overlaps");
        }
    }
    for (const auto& [id, steps] : run.react) {
        std::int64_t sum = 0;
        for (const auto& s : steps) sum += s.tokens();
        if (run.trace.ledgers.contains(id) && run.trace.ledgers.at(id).tokens() != sum) {
            fail("node " + std::to_string(id) + " ledger differs from its step tokens");
        }
    }

    const auto& cal = engine.calibration();
    const auto nq = static_cast<std::int64_t>(run.queries.size());
    std::vector<Ledger> ledgers;
    for (const auto& [id, ledger] : run.trace.ledgers) ledgers.push_back(ledger);
    std::int64_t overhead = nq * cal.decomposition.tokens;
    if (run.policy == ExecutionPolicy::GraphParallel) overhead += nq * cal.graph_construction.tokens;
    if (total_tokens(ledgers, overhead) != run.total_tokens) fail("token total does not add up");

    bool all_complete = std::all_of(graph.nodes().begin(), graph.nodes().end(),
                                    [](const TaskNode& n) { return n.status == TaskStatus::Complete; });
    if (all_complete && !graph.empty()) {
        std::map<NodeId, double> durations;
        for (const auto& node : graph.nodes()) durations[node.id] = cal.tool(node.call.tool).duration_ms(run.policy);
        double expected = 0.0;
        if (run.policy == ExecutionPolicy::GraphParallel) {
            expected = static_cast<double>(nq) * (cal.decomposition.ms + cal.graph_construction.ms) +
                       critical_path_length(graph, durations);
        } else {
            expected = static_cast<double>(nq) * cal.decomposition.ms;
            for (const auto& [id, d] : durations) expected += d;
        }
        if (std::abs(expected - run.makespan_ms()) > 1e-6 * std::max(1.0, expected)) {
            char buffer[128];
            std::snprintf(buffer, sizeof buffer, "makespan %.6f differs from model %.6f", run.makespan_ms(), expected);
            fail(buffer);
        }
    }
    return problems;
}

BenchmarkRun run_benchmark(const Engine& engine, const Workload& workload) {
    BenchmarkRun out;
    const auto& rules = engine.decomposer().rules();
    for (const auto& q : workload.queries) {
        OrchestratorConfig config;
        config.policy = ExecutionPolicy::GraphParallel;
        auto batch = engine.decomposer().make_batch({q.text});
        auto graph_run = engine.orchestrator().process_batch(batch, config);
        config.policy = ExecutionPolicy::ChainSequential;
        auto chain_run = engine.orchestrator().process_batch(batch, config);

        FunctionMetrics m;
        m.label = q.label;
        m.category = batch.queries[0].category;
        m.tokens_graph = graph_run.total_tokens;
        m.tokens_chain = chain_run.total_tokens;
        m.latency_graph_ms = graph_run.makespan_ms();
        m.latency_chain_ms = chain_run.makespan_ms();
        m.rounds_graph = conversational_rounds(batch.parts[0], ExecutionPolicy::GraphParallel, rules);
        m.rounds_chain = conversational_rounds(batch.parts[0], ExecutionPolicy::ChainSequential, rules);
        m.tasks = batch.parts[0].tasks.size();
        out.report.functions.push_back(m);

        if (q.expected && *q.expected != m.category) {
            out.report.violations.push_back(q.label + ": classified " + std::string(to_string(m.category)) +
                                            ", expected " + std::string(to_string(*q.expected)));
        }
        for (const auto* run : {&graph_run, &chain_run}) {
            for (auto& p : check_run(*run, engine)) out.report.violations.push_back(q.label + "/" + p);
        }
        if (m.rounds_graph > m.rounds_chain) out.report.violations.push_back(q.label + ": graph needs more rounds");
        out.graph_runs.push_back(std::move(graph_run));
        out.chain_runs.push_back(std::move(chain_run));
    }
    out.report.rounds = rounds_benchmark(engine, workload);
    return out;
}

std::vector<PairMetrics> combined_query_benchmark(const Engine& engine, const Workload& workload,
                                                  const std::vector<QueryPair>& pairs,
                                                  std::vector<std::string>* violations) {
    std::vector<PairMetrics> out;
    for (const auto& pair : pairs) {
        PairMetrics m;
        m.name = pair.name;
        m.labels = pair.labels;
        std::vector<std::string> texts;
        for (const auto& label : pair.labels) texts.push_back(workload.by_label(label).text);

        OrchestratorConfig chain;
        chain.policy = ExecutionPolicy::ChainSequential;
        for (const auto& text : texts) {
            auto run = engine.orchestrator().process_query({text}, chain);
            m.sequential_ms += run.makespan_ms();
            m.tokens_sequential += run.total_tokens;
            m.nodes_separate += run.graph.size();
        }
        OrchestratorConfig graph;
        graph.policy = ExecutionPolicy::GraphParallel;
        auto merged = engine.orchestrator().process_query(texts, graph);
        m.merged_ms = merged.makespan_ms();
        m.tokens_merged = merged.total_tokens;
        m.nodes_merged = merged.graph.size();
        if (violations) {
            for (auto& p : check_run(merged, engine)) violations->push_back(pair.name + "/" + p);
            if (m.nodes_merged > m.nodes_separate) violations->push_back(pair.name + ": merge grew the graph");
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<CategoryRounds> rounds_benchmark(const Engine& engine, const Workload& workload) {
    const auto& rules = engine.decomposer().rules();
    std::map<Category, CategoryRounds> by_category;
    for (const auto& q : workload.queries) {
        auto query = engine.decomposer().make_query(0, q.text);
        auto part = engine.decomposer().breakdown_query(query);
        auto& row = by_category[query.category];
        row.category = query.category;
        ++row.queries;
        row.graph_mean += conversational_rounds(part, ExecutionPolicy::GraphParallel, rules);
        row.chain_mean += conversational_rounds(part, ExecutionPolicy::ChainSequential, rules);
    }
    std::vector<CategoryRounds> out;
    for (auto& [category, row] : by_category) {
        row.graph_mean /= row.queries;
        row.chain_mean /= row.queries;
        out.push_back(row);
    }
    return out;
}

CostTable estimate_cost(const MetricsReport& report, double price_per_1k_tokens, std::int64_t n_queries) {
    CostTable table;
    table.queries = n_queries;
    table.price_per_1k_tokens = price_per_1k_tokens;
    auto line = [&](ExecutionPolicy policy) {
        CostLine l;
        l.policy = policy;
        l.tokens_per_query = report.mean_tokens(policy);
        l.cost_per_query = l.tokens_per_query * price_per_1k_tokens / 1000.0;
        l.cost_total = l.cost_per_query * static_cast<double>(n_queries);
        return l;
    };
    table.graph = line(ExecutionPolicy::GraphParallel);
    table.chain = line(ExecutionPolicy::ChainSequential);
    return table;
}

}  // namespace trafficgraph
