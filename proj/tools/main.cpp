// SPDX-License-Identifier: Apache-2.0
//
// trafficgraph: run queries, benchmarks and reports from the command line.
#include "trafficgraph/benchmark.hpp"
#include "trafficgraph/graph_io.hpp"
#include "trafficgraph/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#ifndef TRAFFICGRAPH_DATA_DIR
#define TRAFFICGRAPH_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace trafficgraph;
using nlohmann::json;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

struct Options {
    std::string data_dir = TRAFFICGRAPH_DATA_DIR;
    std::string calibration, workload, pairs, rules, agents, scripts, network;
    std::uint64_t seed = 42;
    int intersections = 5;
    int roads = 10;
    std::string policy = "graph";
    std::string clock = "simulated";
    std::size_t workers = 0;
    double time_scale = 0.01;
    std::string out_dir = "out";
    std::string format = "all";

    fs::path data(const std::string& override_path, const char* name) const {
        return override_path.empty() ? fs::path(data_dir) / name : fs::path(override_path);
    }

    EnginePaths engine_paths() const {
        EnginePaths p;
        p.rules = data(rules, "rules.json");
        p.agents = data(agents, "agents.json");
        p.scripts = data(scripts, "scripts.json");
        p.calibration = data(calibration, "calibration.json");
        if (!network.empty()) p.network = network;
        p.seed = seed;
        p.intersections = intersections;
        p.roads = roads;
        p.out_dir = out_dir;
        return p;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

json run_to_json(const RunResult& run) {
    json react = json::object();
    for (const auto& [id, steps] : run.react) react[std::to_string(id)] = trace_to_text(std::span<const ReActStep>(steps));
    json queries = json::array();
    for (const auto& q : run.queries) queries.push_back({{"id", q.id}, {"text", q.text}, {"category", to_string(q.category)}});
    return {{"policy", to_string(run.policy)},
            {"queries", queries},
            {"graph", graph_to_json(run.graph)},
            {"trace", trace_to_json(run.trace)},
            {"context", run.context.to_json()},
            {"react", react},
            {"total_tokens", run.total_tokens},
            {"clarifications", run.clarifications},
            {"response", run.response}};
}

void print_violations(const std::vector<std::string>& violations) {
    for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
}

int cmd_run(const Options& opt, const std::vector<std::string>& texts) {
    Engine engine(opt.engine_paths());
    OrchestratorConfig config;
    config.policy = policy_from_string(opt.policy);
    config.clock = clock_mode_from_string(opt.clock);
    config.workers = opt.workers;
    config.time_scale = opt.time_scale;
    auto run = engine.orchestrator().process_query(texts, config);

    const fs::path out(opt.out_dir);
    write_text(out / "run.json", run_to_json(run).dump(2) + "\n");
    write_text(out / "trace.txt", trace_to_text(run.trace));
    write_text(out / "graph.txt", graph_to_text(run.graph));

    std::cout << run.response << "\n";
    std::printf("policy=%s tasks=%zu tokens=%lld makespan_ms=%.3f clarifications=%d\n",
                std::string(to_string(run.policy)).c_str(), run.graph.size(), static_cast<long long>(run.total_tokens),
                run.makespan_ms(), run.clarifications);
    if (config.clock == ClockMode::Simulated) {
        auto problems = check_run(run, engine);
        print_violations(problems);
        if (!problems.empty()) return kExitViolation;
    }
    return 0;
}

MetricsReport full_report(const Options& opt, const Engine& engine, const Workload& workload, bool with_pairs,
                          std::int64_t cost_queries) {
    auto bench = run_benchmark(engine, workload);
    const fs::path traces = fs::path(opt.out_dir) / "traces";
    for (std::size_t i = 0; i < workload.queries.size(); ++i) {
        const auto& label = workload.queries[i].label;
        write_text(traces / (label + ".graph.txt"), trace_to_text(bench.graph_runs[i].trace));
        write_text(traces / (label + ".chain.txt"), trace_to_text(bench.chain_runs[i].trace));
    }
    auto report = std::move(bench.report);
    if (with_pairs) {
        report.pairs = combined_query_benchmark(engine, workload, load_pairs(opt.data(opt.pairs, "pairs.json"), workload),
                                                &report.violations);
    }
    report.cost = estimate_cost(report, engine.calibration().price_per_1k_tokens, cost_queries);
    return report;
}

int finish(const MetricsReport& report, const Options& opt) {
    for (const auto& path : emit_report(report, report_format_from_string(opt.format), opt.out_dir)) {
        std::cout << "wrote " << path.string() << "\n";
    }
    print_violations(report.violations);
    return report.violations.empty() ? 0 : kExitViolation;
}

int cmd_bench(const Options& opt) {
    Engine engine(opt.engine_paths());
    auto workload = Workload::load(opt.data(opt.workload, "workload.json"));
    auto report = full_report(opt, engine, workload, true, 30000);
    std::printf("functions=%zu mean_token_reduction=%.2f%% mean_latency_improvement=%.2f%% mean_pair_improvement=%.2f%%\n",
                report.functions.size(), report.mean_token_reduction(), report.mean_latency_improvement(),
                report.mean_pair_improvement());
    return finish(report, opt);
}

int cmd_combine(const Options& opt) {
    Engine engine(opt.engine_paths());
    auto workload = Workload::load(opt.data(opt.workload, "workload.json"));
    MetricsReport report;
    report.pairs = combined_query_benchmark(engine, workload, load_pairs(opt.data(opt.pairs, "pairs.json"), workload),
                                            &report.violations);
    for (const auto& p : report.pairs) {
        std::printf("%-32s sequential=%.1fms merged=%.1fms improvement=%.2f%%\n", p.name.c_str(), p.sequential_ms,
                    p.merged_ms, p.improvement_pct());
    }
    std::printf("mean improvement=%.2f%%\n", report.mean_pair_improvement());
    return finish(report, opt);
}

int cmd_rounds(const Options& opt) {
    Engine engine(opt.engine_paths());
    auto workload = Workload::load(opt.data(opt.workload, "workload.json"));
    MetricsReport report;
    report.rounds = rounds_benchmark(engine, workload);
    for (const auto& r : report.rounds) {
        std::printf("%-10s queries=%d graph=%.2f chain=%.2f\n", std::string(to_string(r.category)).c_str(), r.queries,
                    r.graph_mean, r.chain_mean);
    }
    return finish(report, opt);
}

int cmd_cost(const Options& opt, std::int64_t queries, double price) {
    Engine engine(opt.engine_paths());
    auto workload = Workload::load(opt.data(opt.workload, "workload.json"));
    auto report = run_benchmark(engine, workload).report;
    report.cost = estimate_cost(report, price < 0 ? engine.calibration().price_per_1k_tokens : price, queries);
    const auto& c = *report.cost;
    std::printf("queries=%lld chain=$%.2f graph=$%.2f (per query: chain=$%.6f graph=$%.6f)\n",
                static_cast<long long>(c.queries), c.chain.cost_total, c.graph.cost_total, c.chain.cost_per_query,
                c.graph.cost_per_query);
    return finish(report, opt);
}

int cmd_gen_network(const Options& opt, const std::string& output) {
    auto network = generate_network(opt.seed, opt.intersections, opt.roads);
    const auto text = network_to_json(network).dump(2) + "\n";
    if (output.empty() || output == "-") {
        std::cout << text;
    } else {
        write_text(output, text);
        std::cout << "wrote " << output << " sha256=" << sha256_hex(text) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dependency-graph multi-agent orchestration for traffic queries"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--data-dir", opt.data_dir, "Directory holding the default data files");
    app.add_option("--calibration", opt.calibration, "Calibration profile (JSON)");
    app.add_option("--workload", opt.workload, "Workload file (JSON)");
    app.add_option("--pairs", opt.pairs, "Query pairs file (JSON)");
    app.add_option("--rules", opt.rules, "Decomposition rule table (JSON)");
    app.add_option("--agents", opt.agents, "Agent registry and knowledge (JSON)");
    app.add_option("--scripts", opt.scripts, "Mock backend scripts (JSON)");
    app.add_option("--network", opt.network, "Road network file; generated from --seed when absent");
    app.add_option("--seed", opt.seed, "Network generator seed");
    app.add_option("--intersections", opt.intersections, "Generated intersections")->check(CLI::PositiveNumber);
    app.add_option("--roads", opt.roads, "Generated roads")->check(CLI::PositiveNumber);
    app.add_option("--policy", opt.policy, "graph | chain")->check(CLI::IsMember({"graph", "chain"}));
    app.add_option("--clock", opt.clock, "simulated | wall")->check(CLI::IsMember({"simulated", "wall"}));
    app.add_option("--workers", opt.workers, "Worker threads (0 = hardware threads)");
    app.add_option("--time-scale", opt.time_scale, "Wall clock: real ms slept per simulated ms");
    app.add_option("--out-dir", opt.out_dir, "Output directory");
    app.add_option("--format", opt.format, "json | csv | all")->check(CLI::IsMember({"json", "csv", "all"}));

    std::vector<std::string> texts;
    auto* run = app.add_subcommand("run", "Process one query (or several, merged)");
    run->add_option("query", texts, "Query text")->required();
    app.add_subcommand("bench", "Benchmark the workload under both policies");
    app.add_subcommand("combine", "Combined-query timing for the pairs file");
    app.add_subcommand("rounds", "Conversational rounds per category");
    std::int64_t cost_queries = 30000;
    double price = -1.0;
    auto* cost = app.add_subcommand("cost", "Cost estimate for a monthly query volume");
    cost->add_option("--queries", cost_queries, "Number of queries")->check(CLI::NonNegativeNumber);
    cost->add_option("--price", price, "Price per 1000 tokens (default: calibration)");
    std::string output;
    auto* gen = app.add_subcommand("gen-network", "Write a generated road network");
    gen->add_option("-o,--output", output, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(opt, texts);
        if (app.got_subcommand("bench")) return cmd_bench(opt);
        if (app.got_subcommand("combine")) return cmd_combine(opt);
        if (app.got_subcommand("rounds")) return cmd_rounds(opt);
        if (cost->parsed()) return cmd_cost(opt, cost_queries, price);
        if (gen->parsed()) return cmd_gen_network(opt, output);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::Config ? kExitConfig : kExitViolation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitViolation;
    }
    return 0;
}
