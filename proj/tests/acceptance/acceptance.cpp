// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one [PASS]/[FAIL] line per criterion, non-zero exit if
// any fails. All numbers come from the Simulated clock.
#include "support.hpp"

#include "trafficgraph/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef TRAFFICGRAPH_CLI
#define TRAFFICGRAPH_CLI "trafficgraph"
#endif

using namespace trafficgraph;
namespace fs = std::filesystem;

namespace {

// Pinned bands.
constexpr double kTokenLo = 45.0, kTokenHi = 55.0;
constexpr double kLatencyLo = 14.0, kLatencyHi = 24.0;
constexpr double kPairLo = 18.0, kPairHi = 28.0;
constexpr double kPerfOptLo = 30.0, kPerfOptHi = 45.0;
constexpr double kChainCost = 786.0, kGraphCost = 303.0, kCostRelTol = 0.01;
constexpr std::int64_t kCostQueries = 30000;
constexpr double kMaxBenchSeconds = 10.0;
constexpr double kWebsterTol = 1e-6;
constexpr int kRandomDags = 1000;
constexpr int kMaxDagNodes = 10;
constexpr int kSimulationRuns = 100;

struct Verdict {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            if (ok) detail.clear();
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buffer[256];
    std::snprintf(buffer, sizeof buffer, format, a, b, c, d);
    return buffer;
}

bool in(double x, double lo, double hi) { return x >= lo && x <= hi; }

struct Bench {
    MetricsReport report;
    double seconds = 0.0;
};

Bench run_full_bench() {
    const auto start = std::chrono::steady_clock::now();
    const Engine engine(support::default_paths("acceptance"));
    const auto workload = Workload::load(support::data_dir() / "workload.json");
    Bench b;
    b.report = run_benchmark(engine, workload).report;
    b.report.pairs = combined_query_benchmark(engine, workload, load_pairs(support::data_dir() / "pairs.json", workload),
                                              &b.report.violations);
    b.report.cost = estimate_cost(b.report, engine.calibration().price_per_1k_tokens, kCostQueries);
    b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return b;
}

Verdict ac1(const Bench& b) {
    Verdict v;
    const double mean = b.report.mean_token_reduction();
    v.detail = fmt("mean token reduction %.2f%% in [%.0f, %.0f], bench %.2fs", mean, kTokenLo, kTokenHi, b.seconds);
    v.require(in(mean, kTokenLo, kTokenHi), fmt("mean token reduction %.2f%% outside band", mean));
    v.require(b.seconds < kMaxBenchSeconds, fmt("bench took %.2fs", b.seconds));
    v.require(b.report.violations.empty(), "run checks reported violations");
    return v;
}

Verdict ac2(const Bench& b) {
    Verdict v;
    const double mean = b.report.mean_latency_improvement();
    const double heat = b.report.function("plot_geo_heatmap")->latency_improvement_pct();
    const double road = b.report.function("road_visualization")->latency_improvement_pct();
    v.detail = fmt("mean latency improvement %.2f%%; heatmap %.1f%%, road visualization %.1f%%", mean, heat, road);
    v.require(in(mean, kLatencyLo, kLatencyHi), fmt("mean latency improvement %.2f%% outside band", mean));
    v.require(heat < 0.0 && road < 0.0, "visualization functions should be slower under the graph policy");
    return v;
}

Verdict ac3(const Bench& b) {
    Verdict v;
    const double mean = b.report.mean_pair_improvement();
    const auto* p = b.report.pair("Performance + Optimization");
    const double perf_opt = p ? p->improvement_pct() : NAN;
    v.detail = fmt("pair mean %.2f%%, Performance + Optimization %.2f%%", mean, perf_opt);
    v.require(in(mean, kPairLo, kPairHi), fmt("pair mean %.2f%% outside band", mean));
    v.require(p && in(perf_opt, kPerfOptLo, kPerfOptHi), fmt("Performance + Optimization %.2f%% outside band", perf_opt));
    return v;
}

Verdict ac4(const Bench& b) {
    Verdict v;
    const auto& c = *b.report.cost;
    v.detail = fmt("chain $%.2f, graph $%.2f at %.0f queries", c.chain.cost_total, c.graph.cost_total,
                   static_cast<double>(c.queries));
    v.require(std::abs(c.chain.cost_total - kChainCost) <= kCostRelTol * kChainCost, "chain cost off");
    v.require(std::abs(c.graph.cost_total - kGraphCost) <= kCostRelTol * kGraphCost, "graph cost off");
    return v;
}

Verdict ac5(const Bench& b) {
    Verdict v;
    std::map<Category, CategoryRounds> by;
    for (const auto& r : b.report.rounds) by[r.category] = r;
    const auto& clear = by[Category::Clear];
    v.require(clear.queries > 0 && clear.graph_mean == 1.0 && clear.chain_mean == 1.0, "Clear queries need extra rounds");
    for (const auto& f : b.report.functions) {
        if (f.category == Category::Fuzzy) v.require(f.rounds_graph <= f.rounds_chain, f.label + ": graph needs more rounds");
    }
    const auto* report = b.report.function("network_report");
    v.require(report && report->rounds_graph == 1, "report query needs more than one graph round");
    v.require(report && report->rounds_chain >= 3, "report query needs fewer than three chain rounds");
    if (v.ok) {
        v.detail = fmt("Clear %.1f/%.1f, Fuzzy %.2f/%.2f (graph/chain)", clear.graph_mean, clear.chain_mean,
                       by[Category::Fuzzy].graph_mean, by[Category::Fuzzy].chain_mean) +
                   fmt(", report %.0f/%.0f", report->rounds_graph, report->rounds_chain);
    }
    return v;
}

BatchRunner trivial_runner(std::vector<NodeId>& order) {
    return [&order](const TaskGraph&, const std::vector<NodeId>& ids) {
        std::vector<TaskOutcome> out;
        for (auto id : ids) {
            order.push_back(id);
            TaskOutcome o;
            o.result = ResultRecord{id, std::monostate{}, "ok", 1};
            o.ledger = {1, 1, 0.0};
            out.push_back(o);
        }
        return out;
    };
}

bool topological(const TaskGraph& g, const std::vector<NodeId>& order) {
    if (order.size() != g.size()) return false;
    std::map<NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    if (pos.size() != g.size()) return false;
    for (auto [a, b] : g.edges()) {
        if (pos.at(a) >= pos.at(b)) return false;
    }
    return true;
}

std::string fingerprint(const RunResult& run) {
    std::string out = trace_to_text(run.trace) + "|" + run.response + "|";
    for (const auto& n : run.graph.nodes()) {
        out += std::to_string(n.id) + ":" + std::string(to_string(n.status)) + ":" + std::to_string(n.ledger.tokens()) + ";";
    }
    return out;
}

Verdict ac6() {
    Verdict v;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> density(0.0, 0.8);
    std::uniform_int_distribution<int> dur(1, 1000);
    const auto& engine = support::shared_engine();
    int failures = 0;
    auto check = [&](bool cond, const std::string& what) {
        if (!cond && ++failures <= 3) v.require(false, what);
    };
    for (int trial = 0; trial < kRandomDags; ++trial) {
        const int n = 1 + static_cast<int>(rng() % kMaxDagNodes);
        const auto shape = support::random_dag(rng, n, density(rng));
        std::map<NodeId, double> d;
        double sum = 0.0;
        for (const auto& node : shape.nodes()) sum += d[node.id] = dur(rng);

        // Clock level, zero overhead.
        auto g = shape;
        auto c = shape;
        std::vector<NodeId> go, co;
        RunTrace tg, tc;
        simulate_graph_parallel(g, d, 0.0, trivial_runner(go), tg);
        simulate_chain(c, d, 0.0, trivial_runner(co), tc);
        const auto tag = "dag " + std::to_string(trial) + ": ";
        check(support::schedule_problems(g, tg).empty() && support::schedule_problems(c, tc).empty(), tag + "invalid schedule");
        check(topological(shape, go) && topological(shape, co), tag + "visit order not topological");
        check(makespan(tg) <= makespan(tc), tag + "graph slower than chain at zero overhead");
        check(makespan(tg) == critical_path_length(shape, d), tag + "graph makespan != critical path");
        check(makespan(tc) == sum, tag + "chain makespan != sum of durations");

        // End to end with real tools, across worker counts.
        const auto batch = support::synthetic_batch(rng, n, density(rng));
        std::string ref[2];
        for (std::size_t workers : {1u, 2u, 8u}) {
            for (int p = 0; p < 2; ++p) {
                const auto policy = p == 0 ? ExecutionPolicy::GraphParallel : ExecutionPolicy::ChainSequential;
                auto run = engine.orchestrator().process_batch(batch, {policy, ClockMode::Simulated, workers});
                check(check_run(run, engine).empty(), tag + "run check failed");
                const auto fp = fingerprint(run);
                if (workers == 1) {
                    ref[p] = fp;
                } else {
                    check(fp == ref[p], tag + "result depends on worker count");
                }
            }
        }
    }
    if (v.ok) v.detail = fmt("%.0f random DAGs (<= %.0f nodes): all laws hold", kRandomDags, kMaxDagNodes);
    return v;
}

Verdict ac7() {
    Verdict v;
    const auto& engine = support::shared_engine();
    const auto& workload = support::shared_workload();
    const TokenBudget budget(engine.calibration().context_cap);

    // Cap: recompute the context every task received.
    int checked = 0;
    auto audit_cap = [&](const RunResult& run) {
        for (const auto& node : run.graph.nodes()) {
            std::int64_t used = 0;
            for (const auto& e : get_previous_context(run.context, run.graph, node.id, budget)) used += e.token_size;
            ++checked;
            v.require(used <= budget.cap, run.graph.origin() + ": context over cap at node " + std::to_string(node.id));
        }
    };
    for (const auto& q : workload.queries) {
        for (auto policy : {ExecutionPolicy::GraphParallel, ExecutionPolicy::ChainSequential}) {
            audit_cap(engine.orchestrator().process_query({q.text}, {policy}));
        }
    }
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<ContextEntry> ordered(rng() % 9);
        for (auto& e : ordered) e.token_size = static_cast<std::int64_t>(rng() % 400);
        const auto cap = 1 + static_cast<std::int64_t>(rng() % 1024);
        std::int64_t used = 0;
        for (const auto& e : pack_prefix(ordered, cap)) used += e.token_size;
        v.require(used <= cap, "pack_prefix exceeded its cap");
    }

    const auto pairs = load_pairs(support::data_dir() / "pairs.json", workload);
    int shared = 0;
    for (const auto& pair : pairs) {
        for (const auto& problem : support::dedup_audit(engine, workload, pair, &shared)) v.require(false, problem);
    }
    v.require(shared > 0, "no pair shares a dependency");
    if (v.ok) {
        v.detail = fmt("%.0f task contexts within cap; %.0f shared nodes over %.0f pairs charged once merged, per query chained",
                       checked, shared, static_cast<double>(pairs.size()));
    }
    return v;
}

Verdict ac8() {
    Verdict v;
    const double c0 = webster_cycle(12.0, 0.675);
    v.require(std::abs(c0 - (1.5 * 12.0 + 5.0) / (1.0 - 0.675)) <= kWebsterTol, fmt("C0 = %.9f", c0));
    v.require(std::abs(c0 - 70.76923076923077) <= kWebsterTol, fmt("C0 = %.9f", c0));
    for (double lost : {4.0, 12.0, 20.0}) {
        double prev = webster_cycle(lost, 0.0);
        for (int k = 1; k < 1000; ++k) {
            const double c = webster_cycle(lost, k / 1000.0);
            if (!(c > prev)) {
                v.require(false, fmt("cycle not increasing at Y=%.3f", k / 1000.0));
                break;
            }
            prev = c;
        }
    }
    for (double y : {1.0, 1.2}) {
        try {
            webster_cycle(12.0, y);
            v.require(false, fmt("no error at Y=%.2f", y));
        } catch (const Error& e) {
            v.require(e.kind() == ErrorKind::Oversaturated, "wrong error kind for Y >= 1");
        }
    }
    std::mt19937_64 rng(99);
    std::int64_t vehicles = 0;
    for (int run = 0; run < kSimulationRuns; ++run) {
        const auto net = generate_network(rng(), 1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 12));
        const auto log = simulate(net, 1 + static_cast<int>(rng() % 300), static_cast<int>(rng() % 24));
        vehicles += log.arrivals;
        v.require(log.arrivals == log.departures + log.final_queue, fmt("run %.0f loses vehicles", run));
    }
    if (v.ok) {
        v.detail = fmt("C0 = %.6f s; monotone in Y; Oversaturated at Y >= 1; %.0f simulations conserve %.0f vehicles", c0,
                       kSimulationRuns, static_cast<double>(vehicles));
    }
    return v;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(entry.path(), root).string()] = ss.str();
    }
    return files;
}

Verdict ac9() {
    Verdict v;
    std::map<std::string, std::string> trees[2];
    const auto logs = support::scratch_dir("acceptance_logs");
    for (int i = 0; i < 2; ++i) {
        const auto dir = support::scratch_dir("acceptance_e2e_" + std::to_string(i));
        const std::string cmd = std::string("\"") + TRAFFICGRAPH_CLI + "\" --data-dir \"" + support::data_dir().string() +
                                "\" --out-dir \"" + dir.string() + "\" --format all bench > \"" +
                                (logs / ("bench_" + std::to_string(i) + ".log")).string() + "\" 2>&1";
        const int rc = std::system(cmd.c_str());
        v.require(rc == 0, "bench invocation " + std::to_string(i) + " exited " + std::to_string(rc));
        trees[i] = read_tree(dir);
    }
    const bool has_report = trees[0].contains("report.json") && trees[0].contains("report.csv");
    v.require(has_report, "report files missing");
    v.require(trees[0] == trees[1], "outputs differ between invocations");
    if (v.ok) v.detail = fmt("%.0f output files byte-identical across two CLI runs", static_cast<double>(trees[0].size()));
    return v;
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int n, const char* name, const std::function<Verdict()>& criterion) {
        Verdict v;
        try {
            v = criterion();
        } catch (const std::exception& e) {
            v.ok = false;
            v.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] AC%d %s: %s\n", v.ok ? "PASS" : "FAIL", n, name, v.detail.c_str());
        std::fflush(stdout);
        failed += !v.ok;
    };
    std::optional<Bench> bench;
    try {
        bench = run_full_bench();
    } catch (const std::exception& e) {
        std::printf("benchmark failed: %s\n", e.what());
    }
    auto with_bench = [&](Verdict (*f)(const Bench&)) {
        return [&bench, f]() {
            if (!bench) throw std::runtime_error("benchmark unavailable");
            return f(*bench);
        };
    };
    report(1, "token reduction", with_bench(ac1));
    report(2, "latency improvement", with_bench(ac2));
    report(3, "combined queries", with_bench(ac3));
    report(4, "cost estimate", with_bench(ac4));
    report(5, "conversational rounds", with_bench(ac5));
    report(6, "scheduler laws", ac6);
    report(7, "context laws", ac7);
    report(8, "webster and simulation", ac8);
    report(9, "end-to-end determinism", ac9);
    std::printf("%d/9 criteria passed\n", 9 - failed);
    return failed == 0 ? 0 : 1;
}
