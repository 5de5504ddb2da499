// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/report.hpp"

#include <fstream>

namespace trafficgraph {

namespace fs = std::filesystem;
using nlohmann::json;

ReportFormat report_format_from_string(std::string_view name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "all") return ReportFormat::All;
    throw Error(ErrorKind::InvalidArgument, "unknown report format '" + std::string(name) + "'");
}

std::string exact_number(double value) { return json(value).dump(); }

json report_to_json(const MetricsReport& report) {
    json functions = json::array();
    for (const auto& f : report.functions) {
        functions.push_back({{"function", f.label},
                             {"category", to_string(f.category)},
                             {"tasks", f.tasks},
                             {"tokens", {{"graph", f.tokens_graph}, {"chain", f.tokens_chain},
                                         {"reduction_pct", f.token_reduction_pct()}}},
                             {"latency_ms", {{"graph", f.latency_graph_ms}, {"chain", f.latency_chain_ms},
                                             {"improvement_pct", f.latency_improvement_pct()}}},
                             {"rounds", {{"graph", f.rounds_graph}, {"chain", f.rounds_chain}}}});
    }
    json pairs = json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"pair", p.name},
                         {"queries", p.labels},
                         {"sequential_ms", p.sequential_ms},
                         {"merged_ms", p.merged_ms},
                         {"improvement_pct", p.improvement_pct()},
                         {"nodes_separate", p.nodes_separate},
                         {"nodes_merged", p.nodes_merged},
                         {"tokens_sequential", p.tokens_sequential},
                         {"tokens_merged", p.tokens_merged}});
    }
    json rounds = json::array();
    for (const auto& r : report.rounds) {
        rounds.push_back({{"category", to_string(r.category)},
                          {"queries", r.queries},
                          {"graph_mean", r.graph_mean},
                          {"chain_mean", r.chain_mean}});
    }
    json out = {{"functions", functions},
                {"pairs", pairs},
                {"rounds", rounds},
                {"summary",
                 {{"mean_token_reduction_pct", report.mean_token_reduction()},
                  {"mean_latency_improvement_pct", report.mean_latency_improvement()},
                  {"mean_pair_improvement_pct", report.mean_pair_improvement()},
                  {"mean_tokens_graph", report.mean_tokens(ExecutionPolicy::GraphParallel)},
                  {"mean_tokens_chain", report.mean_tokens(ExecutionPolicy::ChainSequential)}}},
                {"violations", report.violations}};
    if (report.cost) {
        const auto& c = *report.cost;
        auto line = [](const CostLine& l) {
            return json{{"tokens_per_query", l.tokens_per_query},
                        {"cost_per_query", l.cost_per_query},
                        {"cost_total", l.cost_total}};
        };
        out["cost"] = {{"queries", c.queries},
                       {"price_per_1k_tokens", c.price_per_1k_tokens},
                       {"graph", line(c.graph)},
                       {"chain", line(c.chain)},
                       {"reduction_pct", reduction_pct(c.chain.cost_total, c.graph.cost_total)}};
    }
    return out;
}

namespace {

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string row(const std::string& section, const std::string& item, double graph, double chain) {
    return section + "," + csv_field(item) + "," + exact_number(graph) + "," + exact_number(chain) + "," +
           exact_number(reduction_pct(chain, graph)) + "\n";
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
    out.close();
    if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

}  // namespace

std::string report_to_csv(const MetricsReport& report) {
    std::string out = "section,item,graph,chain,reduction_pct\n";
    for (const auto& f : report.functions) {
        out += row("tokens", f.label, static_cast<double>(f.tokens_graph), static_cast<double>(f.tokens_chain));
    }
    for (const auto& f : report.functions) out += row("latency_ms", f.label, f.latency_graph_ms, f.latency_chain_ms);
    for (const auto& p : report.pairs) out += row("pair_ms", p.name, p.merged_ms, p.sequential_ms);
    for (const auto& r : report.rounds) out += row("rounds", std::string(to_string(r.category)), r.graph_mean, r.chain_mean);
    if (report.cost) out += row("cost", "total", report.cost->graph.cost_total, report.cost->chain.cost_total);
    return out;
}

std::vector<fs::path> emit_report(const MetricsReport& report, ReportFormat format, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    std::vector<fs::path> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        written.push_back(dir / name);
        write_file(written.back(), content);
    };
    if (format != ReportFormat::Csv) emit("report.json", report_to_json(report).dump(2) + "\n");
    if (format != ReportFormat::Json) emit("report.csv", report_to_csv(report));
    if (format == ReportFormat::All) {
        std::string tokens = "function,graph,chain\n";
        std::string latency = "function,graph_ms,chain_ms\n";
        for (const auto& f : report.functions) {
            tokens += csv_field(f.label) + "," + std::to_string(f.tokens_graph) + "," + std::to_string(f.tokens_chain) + "\n";
            latency += csv_field(f.label) + "," + exact_number(f.latency_graph_ms) + "," + exact_number(f.latency_chain_ms) + "\n";
        }
        std::string pairs = "pair,merged_ms,sequential_ms\n";
        for (const auto& p : report.pairs) {
            pairs += csv_field(p.name) + "," + exact_number(p.merged_ms) + "," + exact_number(p.sequential_ms) + "\n";
        }
        std::string rounds = "category,graph,chain\n";
        for (const auto& r : report.rounds) {
            rounds += std::string(to_string(r.category)) + "," + exact_number(r.graph_mean) + "," +
                      exact_number(r.chain_mean) + "\n";
        }
        std::string cost = "policy,tokens_per_query,cost_per_query,cost_total\n";
        if (report.cost) {
            for (const auto* l : {&report.cost->graph, &report.cost->chain}) {
                cost += std::string(to_string(l->policy)) + "," + exact_number(l->tokens_per_query) + "," +
                        exact_number(l->cost_per_query) + "," + exact_number(l->cost_total) + "\n";
            }
        }
        emit("series_tokens.csv", tokens);
        emit("series_latency.csv", latency);
        emit("series_pairs.csv", pairs);
        emit("series_rounds.csv", rounds);
        emit("series_cost.csv", cost);
    }
    return written;
}

}  // namespace trafficgraph
