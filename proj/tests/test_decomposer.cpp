// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "trafficgraph/decomposer.hpp"
#include "trafficgraph/graph_io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace trafficgraph;

#ifndef TRAFFICGRAPH_GOLDEN_DIR
#define TRAFFICGRAPH_GOLDEN_DIR "tests/golden"
#endif

namespace {

const Decomposer& decomposer() {
    static const Decomposer d(RuleTable::load(support::data_dir() / "rules.json"));
    return d;
}

std::vector<std::string> tools_of(const Decomposition& d) {
    std::vector<std::string> out;
    for (const auto& t : d.tasks) out.push_back(t.call.tool);
    return out;
}

std::vector<TaskType> types_of(const Decomposition& d) {
    std::vector<TaskType> out;
    for (const auto& t : d.tasks) out.push_back(t.type);
    return out;
}

// Structure independent of node numbering: signatures, provenance by
// signature and edges as signature pairs.
struct Shape {
    std::map<std::string, std::set<QueryId>> nodes;
    std::set<std::pair<std::string, std::string>> edges;
    bool operator==(const Shape&) const = default;
};

Shape shape(const TaskGraph& g, const std::map<QueryId, QueryId>& rename = {}) {
    Shape s;
    for (const auto& n : g.nodes()) {
        std::set<QueryId> prov;
        for (auto q : n.provenance) prov.insert(rename.contains(q) ? rename.at(q) : q);
        s.nodes[n.call.signature()] = prov;
    }
    for (auto [a, b] : g.edges()) s.edges.insert({g.node(a).call.signature(), g.node(b).call.signature()});
    return s;
}

// Texts built from rule keywords plus noise, so every rule and the
// fallback get exercised.
std::vector<std::string> random_queries(std::mt19937_64& rng, int n) {
    const std::vector<std::string> stems{
        "Optimize intersection {n}",
        "Optimize the intersection with the highest delay",
        "Optimize signals somewhere",
        "Show intersection performance",
        "Run a simulation for {n} steps",
        "Run a simulation for the city",
        "Plot a heat map",
        "Visualize road R00{d}",
        "Visualize the road",
        "Locate intersection {n} on the map",
        "Where is the intersection",
        "Find the road id for {road}",
        "What is the road id",
        "Explain queue spillback",
        "Generate a network report",
        "Tell me a joke",
    };
    const std::vector<std::string> roads{"Main St", "Oak Ave", "Weber Rd"};
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) {
        auto text = stems[rng() % stems.size()];
        auto replace = [&](const std::string& key, const std::string& value) {
            if (auto pos = text.find(key); pos != std::string::npos) text.replace(pos, key.size(), value);
        };
        replace("{n}", std::to_string(1000 + rng() % 9000));
        replace("{d}", std::to_string(1 + rng() % 9));
        replace("{road}", roads[rng() % roads.size()]);
        out.push_back(text);
    }
    return out;
}

}  // namespace

TEST(Classify, Examples) {
    EXPECT_EQ(decomposer().classify_query("Explain the common methods of intersection control"), Category::GeneralQA);
    EXPECT_EQ(decomposer().classify_query("Locate intersection 4493 on the map"), Category::Clear);
    EXPECT_EQ(decomposer().classify_query("Optimize a signal control scheme for an intersection"), Category::Fuzzy);
    EXPECT_EQ(decomposer().classify_query("Generate a comprehensive road network traffic report"), Category::OpenEnded);
}

TEST(Classify, EmptyQueryRejected) {
    try {
        decomposer().classify_query("   ");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyQuery);
    }
}

TEST(Breakdown, LocateIsLookupThenMarker) {
    auto d = decomposer().breakdown_query(decomposer().make_query(0, "Locate intersection 4493 on the map"));
    EXPECT_EQ(tools_of(d), (std::vector<std::string>{"intersection_lookup", "map_marker"}));
    EXPECT_EQ(types_of(d), (std::vector<TaskType>{TaskType::Data, TaskType::Visual}));
    EXPECT_EQ(d.edges, (std::vector<Edge>{{0, 1}}));
    EXPECT_EQ(std::get<std::string>(d.tasks[0].call.params.at("intersection")), "4493");
}

TEST(Breakdown, OptimizeWorstIsThreeTaskChain) {
    auto d = decomposer().breakdown_query(decomposer().make_query(0, "Optimize intersections with the highest time loss"));
    EXPECT_EQ(tools_of(d), (std::vector<std::string>{"retrieve_traffic_data", "intersection_performance", "webster"}));
    EXPECT_EQ(types_of(d), (std::vector<TaskType>{TaskType::Data, TaskType::Analysis, TaskType::Optimize}));
    auto g = build_dependency_graph(d.tasks, d.edges);
    EXPECT_EQ(g.edges(), (std::set<Edge>{{0, 1}, {1, 2}}));
    EXPECT_EQ(std::get<FactRef>(d.tasks[2].call.params.at("intersection")).fact, "top_time_loss");
}

TEST(Breakdown, ReportIsFanOutFanIn) {
    auto d = decomposer().breakdown_query(decomposer().make_query(0, "Generate a comprehensive road network traffic report"));
    EXPECT_EQ(types_of(d), (std::vector<TaskType>{TaskType::Data, TaskType::Analysis, TaskType::Analysis,
                                                   TaskType::Visual, TaskType::General}));
    auto g = build_dependency_graph(d.tasks, d.edges);
    std::vector<NodeId> roots, sinks, mids;
    for (const auto& n : g.nodes()) {
        const bool root = g.predecessors(n.id).empty();
        const bool sink = g.successors(n.id).empty();
        if (root) roots.push_back(n.id);
        if (sink) sinks.push_back(n.id);
        if (!root && !sink) mids.push_back(n.id);
    }
    EXPECT_EQ(roots.size(), 1u);
    EXPECT_EQ(mids.size(), 3u);
    ASSERT_EQ(sinks.size(), 1u);
    EXPECT_EQ(g.predecessors(sinks[0]).size(), 3u);
}

TEST(Breakdown, UnmatchedAndGeneralQueriesYieldOneGeneralTask) {
    for (const char* text : {"Tell me a joke", "Explain the common methods of intersection control"}) {
        auto d = decomposer().breakdown_query(decomposer().make_query(0, text));
        ASSERT_EQ(d.tasks.size(), 1u) << text;
        EXPECT_EQ(d.tasks[0].type, TaskType::General);
        EXPECT_EQ(d.tasks[0].call.tool, "general_answer");
        auto g = build_dependency_graph(d.tasks, d.edges);
        EXPECT_EQ(g.size(), 1u);
        EXPECT_TRUE(g.edges().empty());
    }
}

TEST(Breakdown, FuzzyLeavesExplicitUnboundSlots) {
    auto d = decomposer().breakdown_query(decomposer().make_query(0, "Optimize a signal control scheme for an intersection"));
    EXPECT_EQ(d.category, Category::Fuzzy);
    EXPECT_EQ(unbound_slots(d.tasks.back()), (std::vector<std::string>{"intersection"}));
    auto sim = decomposer().breakdown_query(decomposer().make_query(0, "Run a traffic simulation for the network"));
    EXPECT_EQ(sim.category, Category::Fuzzy);
    auto clear = decomposer().breakdown_query(decomposer().make_query(0, "Run a traffic simulation for 60 steps"));
    EXPECT_EQ(clear.category, Category::Clear);
    EXPECT_EQ(std::get<std::int64_t>(clear.tasks[1].call.params.at("steps")), 60);
}

TEST(SlotBindable, OnlyWhenAnAncestorPublishesTheFact) {
    const auto& rules = decomposer().rules();
    auto fuzzy = decomposer().make_batch({"Optimize a signal control scheme for an intersection"}).merged;
    EXPECT_TRUE(slot_bindable(fuzzy, 2, "intersection", rules));
    auto sim = decomposer().make_batch({"Run a traffic simulation for the network"}).merged;
    EXPECT_FALSE(slot_bindable(sim, 1, "steps", rules));
}

TEST(Merge, PerformancePlusOptimizationSharesRetrieval) {
    auto batch = decomposer().make_batch(
        {"Show the intersection performance report", "Optimize signal timing at intersection 4493 with webster"});
    std::size_t separate = 0;
    for (const auto& p : batch.parts) separate += p.tasks.size();
    EXPECT_EQ(batch.merged.size(), separate - 1);
    int retrieval = 0;
    for (const auto& n : batch.merged.nodes()) {
        if (n.call.tool == "retrieve_traffic_data") {
            ++retrieval;
            EXPECT_EQ(n.provenance, (std::set<QueryId>{0, 1}));
        }
    }
    EXPECT_EQ(retrieval, 1);
}

TEST(Merge, IdenticalQueriesCollapse) {
    const std::string text = "Generate a comprehensive road network traffic report";
    auto one = decomposer().make_batch({text}).merged;
    auto two = decomposer().make_batch({text, text}).merged;
    EXPECT_EQ(two.size(), one.size());
    EXPECT_EQ(two.edges(), one.edges());
    for (const auto& n : two.nodes()) EXPECT_EQ(n.provenance, (std::set<QueryId>{0, 1}));
}

TEST(Merge, DisjointToolsGiveDisjointUnion) {
    auto batch = decomposer().make_batch({"Plot a geographic heatmap of traffic volume", "Find the road id for Main St"});
    EXPECT_EQ(batch.merged.size(), 2u);
}

TEST(Merge, MergeOverloadsAgree) {
    auto batch = decomposer().make_batch({"Show the intersection performance report",
                                          "Optimize intersections with the highest time loss"});
    EXPECT_EQ(graph_to_text(merge_query_graphs(batch)), graph_to_text(batch.merged));
}

TEST(MergeProperties, IdempotentCommutativeAndBounded) {
    std::mt19937_64 rng(31);
    const auto& d = decomposer();
    for (int trial = 0; trial < 300; ++trial) {
        auto texts = random_queries(rng, 2);
        auto ab = d.make_batch({texts[0], texts[1]});
        auto ba = d.make_batch({texts[1], texts[0]});
        EXPECT_EQ(shape(ab.merged), shape(ba.merged, {{0, 1}, {1, 0}})) << texts[0] << " | " << texts[1];

        // Idempotence: merging the merged graph with itself changes nothing.
        std::vector<TaskGraph> twice{ab.merged, ab.merged};
        EXPECT_EQ(shape(merge_query_graphs(twice)), shape(ab.merged));

        // Node count bound, with equality iff no signature is shared.
        std::set<std::string> sigs0, sigs1;
        for (const auto& t : ab.parts[0].tasks) sigs0.insert(t.call.signature());
        for (const auto& t : ab.parts[1].tasks) sigs1.insert(t.call.signature());
        bool shared = false;
        for (const auto& s : sigs0) shared = shared || sigs1.contains(s);
        const auto sum = ab.parts[0].tasks.size() + ab.parts[1].tasks.size();
        EXPECT_LE(ab.merged.size(), sum);
        EXPECT_EQ(ab.merged.size() == sum, !shared);
        EXPECT_EQ(ab.merged.topological_order().size(), ab.merged.size());
    }
}

TEST(CategoryProperties, ClearHasNoUnboundFuzzyHasSome) {
    std::mt19937_64 rng(32);
    auto texts = random_queries(rng, 500);
    for (const auto& q : support::shared_workload().queries) texts.push_back(q.text);
    int clear = 0, fuzzy = 0;
    for (const auto& text : texts) {
        auto d = decomposer().breakdown_query(decomposer().make_query(0, text));
        std::size_t unbound = 0;
        for (const auto& t : d.tasks) unbound += unbound_slots(t).size();
        if (d.category == Category::Clear) {
            ++clear;
            EXPECT_EQ(unbound, 0u) << text;
        }
        if (d.category == Category::Fuzzy) {
            ++fuzzy;
            EXPECT_GE(unbound, 1u) << text;
        }
    }
    EXPECT_GT(clear, 0);
    EXPECT_GT(fuzzy, 0);
}

TEST(Golden, WorkloadDecompositions) {
    std::string actual;
    for (const auto& q : support::shared_workload().queries) {
        auto batch = decomposer().make_batch({q.text});
        EXPECT_EQ(batch.queries[0].category, q.expected.value()) << q.label;
        actual += "# " + q.label + " " + std::string(to_string(batch.queries[0].category)) + " rule=" +
                  batch.parts[0].rule + "\n" + graph_to_text(batch.merged);
        // Deterministic: a second decomposition is identical.
        EXPECT_EQ(graph_to_text(decomposer().make_batch({q.text}).merged), graph_to_text(batch.merged));
    }
    const auto path = std::filesystem::path(TRAFFICGRAPH_GOLDEN_DIR) / "decompositions.txt";
    if (std::getenv("TRAFFICGRAPH_UPDATE_GOLDEN")) {
        std::ofstream(path, std::ios::binary) << actual;
    }
    std::ifstream in(path, std::ios::binary);
    ASSERT_TRUE(in) << "missing " << path;
    std::stringstream expected;
    expected << in.rdbuf();
    EXPECT_EQ(actual, expected.str());
}

TEST(Rules, ConfigErrorsNameTheLocation) {
    auto dir = support::scratch_dir("rules");
    {
        std::ofstream(dir / "broken.json") << "{\n  \"rules\": [\n    {,}\n  ]\n}\n";
    }
    try {
        RuleTable::load(dir / "broken.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.location(), (dir / "broken.json").string() + ":3");
    }
    nlohmann::json cyclic = {{"rules",
                              {{{"name", "loop"},
                                {"match", {{"any", {"loop"}}}},
                                {"tasks", {{{"type", "DATA"}, {"tool", "a"}}, {{"type", "DATA"}, {"tool", "b"}}}},
                                {"edges", {{0, 1}, {1, 0}}}}}}};
    try {
        RuleTable::from_json(cyclic, "mem");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.location(), "mem:rule[0]");
    }
}
