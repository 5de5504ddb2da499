// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "trafficgraph/context.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace trafficgraph;

namespace {

ContextEntry entry(std::string key, std::int64_t tokens, std::set<std::string> relevance = {}, NodeId producer = 0) {
    ContextEntry e;
    e.key = std::move(key);
    e.summary = std::string(static_cast<std::size_t>(tokens) * 4, 'x');
    e.token_size = tokens;
    e.relevance = std::move(relevance);
    e.producer = producer;
    return e;
}

TaskNode task(NodeId id, std::string tool, std::string arg = "") {
    TaskNode n;
    n.id = id;
    n.call.tool = std::move(tool);
    if (!arg.empty()) n.call.params["arg"] = arg;
    return n;
}

}  // namespace

TEST(TokenCount, Examples) {
    TokenCounter count;
    EXPECT_EQ(count(""), 0);
    EXPECT_EQ(count("abcd"), 1);
    EXPECT_EQ(count("abcdefghij"), 3);
    for (std::size_t n = 0; n < 64; ++n) EXPECT_EQ(count(std::string(n, 'a')), static_cast<std::int64_t>((n + 3) / 4));
}

TEST(TokenCount, WhitespaceScheme) {
    TokenCounter words(CountingScheme::Whitespace);
    EXPECT_EQ(words("  a bb\tccc\n"), 3);
    EXPECT_EQ(words(""), 0);
}

TEST(ContextStore, UpsertByKey) {
    ContextStore store;
    store.put(entry("k1", 1));
    EXPECT_EQ(store.size(), 1u);
    auto replaced = entry("k1", 2);
    replaced.summary = "new";
    store.put(replaced);
    EXPECT_EQ(store.size(), 1u);
    EXPECT_EQ(store.find("k1")->summary, "new");
    store.put(entry("k2", 1));
    EXPECT_EQ(store.size(), 2u);
}

TEST(TokenBudget, CapMustBePositive) {
    EXPECT_THROW(TokenBudget(0), Error);
    EXPECT_EQ(TokenBudget().cap, 512);
}

TEST(PreviousContext, RootHasNone) {
    TaskGraph g;
    g.add_task(task(0, "retrieve_traffic_data"));
    ContextStore store;
    EXPECT_TRUE(get_previous_context(store, g, 0, TokenBudget()).empty());
}

TEST(PreviousContext, SingleAncestorFits) {
    TaskGraph g;
    g.add_task(task(0, "retrieve_traffic_data"));
    g.add_task(task(1, "webster"));
    g.add_dependency(0, 1);
    ContextStore store;
    store.put(entry(g.node(0).call.signature(), 40, {"webster"}));
    auto ctx = get_previous_context(store, g, 1, TokenBudget());
    ASSERT_EQ(ctx.size(), 1u);
    EXPECT_EQ(ctx[0].key, g.node(0).call.signature());
}

TEST(PreviousContext, RelevanceFilters) {
    TaskGraph g;
    g.add_task(task(0, "retrieve_traffic_data"));
    g.add_task(task(1, "webster"));
    g.add_dependency(0, 1);
    ContextStore store;
    store.put(entry(g.node(0).call.signature(), 40, {"map_marker"}));
    EXPECT_TRUE(get_previous_context(store, g, 1, TokenBudget()).empty());
}

TEST(PreviousContext, ThreeLargeAncestorsKeepNearestOnly) {
    // 0 -> 1 -> 2 -> 3, each ancestor entry 300 tokens, cap 512.
    TaskGraph g;
    for (NodeId i = 0; i < 4; ++i) g.add_task(task(i, "tool" + std::to_string(i)));
    for (NodeId i = 0; i < 3; ++i) g.add_dependency(i, i + 1);
    ContextStore store;
    for (NodeId i = 0; i < 3; ++i) store.put(entry(g.node(i).call.signature(), 300, {"tool3"}, i));
    auto ctx = get_previous_context(store, g, 3, TokenBudget(512));
    ASSERT_EQ(ctx.size(), 1u);
    EXPECT_EQ(ctx[0].producer, 2u);

    // Subset oracle: among the nearest-first prefixes, the chosen one is the
    // longest that fits; every larger subset containing it overflows.
    std::vector<ContextEntry> ordered;
    for (NodeId i : {2u, 1u, 0u}) ordered.push_back(*store.find(g.node(i).call.signature()));
    for (unsigned mask = 0; mask < 8; ++mask) {
        std::int64_t sum = 0;
        for (unsigned b = 0; b < 3; ++b) {
            if (mask & (1u << b)) sum += ordered[b].token_size;
        }
        if ((mask & 1u) && mask != 1u) {
            EXPECT_GT(sum, 512);
        }
    }
}

TEST(PackPrefix, RandomSizesNeverExceedCapAndMatchOracle) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> size(0, 400);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = static_cast<int>(rng() % 9);
        const std::int64_t cap = 1 + static_cast<std::int64_t>(rng() % 1024);
        std::vector<ContextEntry> ordered;
        for (int i = 0; i < n; ++i) ordered.push_back(entry("k" + std::to_string(i), size(rng)));
        auto packed = pack_prefix(ordered, cap);
        std::int64_t used = 0;
        for (const auto& e : packed) used += e.token_size;
        ASSERT_LE(used, cap);
        // Oracle: enumerate every subset; the greedy-feasible prefix is the
        // longest prefix subset whose sum fits.
        std::size_t best = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::int64_t sum = 0;
            std::size_t bits = 0;
            for (int b = 0; b < n; ++b) {
                if (mask & (1u << b)) {
                    sum += ordered[b].token_size;
                    ++bits;
                }
            }
            const bool prefix = mask == (bits == 0 ? 0u : (1u << bits) - 1);
            if (prefix && sum <= cap) best = std::max(best, bits);
        }
        ASSERT_EQ(packed.size(), best);
        for (std::size_t i = 0; i < packed.size(); ++i) EXPECT_EQ(packed[i].key, ordered[i].key);
    }
}

TEST(PreviousContext, RandomGraphsRespectCapAndAncestry) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::int64_t> size(1, 300);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 9);
        auto g = support::random_dag(rng, n, 0.4);
        TaskGraph named;
        for (const auto& node : g.nodes()) named.add_task(task(node.id, "t", std::to_string(node.id)));
        for (auto [a, b] : g.edges()) named.add_dependency(a, b);
        ContextStore store;
        for (const auto& node : named.nodes()) store.put(entry(node.call.signature(), size(rng), {"t"}, node.id));
        const TokenBudget budget(1 + static_cast<std::int64_t>(rng() % 600));
        for (const auto& node : named.nodes()) {
            auto ctx = get_previous_context(store, named, node.id, budget);
            std::int64_t used = 0;
            std::set<NodeId> anc;
            for (auto [a, d] : named.ancestors(node.id)) anc.insert(a);
            int last_distance = 0;
            auto ancestors = named.ancestors(node.id);
            for (const auto& e : ctx) {
                used += e.token_size;
                EXPECT_TRUE(anc.contains(e.producer));
                auto it = std::find_if(ancestors.begin(), ancestors.end(), [&](auto& p) { return p.first == e.producer; });
                EXPECT_GE(it->second, last_distance);
                last_distance = it->second;
            }
            EXPECT_LE(used, budget.cap);
        }
    }
}

TEST(TotalTokens, Examples) {
    EXPECT_EQ(total_tokens({}), 0);
    std::vector<Ledger> one{{100, 20, 0.0}};
    EXPECT_EQ(total_tokens(one), 120);
    EXPECT_EQ(total_tokens(one, 30), 150);
}

TEST(FindFact, ParsesSummaries) {
    EXPECT_EQ(find_fact("road_id=R001; name=Main St", "name"), "Main St");
    EXPECT_EQ(find_fact("a=1;b=2", "b"), "2");
    EXPECT_FALSE(find_fact("a=1", "ab"));
}

// Dedup law, audited against raw trace events for every workload pair.
TEST(DedupLaw, LedgerAuditOverWorkloadPairs) {
    const auto& workload = support::shared_workload();
    auto pairs = load_pairs(support::data_dir() / "pairs.json", workload);
    ASSERT_FALSE(pairs.empty());
    int shared_seen = 0;
    for (const auto& pair : pairs) {
        for (const auto& problem : support::dedup_audit(support::shared_engine(), workload, pair, &shared_seen)) {
            ADD_FAILURE() << problem;
        }
    }
    EXPECT_GT(shared_seen, 0);
}

TEST(TokenDominance, GraphNeverCostsMoreThanChainOnWorkload) {
    const auto& engine = support::shared_engine();
    for (const auto& q : support::shared_workload().queries) {
        auto g = engine.orchestrator().process_query({q.text}, {ExecutionPolicy::GraphParallel});
        auto c = engine.orchestrator().process_query({q.text}, {ExecutionPolicy::ChainSequential});
        EXPECT_LE(g.total_tokens, c.total_tokens) << q.label;
    }
}
