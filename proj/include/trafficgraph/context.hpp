// SPDX-License-Identifier: Apache-2.0
//
// Shared context: token counting, the keyed context store, ancestor-based
// context selection and budget packing.
#pragma once

#include "trafficgraph/task_graph.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trafficgraph {

enum class CountingScheme {
    Chars4,      // ceil(bytes / 4)
    Whitespace,  // number of whitespace-separated words
};

std::string_view to_string(CountingScheme scheme);
CountingScheme counting_scheme_from_string(std::string_view name);

class TokenCounter {
public:
    explicit TokenCounter(CountingScheme scheme = CountingScheme::Chars4) : scheme_(scheme) {}

    std::int64_t count(std::string_view text) const;
    std::int64_t operator()(std::string_view text) const { return count(text); }
    CountingScheme scheme() const noexcept { return scheme_; }

private:
    CountingScheme scheme_;
};

/// Builds a result whose token_size is the counter applied to the summary.
ResultRecord make_result(NodeId node, Payload payload, std::string summary, const TokenCounter& counter);

struct ContextEntry {
    std::string key;  // signature of the producing tool call
    std::string summary;
    std::int64_t token_size = 0;
    std::set<std::string> relevance;  // consumer tools
    NodeId producer = 0;
    std::set<QueryId> queries;

    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

ContextEntry make_entry(const TaskNode& node, const ResultRecord& result, std::set<std::string> relevance);

struct TokenBudget {
    explicit TokenBudget(std::int64_t cap = 512, CountingScheme scheme = CountingScheme::Chars4);

    std::int64_t cap;
    CountingScheme scheme;
};

/// Upsert-by-key store. One writer at a time, concurrent readers.
class ContextStore {
public:
    ContextStore() = default;
    ContextStore(const ContextStore& other);
    ContextStore& operator=(const ContextStore& other);

    void put(ContextEntry entry);
    std::optional<ContextEntry> find(const std::string& key) const;
    std::size_t size() const;
    std::vector<ContextEntry> entries() const;

    nlohmann::json to_json() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, ContextEntry> entries_;
};

/// Longest prefix of `ordered` whose token sizes fit under `cap`. Entries
/// that do not fit are dropped whole.
std::vector<ContextEntry> pack_prefix(std::span<const ContextEntry> ordered, std::int64_t cap);

/// Context for `node`: entries produced by its ancestors whose relevance
/// tags name the node's tool, nearest ancestor first, packed under the cap.
std::vector<ContextEntry> get_previous_context(const ContextStore& store, const TaskGraph& graph, NodeId node,
                                               const TokenBudget& budget);

/// Sum of ledger tokens (in + out) plus fixed overhead tokens.
std::int64_t total_tokens(std::span<const Ledger> ledgers, std::int64_t overhead_tokens = 0);

/// Value of `key` in a "k=v; k=v" summary, if present.
std::optional<std::string> find_fact(std::string_view summary, std::string_view key);

}  // namespace trafficgraph
