// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/context.hpp"

#include <cctype>
#include <mutex>
#include <numeric>

namespace trafficgraph {

std::string_view to_string(CountingScheme scheme) {
    switch (scheme) {
    case CountingScheme::Chars4: return "chars4";
    case CountingScheme::Whitespace: return "whitespace";
    }
    return "chars4";
}

CountingScheme counting_scheme_from_string(std::string_view name) {
    if (name == "chars4") return CountingScheme::Chars4;
    if (name == "whitespace") return CountingScheme::Whitespace;
    throw Error(ErrorKind::InvalidArgument, "unknown counting scheme '" + std::string(name) + "'");
}

std::int64_t TokenCounter::count(std::string_view text) const {
    if (scheme_ == CountingScheme::Chars4) {
        return static_cast<std::int64_t>((text.size() + 3) / 4);
    }
    std::int64_t words = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

ResultRecord make_result(NodeId node, Payload payload, std::string summary, const TokenCounter& counter) {
    ResultRecord record;
    record.node = node;
    record.payload = std::move(payload);
    record.token_size = counter(summary);
    record.summary = std::move(summary);
    return record;
}

ContextEntry make_entry(const TaskNode& node, const ResultRecord& result, std::set<std::string> relevance) {
    ContextEntry entry;
    entry.key = node.call.signature();
    entry.summary = result.summary;
    entry.token_size = result.token_size;
    entry.relevance = std::move(relevance);
    entry.producer = node.id;
    entry.queries = node.provenance;
    return entry;
}

TokenBudget::TokenBudget(std::int64_t cap_tokens, CountingScheme counting) : cap(cap_tokens), scheme(counting) {
    if (cap <= 0) throw Error(ErrorKind::InvalidArgument, "token budget cap must be positive");
}

ContextStore::ContextStore(const ContextStore& other) {
    std::shared_lock lock(other.mutex_);
    entries_ = other.entries_;
}

ContextStore& ContextStore::operator=(const ContextStore& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_);
    std::shared_lock other_lock(other.mutex_);
    entries_ = other.entries_;
    return *this;
}

void ContextStore::put(ContextEntry entry) {
    std::scoped_lock lock(mutex_);
    auto key = entry.key;
    entries_.insert_or_assign(std::move(key), std::move(entry));
}

std::optional<ContextEntry> ContextStore::find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::size_t ContextStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::vector<ContextEntry> ContextStore::entries() const {
    std::shared_lock lock(mutex_);
    std::vector<ContextEntry> out;
    out.reserve(entries_.size());
    for (const auto& [key, entry] : entries_) out.push_back(entry);
    return out;
}

nlohmann::json ContextStore::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& entry : entries()) {
        out.push_back({{"key", entry.key},
                       {"summary", entry.summary},
                       {"token_size", entry.token_size},
                       {"relevance", entry.relevance},
                       {"producer", entry.producer},
                       {"queries", entry.queries}});
    }
    return out;
}

std::vector<ContextEntry> pack_prefix(std::span<const ContextEntry> ordered, std::int64_t cap) {
    std::vector<ContextEntry> packed;
    std::int64_t used = 0;
    for (const auto& entry : ordered) {
        if (used + entry.token_size > cap) break;
        used += entry.token_size;
        packed.push_back(entry);
    }
    return packed;
}

std::vector<ContextEntry> get_previous_context(const ContextStore& store, const TaskGraph& graph, NodeId node,
                                               const TokenBudget& budget) {
    const auto& tool = graph.node(node).call.tool;
    std::vector<ContextEntry> candidates;
    std::set<std::string> seen;
    for (const auto& [ancestor, distance] : graph.ancestors(node)) {
        auto key = graph.node(ancestor).call.signature();
        if (!seen.insert(key).second) continue;
        auto entry = store.find(key);
        if (!entry || !entry->relevance.contains(tool)) continue;
        candidates.push_back(std::move(*entry));
    }
    return pack_prefix(candidates, budget.cap);
}

std::int64_t total_tokens(std::span<const Ledger> ledgers, std::int64_t overhead_tokens) {
    return std::accumulate(ledgers.begin(), ledgers.end(), overhead_tokens,
                           [](std::int64_t sum, const Ledger& l) { return sum + l.tokens(); });
}

std::optional<std::string> find_fact(std::string_view summary, std::string_view key) {
    std::size_t pos = 0;
    while (pos < summary.size()) {
        auto end = summary.find(';', pos);
        auto field = summary.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        auto eq = field.find('=');
        if (eq != std::string_view::npos && field.substr(0, eq) == key) {
            return std::string(field.substr(eq + 1));
        }
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return std::nullopt;
}

}  // namespace trafficgraph
