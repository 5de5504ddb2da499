// SPDX-License-Identifier: Apache-2.0
//
// The per-agent ReAct loop: thought (backend call), action (tool call),
// observation, until Finish or the iteration budget runs out.
#pragma once

#include "trafficgraph/agents.hpp"
#include "trafficgraph/backend.hpp"
#include "trafficgraph/context.hpp"
#include "trafficgraph/rules.hpp"
#include "trafficgraph/toolbox.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trafficgraph {

struct ReActStep {
    int iteration = 0;
    std::string thought;
    std::optional<ToolCall> action;  // nullopt means Finish
    std::string observation;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;

    std::int64_t tokens() const { return tokens_in + tokens_out; }
};

struct Execution {
    ResultRecord result;
    std::vector<ReActStep> trace;
    Ledger ledger;  // tokens only; durations belong to the scheduler
    ToolCall resolved;
};

/// Carries what ran before the failure so the scheduler can still charge
/// the node.
class TaskFailure : public Error {
public:
    TaskFailure(ErrorKind kind, const std::string& message, std::vector<ReActStep> trace, Ledger ledger)
        : Error(kind, message), trace_(std::move(trace)), ledger_(ledger) {}

    const std::vector<ReActStep>& trace() const noexcept { return trace_; }
    const Ledger& ledger() const noexcept { return ledger_; }

private:
    std::vector<ReActStep> trace_;
    Ledger ledger_;
};

/// Replaces unbound slots and fact references with facts found in
/// `context` (nearest entry first). Unbound slots look up the fact named
/// by their default rule. Throws UnboundSlot when nothing binds.
ToolCall resolve_call(const ToolCall& call, std::span<const ContextEntry> context, const RuleTable* rules);

struct ExecuteOptions {
    const RuleTable* rules = nullptr;
    TokenCounter counter{};
};

/// `task` must be Ready and its tool bound to `agent`.
Execution execute_task(const AgentSpec& agent, const TaskNode& task, std::span<const ContextEntry> context,
                       Backend& backend, const Toolbox& toolbox, const ExecuteOptions& options = {});

/// One line per step: step <i> action=<signature|finish> tokens=<in>+<out>
/// thought=<json> observation=<json>
std::string trace_to_text(std::span<const ReActStep> trace);

}  // namespace trafficgraph
