// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/react.hpp"

#include "trafficgraph/graph_io.hpp"

#include <sstream>

namespace trafficgraph {

using nlohmann::json;

namespace {

struct Parsed {
    enum class Kind { Action, Return, Finish } kind = Kind::Finish;
    std::string thought;
    ToolCall call;
    std::string text;
};

std::string strip(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    return std::string(text);
}

ToolCall parse_call(const std::string& body) {
    const auto space = body.find(' ');
    ToolCall call;
    call.tool = body.substr(0, space);
    if (space != std::string::npos) {
        const auto params = json::parse(body.substr(space + 1));
        if (!params.is_object()) throw Error(ErrorKind::InvalidArgument, "action parameters must be an object");
        for (const auto& [key, value] : params.items()) call.params.emplace(key, param_from_json(value));
    }
    return call;
}

Parsed parse_completion(const std::string& text) {
    Parsed out;
    std::istringstream lines(text);
    std::string line;
    bool decided = false;
    while (std::getline(lines, line)) {
        std::string_view view(line);
        auto take = [&](std::string_view prefix) {
            if (view.substr(0, prefix.size()) != prefix) return false;
            view.remove_prefix(prefix.size());
            return true;
        };
        if (take("Thought:")) {
            out.thought = strip(view);
        } else if (!decided && take("Action:")) {
            out.kind = Parsed::Kind::Action;
            out.call = parse_call(strip(view));
            decided = true;
        } else if (!decided && take("Return:")) {
            out.kind = Parsed::Kind::Return;
            out.call = parse_call(strip(view));
            decided = true;
        } else if (!decided && take("Finish:")) {
            out.kind = Parsed::Kind::Finish;
            out.text = strip(view);
            decided = true;
        }
    }
    if (!decided) throw Error(ErrorKind::InvalidArgument, "completion has no action: " + text);
    return out;
}

std::string build_prompt(const AgentSpec& agent, const ToolCall& call, int iteration, const std::string& observation) {
    std::string prompt = "Agent: " + agent.name + "\nTask: " + call.signature() + "\nIteration: " + std::to_string(iteration);
    if (!observation.empty()) prompt += "\nObservation: " + observation;
    return prompt;
}

std::optional<std::string> lookup_fact(std::span<const ContextEntry> context, const std::string& fact) {
    for (const auto& entry : context) {
        if (auto value = find_fact(entry.summary, fact)) return value;
    }
    return std::nullopt;
}

}  // namespace

ToolCall resolve_call(const ToolCall& call, std::span<const ContextEntry> context, const RuleTable* rules) {
    ToolCall out = call;
    for (auto& [key, value] : out.params) {
        std::string fact;
        if (const auto* u = std::get_if<Unbound>(&value)) {
            const auto* def = rules ? rules->slot_default(u->slot) : nullptr;
            if (!def || def->fact.empty()) {
                throw Error(ErrorKind::UnboundSlot, call.tool + ": slot '" + u->slot + "' has no default rule");
            }
            fact = def->fact;
        } else if (const auto* f = std::get_if<FactRef>(&value)) {
            fact = f->fact;
        } else {
            continue;
        }
        auto found = lookup_fact(context, fact);
        if (!found) throw Error(ErrorKind::UnboundSlot, call.tool + ": no context fact '" + fact + "' for '" + key + "'");
        value = *found;
    }
    return out;
}

Execution execute_task(const AgentSpec& agent, const TaskNode& task, std::span<const ContextEntry> context,
                       Backend& backend, const Toolbox& toolbox, const ExecuteOptions& options) {
    if (task.status != TaskStatus::Ready) {
        throw Error(ErrorKind::IllegalTransition, "task " + std::to_string(task.id) + " is " +
                                                      std::string(to_string(task.status)) + ", not Ready");
    }
    if (!agent.binds(task.call.tool)) {
        throw Error(ErrorKind::UnknownTool, agent.name + " has no tool '" + task.call.tool + "'");
    }

    Execution exec;
    auto fail = [&](ErrorKind kind, const std::string& message) {
        return TaskFailure(kind, "task " + std::to_string(task.id) + ": " + message, exec.trace, exec.ledger);
    };

    try {
        exec.resolved = resolve_call(task.call, context, options.rules);
    } catch (const Error& e) {
        throw fail(e.kind(), e.what());
    }

    const ToolEnv env{&agent.knowledge, context};
    std::optional<ToolOutput> last;
    std::string observation;
    for (int iteration = 0; iteration < agent.react_budget; ++iteration) {
        BackendRequest request{agent.name, exec.resolved, iteration,
                               build_prompt(agent, exec.resolved, iteration, observation), context, observation};
        const auto completion = backend.complete(request);
        ReActStep step;
        step.iteration = iteration;
        step.tokens_in = completion.tokens_in;
        step.tokens_out = completion.tokens_out;
        exec.ledger.tokens_in += completion.tokens_in;
        exec.ledger.tokens_out += completion.tokens_out;

        Parsed parsed;
        try {
            parsed = parse_completion(completion.text);
        } catch (const std::exception& e) {
            exec.trace.push_back(step);
            throw fail(ErrorKind::ToolFailure, std::string("unparseable completion: ") + e.what());
        }
        step.thought = parsed.thought;

        if (parsed.kind == Parsed::Kind::Finish) {
            step.observation = parsed.text;
            exec.trace.push_back(step);
            if (last) {
                exec.result = make_result(task.id, last->payload, last->summary, options.counter);
            } else {
                exec.result = make_result(task.id, parsed.text, parsed.text, options.counter);
            }
            return exec;
        }

        step.action = parsed.call;
        if (!agent.binds(parsed.call.tool)) {
            exec.trace.push_back(step);
            throw fail(ErrorKind::UnknownTool, agent.name + " has no tool '" + parsed.call.tool + "'");
        }
        try {
            last = toolbox.invoke(parsed.call, env);
        } catch (const Error& e) {
            exec.trace.push_back(step);
            throw fail(e.kind(), e.what());
        }
        observation = last->summary;
        step.observation = observation;
        exec.trace.push_back(step);
        if (parsed.kind == Parsed::Kind::Return) {
            exec.result = make_result(task.id, last->payload, last->summary, options.counter);
            return exec;
        }
    }
    throw fail(ErrorKind::BudgetExhausted,
               agent.name + " did not finish within " + std::to_string(agent.react_budget) + " iterations");
}

std::string trace_to_text(std::span<const ReActStep> trace) {
    std::string out;
    for (const auto& step : trace) {
        out += "step " + std::to_string(step.iteration) +
               " action=" + (step.action ? step.action->signature() : std::string("finish")) +
               " tokens=" + std::to_string(step.tokens_in) + "+" + std::to_string(step.tokens_out) +
               " thought=" + json(step.thought).dump() + " observation=" + json(step.observation).dump() + "\n";
    }
    return out;
}

}  // namespace trafficgraph
