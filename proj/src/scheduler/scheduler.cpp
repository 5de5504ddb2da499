// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/scheduler.hpp"

#include "trafficgraph/worker_pool.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>

namespace trafficgraph {

using nlohmann::json;

std::string_view to_string(ClockMode mode) { return mode == ClockMode::Simulated ? "simulated" : "wall"; }

ClockMode clock_mode_from_string(std::string_view name) {
    if (name == "simulated" || name == "Simulated") return ClockMode::Simulated;
    if (name == "wall" || name == "Wall") return ClockMode::Wall;
    throw Error(ErrorKind::InvalidArgument, "unknown clock mode '" + std::string(name) + "'");
}

std::int64_t RunTrace::tokens() const {
    return std::accumulate(events.begin(), events.end(), std::int64_t{0},
                           [](std::int64_t sum, const TraceEvent& e) { return sum + e.tokens_in + e.tokens_out; });
}

double makespan(const RunTrace& trace) {
    if (trace.events.empty()) return 0.0;
    double first = std::numeric_limits<double>::infinity();
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& e : trace.events) {
        first = std::min(first, e.t_start);
        last = std::max(last, e.t_end);
    }
    return last - first;
}

std::string trace_to_text(const RunTrace& trace) {
    std::string out;
    char line[256];
    for (const auto& e : trace.events) {
        std::snprintf(line, sizeof line, "%s node=%u start=%.3f end=%.3f in=%lld out=%lld\n", e.kind.c_str(), e.node,
                      e.t_start, e.t_end, static_cast<long long>(e.tokens_in), static_cast<long long>(e.tokens_out));
        out += line;
    }
    return out;
}

json trace_to_json(const RunTrace& trace) {
    json events = json::array();
    for (const auto& e : trace.events) {
        events.push_back({{"kind", e.kind},
                          {"node", e.node},
                          {"t_start", e.t_start},
                          {"t_end", e.t_end},
                          {"tokens_in", e.tokens_in},
                          {"tokens_out", e.tokens_out}});
    }
    return {{"events", events}, {"makespan_ms", makespan(trace)}};
}

namespace {

void require_durations(const TaskGraph& graph, const std::map<NodeId, double>& durations) {
    for (const auto& node : graph.nodes()) {
        if (!durations.contains(node.id)) {
            throw Error(ErrorKind::MissingDuration, "no duration for node " + std::to_string(node.id));
        }
    }
}

// Applies a finished outcome at virtual time `end`.
void settle(TaskGraph& graph, NodeId id, TaskOutcome outcome, double start, double end, RunTrace& trace,
            const CompletionHook& on_complete) {
    Ledger ledger = outcome.ledger;
    ledger.duration_ms = end - start;
    trace.events.push_back({"task", id, start, end, ledger.tokens_in, ledger.tokens_out});
    trace.ledgers[id] = ledger;
    if (outcome.ok) {
        graph.mark_complete(id, std::move(outcome.result), ledger);
        if (on_complete) on_complete(graph, id);
    } else {
        graph.mark_failed(id, outcome.error, ledger);
        graph.cascade_failure(id);
    }
}

QueryId owner(const TaskNode& node) { return node.provenance.empty() ? 0 : *node.provenance.begin(); }

}  // namespace

void simulate_graph_parallel(TaskGraph& graph, const std::map<NodeId, double>& durations, double start_ms,
                             const BatchRunner& runner, RunTrace& trace, const CompletionHook& on_complete) {
    require_durations(graph, durations);
    struct InFlight {
        double start;
        double end;
        NodeId id;
        TaskOutcome outcome;
    };
    std::vector<InFlight> running;
    double now = start_ms;

    auto launch = [&] {
        auto ready = graph.get_independent_tasks();
        if (ready.empty()) return;
        auto outcomes = runner(graph, ready);
        for (std::size_t i = 0; i < ready.size(); ++i) {
            graph.mark_running(ready[i]);
            running.push_back({now, now + durations.at(ready[i]), ready[i], std::move(outcomes.at(i))});
        }
    };

    launch();
    while (!running.empty()) {
        now = std::min_element(running.begin(), running.end(),
                               [](const InFlight& a, const InFlight& b) { return a.end < b.end; })
                  ->end;
        std::vector<InFlight> done;
        for (auto it = running.begin(); it != running.end();) {
            if (it->end == now) {
                done.push_back(std::move(*it));
                it = running.erase(it);
            } else {
                ++it;
            }
        }
        std::sort(done.begin(), done.end(), [](const InFlight& a, const InFlight& b) { return a.id < b.id; });
        for (auto& d : done) settle(graph, d.id, std::move(d.outcome), d.start, d.end, trace, on_complete);
        launch();
    }
}

void simulate_chain(TaskGraph& graph, const std::map<NodeId, double>& durations, double start_ms,
                    const BatchRunner& runner, RunTrace& trace, const CompletionHook& on_complete, Overhead per_query) {
    require_durations(graph, durations);
    double now = start_ms;
    std::set<NodeId> ready;
    std::optional<QueryId> current;
    while (graph.unprocessed_tasks()) {
        for (auto id : graph.get_independent_tasks()) ready.insert(id);
        std::erase_if(ready, [&](NodeId id) { return graph.node(id).status != TaskStatus::Ready; });
        if (ready.empty()) break;
        const NodeId id = *ready.begin();
        ready.erase(ready.begin());

        const QueryId q = owner(graph.node(id));
        if (!current || *current != q) {
            trace.events.push_back({"decompose", q, now, now + per_query.ms, per_query.tokens, 0});
            now += per_query.ms;
            current = q;
        }
        auto outcome = std::move(runner(graph, {id}).at(0));
        graph.mark_running(id);
        const double end = now + durations.at(id);
        settle(graph, id, std::move(outcome), now, end, trace, on_complete);
        now = end;
    }
}

TaskGraph disjoint_union(std::span<const TaskGraph> graphs) {
    TaskGraph out;
    std::string origin;
    NodeId next = 0;
    for (const auto& g : graphs) {
        if (!origin.empty()) origin += "+";
        origin += g.origin();
        std::map<NodeId, NodeId> remap;
        for (const auto& node : g.nodes()) {
            TaskNode copy;
            copy.id = next++;
            copy.type = node.type;
            copy.call = node.call;
            copy.provenance = node.provenance;
            remap[node.id] = copy.id;
            out.add_task(std::move(copy));
        }
        for (const auto& [from, to] : g.edges()) out.add_dependency(remap[from], remap[to]);
    }
    out.set_origin(origin);
    return out;
}

int count_clarifications(const TaskGraph& graph, ExecutionPolicy policy, const RuleTable& rules) {
    int count = 0;
    for (const auto& node : graph.nodes()) {
        for (const auto& slot : unbound_slots(node)) {
            if (policy == ExecutionPolicy::ChainSequential || !slot_bindable(graph, node.id, slot, rules)) ++count;
        }
    }
    return count;
}

std::string combine_results(const TaskGraph& graph) {
    std::set<QueryId> queries;
    for (const auto& node : graph.nodes()) queries.insert(node.provenance.begin(), node.provenance.end());
    const bool single = queries.size() <= 1;
    std::string out;
    for (auto q : queries) {
        std::vector<std::string> lines;
        for (const auto& node : graph.nodes()) {
            if (!node.provenance.contains(q)) continue;
            const auto& succ = graph.successors(node.id);
            bool sink = std::none_of(succ.begin(), succ.end(),
                                     [&](NodeId s) { return graph.node(s).provenance.contains(q); });
            if (!sink) continue;
            if (node.status == TaskStatus::Complete && node.result) {
                lines.push_back(node.result->summary);
            } else if (node.status == TaskStatus::Failed) {
                lines.push_back("error: node " + std::to_string(node.id) + " " + node.call.tool + ": " + node.failure);
            }
        }
        if (!single) out += "## query " + std::to_string(q) + "\n";
        for (const auto& line : lines) out += line + "\n";
    }
    if (!out.empty() && out.back() == '\n' && single) out.pop_back();
    return out;
}

namespace {

// Hands tasks to agent endpoints over the bus and collects their results.
class BusDispatcher {
public:
    BusDispatcher(const AgentRegistry& agents, const Toolbox& toolbox, Backend& backend, ExecuteOptions options,
                  std::size_t workers)
        : agents_(agents), toolbox_(toolbox), backend_(backend), options_(options), pool_(workers) {
        bus_.register_endpoint(kHost);
        for (const auto& agent : agents.agents()) {
            bus_.register_endpoint(agent.name);
            bus_.subscribe(agent.name);
            locks_[agent.name];
        }
    }

    struct Job {
        TaskNode task;
        std::vector<ContextEntry> context;
        double sleep_ms = 0.0;
    };

    struct Done {
        NodeId id = 0;
        TaskOutcome outcome;
        std::vector<ReActStep> react;
        std::optional<ToolCall> resolved;
        double started_ms = 0.0;
        double ended_ms = 0.0;
    };

    void dispatch(Job job) {
        const auto& agent = agents_.select_agent(job.task.type);
        const NodeId id = job.task.id;
        const std::string tool = job.task.call.tool;
        {
            std::scoped_lock lock(jobs_mutex_);
            jobs_[id] = std::move(job);
        }
        bus_.send({kHost, agent.name, MessageKind::TaskAssign, id, {{"tool", tool}}});
        pool_.submit([this, &agent] { work(agent); });
    }

    Done collect() {
        auto message = bus_.receive(kHost);
        std::scoped_lock lock(jobs_mutex_);
        auto node = done_.extract(message.correlation);
        return std::move(node.mapped());
    }

    void share(const ContextEntry& entry) {
        // Agents skip shares when they next read their inbox.
        bus_.send({kHost, "*", MessageKind::ContextShare, entry.producer, {{"key", entry.key}}});
    }

    double clock_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch_).count();
    }

private:
    static constexpr const char* kHost = "host";

    void work(const AgentSpec& agent) {
        std::scoped_lock actor(locks_.at(agent.name));  // one task per agent at a time
        auto message = bus_.receive(agent.name);
        while (message.kind != MessageKind::TaskAssign) message = bus_.receive(agent.name);
        Job job;
        {
            std::scoped_lock lock(jobs_mutex_);
            job = std::move(jobs_.at(message.correlation));
            jobs_.erase(message.correlation);
        }
        Done done;
        done.id = job.task.id;
        done.started_ms = clock_ms();
        MessageKind reply = MessageKind::TaskResult;
        json payload;
        try {
            auto exec = execute_task(agent, job.task, job.context, backend_, toolbox_, options_);
            done.outcome.result = std::move(exec.result);
            done.outcome.ledger = exec.ledger;
            done.react = std::move(exec.trace);
            done.resolved = std::move(exec.resolved);
            payload = {{"summary", done.outcome.result.summary}};
        } catch (const TaskFailure& e) {
            done.outcome = {false, {}, e.ledger(), e.what()};
            done.react = e.trace();
            reply = MessageKind::Error;
            payload = {{"error", e.what()}};
        } catch (const std::exception& e) {
            done.outcome = {false, {}, {}, e.what()};
            reply = MessageKind::Error;
            payload = {{"error", e.what()}};
        }
        if (job.sleep_ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(job.sleep_ms));
        done.ended_ms = clock_ms();
        {
            std::scoped_lock lock(jobs_mutex_);
            done_[done.id] = std::move(done);
        }
        bus_.send({agent.name, kHost, reply, message.correlation, payload});
    }

    const AgentRegistry& agents_;
    const Toolbox& toolbox_;
    Backend& backend_;
    ExecuteOptions options_;
    MessageBus bus_;
    std::map<std::string, std::mutex> locks_;
    std::mutex jobs_mutex_;
    std::map<NodeId, Job> jobs_;
    std::map<NodeId, Done> done_;
    std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
    WorkerPool pool_;  // last: joins before the members above go away
};

std::size_t pool_size(const OrchestratorConfig& config) {
    if (config.workers > 0) return config.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

Orchestrator::Orchestrator(const Decomposer& decomposer, const AgentRegistry& agents, const Toolbox& toolbox,
                           const CalibrationProfile& calibration, ScriptTable scripts)
    : decomposer_(decomposer), agents_(agents), toolbox_(toolbox), calibration_(calibration),
      scripts_(std::move(scripts)) {}

RunResult Orchestrator::process_query(const std::vector<std::string>& texts, const OrchestratorConfig& config) const {
    return process_batch(decomposer_.make_batch(texts), config);
}

RunResult Orchestrator::process_batch(const QueryBatch& batch, const OrchestratorConfig& config) const {
    const auto policy = config.policy;
    const bool graph_policy = policy == ExecutionPolicy::GraphParallel;
    const RuleTable& rules = decomposer_.rules();
    const TokenCounter counter(calibration_.counting);
    const TokenBudget budget(calibration_.context_cap, calibration_.counting);
    MockBackend backend(scripts_, calibration_.prompt_overhead(policy), counter);

    RunResult run;
    run.policy = policy;
    run.queries = batch.queries;
    if (graph_policy) {
        run.graph = batch.merged;
    } else {
        std::vector<TaskGraph> parts;
        for (std::size_t i = 0; i < batch.parts.size(); ++i) {
            parts.push_back(build_dependency_graph(batch.parts[i].tasks, batch.parts[i].edges, "q" + std::to_string(i)));
        }
        run.graph = disjoint_union(parts);
    }
    if (run.graph.empty()) return run;

    // Clarify what the policy cannot infer, substituting the user's answer.
    run.clarifications = count_clarifications(run.graph, policy, rules);
    {
        TaskGraph clarified(run.graph.origin());
        for (auto node : run.graph.nodes()) {
            for (auto& [key, value] : node.call.params) {
                const auto* u = std::get_if<Unbound>(&value);
                if (!u || (graph_policy && slot_bindable(run.graph, node.id, u->slot, rules))) continue;
                const auto* def = rules.slot_default(u->slot);
                if (!def || def->clarification.empty()) {
                    throw Error(ErrorKind::UnboundSlot, "node " + std::to_string(node.id) + ": no answer for slot '" +
                                                            u->slot + "'");
                }
                value = def->clarification;
            }
            clarified.add_task(node);
        }
        for (const auto& [from, to] : run.graph.edges()) clarified.add_dependency(from, to);
        run.graph = std::move(clarified);
    }

    std::map<NodeId, double> durations;
    for (const auto& node : run.graph.nodes()) durations[node.id] = calibration_.tool(node.call.tool).duration_ms(policy);

    const double scale = config.clock == ClockMode::Wall ? config.time_scale : 0.0;
    BusDispatcher dispatcher(agents_, toolbox_, backend, ExecuteOptions{&rules, counter}, pool_size(config));
    std::map<QueryId, std::vector<ContextEntry>> history;  // chain: completed summaries per query, in order

    auto context_for = [&](const TaskGraph& graph, NodeId id) {
        if (graph_policy) return get_previous_context(run.context, graph, id, budget);
        auto it = history.find(owner(graph.node(id)));
        return it == history.end() ? std::vector<ContextEntry>{} : it->second;
    };
    auto absorb = [&](BusDispatcher::Done& done) {
        run.react[done.id] = std::move(done.react);
        if (done.resolved) run.resolved[done.id] = *done.resolved;
    };
    CompletionHook on_complete = [&](const TaskGraph& graph, NodeId id) {
        const auto& node = graph.node(id);
        auto entry = make_entry(node, *node.result, rules.consumers_of(node.call.tool));
        run.context.put(entry);
        dispatcher.share(entry);
        history[owner(node)].push_back(std::move(entry));
    };

    if (config.clock == ClockMode::Simulated) {
        BatchRunner runner = [&](const TaskGraph& graph, const std::vector<NodeId>& ids) {
            for (auto id : ids) dispatcher.dispatch({graph.node(id), context_for(graph, id), 0.0});
            std::map<NodeId, TaskOutcome> outcomes;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                auto done = dispatcher.collect();
                absorb(done);
                outcomes[done.id] = std::move(done.outcome);
            }
            std::vector<TaskOutcome> ordered;
            for (auto id : ids) ordered.push_back(std::move(outcomes.at(id)));
            return ordered;
        };
        double t = 0.0;
        if (graph_policy) {
            for (const auto& q : batch.queries) {
                const auto& d = calibration_.decomposition;
                const auto& g = calibration_.graph_construction;
                run.trace.events.push_back({"decompose", q.id, t, t + d.ms, d.tokens, 0});
                t += d.ms;
                run.trace.events.push_back({"build_graph", q.id, t, t + g.ms, g.tokens, 0});
                t += g.ms;
            }
            simulate_graph_parallel(run.graph, durations, t, runner, run.trace, on_complete);
        } else {
            simulate_chain(run.graph, durations, t, runner, run.trace, on_complete, calibration_.decomposition);
        }
    } else {
        // Wall clock: overhead and task durations are slept, scaled.
        auto pause = [&](double ms) {
            if (ms * scale > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms * scale));
        };
        auto overhead = [&](const char* kind, QueryId q, const Overhead& o) {
            const double start = dispatcher.clock_ms();
            pause(o.ms);
            run.trace.events.push_back({kind, q, start, dispatcher.clock_ms(), o.tokens, 0});
        };
        if (graph_policy) {
            for (const auto& q : batch.queries) {
                overhead("decompose", q.id, calibration_.decomposition);
                overhead("build_graph", q.id, calibration_.graph_construction);
            }
        }
        std::set<NodeId> ready;
        std::size_t in_flight = 0;
        std::optional<QueryId> current;
        auto launch = [&] {
            for (auto id : run.graph.get_independent_tasks()) ready.insert(id);
            std::erase_if(ready, [&](NodeId id) { return run.graph.node(id).status != TaskStatus::Ready; });
            while (!ready.empty() && (graph_policy || in_flight == 0)) {
                const NodeId id = *ready.begin();
                ready.erase(ready.begin());
                if (!graph_policy && current != owner(run.graph.node(id))) {
                    current = owner(run.graph.node(id));
                    overhead("decompose", *current, calibration_.decomposition);
                }
                dispatcher.dispatch({run.graph.node(id), context_for(run.graph, id), durations.at(id) * scale});
                run.graph.mark_running(id);
                ++in_flight;
            }
        };
        launch();
        while (in_flight > 0) {
            auto done = dispatcher.collect();
            --in_flight;
            absorb(done);
            settle(run.graph, done.id, std::move(done.outcome), done.started_ms, done.ended_ms, run.trace, on_complete);
            launch();
        }
        std::stable_sort(run.trace.events.begin(), run.trace.events.end(),
                         [](const TraceEvent& a, const TraceEvent& b) { return a.t_start < b.t_start; });
    }

    run.total_tokens = run.trace.tokens();
    run.response = combine_results(run.graph);
    return run;
}

}  // namespace trafficgraph
