// SPDX-License-Identifier: Apache-2.0
//
// In-process host/client message bus. Each endpoint has a FIFO inbox;
// messages between one sender and one recipient carry increasing
// sequence numbers.
#pragma once

#include "trafficgraph/task_graph.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace trafficgraph {

enum class MessageKind { TaskAssign, TaskResult, ContextShare, Error };

std::string_view to_string(MessageKind kind);

struct BusMessage {
    std::string sender;
    std::string recipient;  // ignored for ContextShare: goes to subscribers
    MessageKind kind = MessageKind::TaskAssign;
    NodeId correlation = 0;
    nlohmann::json payload;
    std::uint64_t sequence = 0;  // assigned by the bus
};

struct Receipt {
    std::string recipient;
    NodeId correlation = 0;
    std::uint64_t sequence = 0;
    std::size_t delivered = 0;
};

class MessageBus {
public:
    void register_endpoint(const std::string& name);
    bool registered(const std::string& name) const;
    /// `name` receives every ContextShare sent by someone else.
    void subscribe(const std::string& name);

    /// Delivers and returns a receipt. Unregistered recipients raise
    /// UnknownRecipient; a second TaskResult/Error for one assignment
    /// raises DuplicateResult.
    Receipt send(BusMessage message);

    std::optional<BusMessage> try_receive(const std::string& name);
    BusMessage receive(const std::string& name);
    std::optional<BusMessage> receive_for(const std::string& name, std::chrono::milliseconds timeout);

    /// Assignments still waiting for a result.
    std::size_t outstanding() const;
    std::size_t pending(const std::string& name) const;

private:
    std::deque<BusMessage>& inbox(const std::string& name);
    void deliver(BusMessage message);

    mutable std::mutex mutex_;
    std::condition_variable arrived_;
    std::map<std::string, std::deque<BusMessage>> inboxes_;
    std::set<std::string> subscribers_;
    std::map<std::pair<std::string, std::string>, std::uint64_t> sequences_;
    std::map<NodeId, std::string> assigned_;  // correlation -> assignee
};

}  // namespace trafficgraph
