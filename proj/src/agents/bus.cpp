// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/bus.hpp"

namespace trafficgraph {

std::string_view to_string(MessageKind kind) {
    switch (kind) {
    case MessageKind::TaskAssign: return "TaskAssign";
    case MessageKind::TaskResult: return "TaskResult";
    case MessageKind::ContextShare: return "ContextShare";
    case MessageKind::Error: return "Error";
    }
    return "Error";
}

void MessageBus::register_endpoint(const std::string& name) {
    std::scoped_lock lock(mutex_);
    inboxes_[name];
}

bool MessageBus::registered(const std::string& name) const {
    std::scoped_lock lock(mutex_);
    return inboxes_.contains(name);
}

void MessageBus::subscribe(const std::string& name) {
    std::scoped_lock lock(mutex_);
    if (!inboxes_.contains(name)) throw Error(ErrorKind::UnknownRecipient, "unknown endpoint '" + name + "'");
    subscribers_.insert(name);
}

std::deque<BusMessage>& MessageBus::inbox(const std::string& name) {
    auto it = inboxes_.find(name);
    if (it == inboxes_.end()) throw Error(ErrorKind::UnknownRecipient, "unknown recipient '" + name + "'");
    return it->second;
}

// Caller holds the lock.
void MessageBus::deliver(BusMessage message) {
    auto& queue = inbox(message.recipient);
    message.sequence = ++sequences_[{message.sender, message.recipient}];
    queue.push_back(std::move(message));
}

Receipt MessageBus::send(BusMessage message) {
    Receipt receipt;
    receipt.correlation = message.correlation;
    {
        std::scoped_lock lock(mutex_);
        if (message.kind == MessageKind::ContextShare) {
            receipt.recipient = "*";
            for (const auto& name : subscribers_) {
                if (name == message.sender) continue;
                BusMessage copy = message;
                copy.recipient = name;
                deliver(std::move(copy));
                ++receipt.delivered;
            }
        } else {
            inbox(message.recipient);
            if (message.kind == MessageKind::TaskAssign) {
                assigned_[message.correlation] = message.recipient;
            } else {
                auto it = assigned_.find(message.correlation);
                if (it == assigned_.end()) {
                    throw Error(ErrorKind::DuplicateResult,
                                "no open assignment for correlation " + std::to_string(message.correlation));
                }
                assigned_.erase(it);
            }
            receipt.recipient = message.recipient;
            deliver(message);
            receipt.sequence = inboxes_[message.recipient].back().sequence;
            receipt.delivered = 1;
        }
    }
    arrived_.notify_all();
    return receipt;
}

std::optional<BusMessage> MessageBus::try_receive(const std::string& name) {
    std::scoped_lock lock(mutex_);
    auto& queue = inbox(name);
    if (queue.empty()) return std::nullopt;
    auto message = std::move(queue.front());
    queue.pop_front();
    return message;
}

BusMessage MessageBus::receive(const std::string& name) {
    std::unique_lock lock(mutex_);
    auto& queue = inbox(name);
    arrived_.wait(lock, [&] { return !queue.empty(); });
    auto message = std::move(queue.front());
    queue.pop_front();
    return message;
}

std::optional<BusMessage> MessageBus::receive_for(const std::string& name, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    auto& queue = inbox(name);
    if (!arrived_.wait_for(lock, timeout, [&] { return !queue.empty(); })) return std::nullopt;
    auto message = std::move(queue.front());
    queue.pop_front();
    return message;
}

std::size_t MessageBus::outstanding() const {
    std::scoped_lock lock(mutex_);
    return assigned_.size();
}

std::size_t MessageBus::pending(const std::string& name) const {
    std::scoped_lock lock(mutex_);
    auto it = inboxes_.find(name);
    return it == inboxes_.end() ? 0 : it->second.size();
}

}  // namespace trafficgraph
