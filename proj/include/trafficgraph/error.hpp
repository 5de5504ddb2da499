// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trafficgraph {

enum class ErrorKind {
    DuplicateId,
    UnknownId,
    DuplicateEdge,
    Cycle,
    IllegalTransition,
    MissingDuration,
    EmptyQuery,
    UnknownTool,
    UnboundSlot,
    BudgetExhausted,
    ToolFailure,
    UnknownRecipient,
    DuplicateResult,
    NotFound,
    InvalidSize,
    InvalidArgument,
    Oversaturated,
    InvalidSteps,
    Config,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the engine. The kind is
/// stable and meant for programmatic checks; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when an edge would close a cycle. `path` lists the offending
/// node ids, starting and ending at the same node.
class CycleError : public Error {
public:
    CycleError(std::vector<std::uint32_t> path, const std::string& message)
        : Error(ErrorKind::Cycle, message), path_(std::move(path)) {}

    const std::vector<std::uint32_t>& path() const noexcept { return path_; }

private:
    std::vector<std::uint32_t> path_;
};

/// Configuration problem in an input file. `location` is "file:line" when
/// the line is known, otherwise "file" or "file:<entry>".
class ConfigError : public Error {
public:
    ConfigError(std::string location, const std::string& message)
        : Error(ErrorKind::Config, location + ": " + message), location_(std::move(location)) {}

    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

}  // namespace trafficgraph
