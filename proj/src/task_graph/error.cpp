// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/error.hpp"

#include <array>

namespace trafficgraph {

std::string_view to_string(ErrorKind kind) {
    static constexpr std::array<std::string_view, 20> kNames{
        "duplicate-id",      "unknown-id",       "duplicate-edge", "cycle",
        "illegal-transition", "missing-duration", "empty-query",    "unknown-tool",
        "unbound-slot",      "budget-exhausted", "tool-failure",   "unknown-recipient",
        "duplicate-result",  "not-found",        "invalid-size",   "invalid-argument",
        "oversaturated",     "invalid-steps",    "config",         "io"};
    return kNames[static_cast<std::size_t>(kind)];
}

}  // namespace trafficgraph
