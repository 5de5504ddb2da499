// SPDX-License-Identifier: Apache-2.0
//
// Traffic tools callable by agents. Every tool is a pure function of the
// network snapshot and its arguments; visual and simulation tools also
// write a data artifact whose path is reported relative to the artifact
// root.
#pragma once

#include "trafficgraph/context.hpp"
#include "trafficgraph/network.hpp"
#include "trafficgraph/task_graph.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace trafficgraph {

std::string sha256_hex(std::string_view content);

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path root);

    /// Writes `content` (pretty JSON plus newline) to artifacts/<name>.json.
    /// Identical content always yields the identical artifact record.
    Artifact write(const std::string& kind, const std::string& name, const nlohmann::json& content) const;

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::filesystem::path root_;
};

using KnowledgeStore = std::map<std::string, std::string>;

/// What a tool may read besides its arguments.
struct ToolEnv {
    const KnowledgeStore* knowledge = nullptr;
    std::span<const ContextEntry> context;
};

struct ToolOutput {
    Payload payload;
    std::string summary;  // "key=value; ..." facts
};

struct ToolInfo {
    std::string name;
    TaskType type;
    std::string description;
};

class Toolbox {
public:
    Toolbox(std::shared_ptr<const RoadNetwork> network, ArtifactWriter writer);

    /// Throws UnknownTool for unregistered names; tool errors propagate
    /// with their own kind.
    ToolOutput invoke(const ToolCall& call, const ToolEnv& env = {}) const;

    bool has_tool(const std::string& name) const { return tools_.contains(name); }
    const ToolInfo& info(const std::string& name) const;
    std::vector<ToolInfo> tools() const;

    const RoadNetwork& network() const noexcept { return *network_; }
    const ArtifactWriter& artifacts() const noexcept { return writer_; }

private:
    using Handler = std::function<ToolOutput(const ToolCall&, const ToolEnv&)>;
    void add(ToolInfo info, Handler handler);

    std::shared_ptr<const RoadNetwork> network_;
    ArtifactWriter writer_;
    std::map<std::string, std::pair<ToolInfo, Handler>> tools_;
};

}  // namespace trafficgraph
