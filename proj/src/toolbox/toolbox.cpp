// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/toolbox.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

namespace trafficgraph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double value, int decimals = 2) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
    return buffer;
}

const ParamValue& require_param(const ToolCall& call, const std::string& key) {
    auto it = call.params.find(key);
    if (it == call.params.end()) {
        throw Error(ErrorKind::InvalidArgument, call.tool + ": missing parameter '" + key + "'");
    }
    if (!is_resolved(it->second)) {
        throw Error(ErrorKind::UnboundSlot, call.tool + ": parameter '" + key + "' is " + render_param(it->second));
    }
    return it->second;
}

std::string string_param(const ToolCall& call, const std::string& key) {
    return render_param(require_param(call, key));
}

std::int64_t int_param(const ToolCall& call, const std::string& key) {
    const auto& value = require_param(call, key);
    if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
    if (const auto* d = std::get_if<double>(&value)) return static_cast<std::int64_t>(*d);
    const auto text = render_param(value);
    try {
        std::size_t used = 0;
        auto parsed = std::stoll(text, &used);
        if (used == text.size()) return parsed;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidArgument, call.tool + ": parameter '" + key + "' is not an integer: " + text);
}

std::optional<std::int64_t> optional_int(const ToolCall& call, const std::string& key) {
    if (!call.params.contains(key)) return std::nullopt;
    return int_param(call, key);
}

std::int64_t daily_volume(const Road& road) {
    return std::accumulate(road.hourly_volume.begin(), road.hourly_volume.end(), std::int64_t{0});
}

}  // namespace

std::string sha256_hex(std::string_view content) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
        throw Error(ErrorKind::Io, "sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

ArtifactWriter::ArtifactWriter(fs::path root) : root_(std::move(root)) {}

Artifact ArtifactWriter::write(const std::string& kind, const std::string& name, const json& content) const {
    const std::string text = content.dump(2) + "\n";
    const fs::path relative = fs::path("artifacts") / (name + ".json");
    const fs::path target = root_ / relative;
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + target.parent_path().string() + ": " + ec.message());
    // Write-then-rename so concurrent writers of the same artifact never
    // expose a torn file.
    std::ostringstream suffix;
    suffix << ".tmp" << std::hash<std::thread::id>{}(std::this_thread::get_id());
    const fs::path temp = target.string() + suffix.str();
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + temp.string());
        out << text;
        if (!out) throw Error(ErrorKind::Io, "short write to " + temp.string());
    }
    fs::rename(temp, target, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot rename to " + target.string() + ": " + ec.message());
    return Artifact{kind, relative.generic_string(), sha256_hex(text)};
}

Toolbox::Toolbox(std::shared_ptr<const RoadNetwork> network, ArtifactWriter writer)
    : network_(std::move(network)), writer_(std::move(writer)) {
    const RoadNetwork& net = *network_;
    const ArtifactWriter& artifacts = writer_;

    add({"road_name_to_id", TaskType::Data, "Resolve a road name to its road id (exact match)."},
        [&net](const ToolCall& call, const ToolEnv&) {
            const auto name = string_param(call, "name");
            const auto id = road_name_to_id(net, name);
            return ToolOutput{id, "road_id=" + id + "; name=" + name};
        });

    add({"intersection_lookup", TaskType::Data, "Fetch the record of one intersection."},
        [&net](const ToolCall& call, const ToolEnv&) {
            const auto& node = net.intersection(string_param(call, "intersection"));
            Table table{{"id", "name", "x_m", "y_m", "lost_time_s", "flow_ratio_sum"},
                        {{node.id, node.name, fixed(node.x_m, 0), fixed(node.y_m, 0), fixed(node.lost_time_s, 0),
                          fixed(flow_ratio_sum(node), 3)}}};
            return ToolOutput{table, "intersection=" + node.id + "; name=" + node.name + "; x_m=" + fixed(node.x_m, 0) +
                                         "; y_m=" + fixed(node.y_m, 0) + "; flow_ratio_sum=" +
                                         fixed(flow_ratio_sum(node), 3)};
        });

    add({"retrieve_traffic_data", TaskType::Data, "Load intersection and road records for a scope."},
        [&net](const ToolCall& call, const ToolEnv&) {
            const auto scope = string_param(call, "scope");
            Table table{{"kind", "id", "name", "metric"}, {}};
            std::string summary = "scope=" + scope;
            if (scope == "intersections" || scope == "network") {
                double flow = 0.0;
                double worst = 0.0;
                for (const auto& node : net.intersections) {
                    for (const auto& a : node.approaches) flow += a.flow_vph;
                    worst = std::max(worst, flow_ratio_sum(node));
                    table.rows.push_back({"intersection", node.id, node.name, fixed(flow_ratio_sum(node), 3)});
                }
                summary += "; intersections=" + std::to_string(net.intersections.size()) +
                           "; total_approach_flow_vph=" + fixed(flow, 0) + "; max_flow_ratio_sum=" + fixed(worst, 3);
            }
            if (scope == "roads" || scope == "network") {
                std::int64_t total = 0;
                for (const auto& road : net.roads) {
                    total += daily_volume(road);
                    table.rows.push_back({"road", road.id, road.name, std::to_string(daily_volume(road))});
                }
                summary += "; roads=" + std::to_string(net.roads.size()) + "; total_daily_volume=" + std::to_string(total);
            }
            if (table.rows.empty()) throw Error(ErrorKind::InvalidArgument, "unknown data scope '" + scope + "'");
            return ToolOutput{table, summary};
        });

    add({"intersection_performance", TaskType::Analysis, "Rank intersections by time loss (s/veh)."},
        [&net](const ToolCall& call, const ToolEnv&) {
            auto rows = intersection_performance(net);
            if (auto top = optional_int(call, "top")) {
                if (*top < 1) throw Error(ErrorKind::InvalidArgument, "top must be >= 1");
                rows.resize(std::min(rows.size(), static_cast<std::size_t>(*top)));
            }
            Table table{{"intersection", "time_loss_s", "flow_ratio_sum"}, {}};
            std::string ranking;
            for (const auto& row : rows) {
                table.rows.push_back({row.intersection, fixed(row.time_loss_s), fixed(row.flow_ratio_sum, 3)});
                if (!ranking.empty()) ranking += ",";
                ranking += row.intersection + ":" + fixed(row.time_loss_s);
            }
            return ToolOutput{table, "top_time_loss=" + rows.front().intersection + "; ranking=" + ranking};
        });

    add({"traffic_volume_analysis", TaskType::Analysis, "Summarize daily and peak-hour road volumes."},
        [&net](const ToolCall&, const ToolEnv&) {
            std::array<std::int64_t, 24> by_hour{};
            Table table{{"road", "daily_volume", "peak_volume"}, {}};
            const Road* busiest = &net.roads.front();
            std::int64_t total = 0;
            for (const auto& road : net.roads) {
                for (std::size_t h = 0; h < 24; ++h) by_hour[h] += road.hourly_volume[h];
                total += daily_volume(road);
                if (daily_volume(road) > daily_volume(*busiest)) busiest = &road;
                table.rows.push_back({road.id, std::to_string(daily_volume(road)),
                                      std::to_string(*std::max_element(road.hourly_volume.begin(), road.hourly_volume.end()))});
            }
            const auto peak = std::max_element(by_hour.begin(), by_hour.end()) - by_hour.begin();
            return ToolOutput{table, "busiest_road=" + busiest->id + "; busiest_daily_volume=" +
                                         std::to_string(daily_volume(*busiest)) + "; peak_hour=" + std::to_string(peak) +
                                         "; total_daily_volume=" + std::to_string(total)};
        });

    add({"webster", TaskType::Optimize, "Webster optimal cycle and green splits for an intersection."},
        [&net](const ToolCall& call, const ToolEnv&) {
            const auto plan = webster(net, string_param(call, "intersection"));
            Table table{{"phase", "green_s"}, {}};
            std::string greens;
            for (std::size_t i = 0; i < plan.phase_green_s.size(); ++i) {
                table.rows.push_back({std::to_string(i), fixed(plan.phase_green_s[i])});
                if (!greens.empty()) greens += "/";
                greens += fixed(plan.phase_green_s[i]);
            }
            return ToolOutput{table, "intersection=" + plan.intersection + "; cycle_s=" + fixed(plan.cycle_s) +
                                         "; green_s=" + greens + "; flow_ratio_sum=" + fixed(plan.flow_ratio_sum, 3) +
                                         "; lost_time_s=" + fixed(plan.lost_time_s, 0)};
        });

    add({"plot_geo_heatmap", TaskType::Visual, "Emit the road-by-hour volume intensity grid."},
        [&net, &artifacts](const ToolCall&, const ToolEnv&) {
            const auto map = volume_heatmap(net);
            json rows = json::array();
            for (std::size_t i = 0; i < map.roads.size(); ++i) {
                rows.push_back({{"road", map.roads[i]}, {"intensity", map.intensity[i]}});
            }
            auto artifact = artifacts.write("heatmap-data", "heatmap_network",
                                            {{"kind", "heatmap-data"},
                                             {"seed", net.seed},
                                             {"max_volume", map.max_volume},
                                             {"hours", 24},
                                             {"rows", rows}});
            return ToolOutput{artifact, "artifact=" + artifact.path + "; kind=heatmap-data; rows=" +
                                            std::to_string(map.roads.size())};
        });

    auto marker = [&artifacts](const std::string& target_kind, const std::string& id, const std::string& name, double x,
                               double y) {
        auto artifact = artifacts.write("map-marker", "marker_" + target_kind + "_" + id,
                                        {{"kind", "map-marker"},
                                         {"target", target_kind},
                                         {"id", id},
                                         {"name", name},
                                         {"x_m", x},
                                         {"y_m", y}});
        return ToolOutput{artifact, "artifact=" + artifact.path + "; kind=map-marker; " + target_kind + "=" + id};
    };

    add({"road_visualization", TaskType::Visual, "Emit a map marker for a road."},
        [&net, marker](const ToolCall& call, const ToolEnv&) {
            const auto& road = net.road(string_param(call, "road"));
            return marker("road", road.id, road.name, road.x_m, road.y_m);
        });

    add({"map_marker", TaskType::Visual, "Emit a map marker for an intersection."},
        [&net, marker](const ToolCall& call, const ToolEnv&) {
            const auto& node = net.intersection(string_param(call, "intersection"));
            return marker("intersection", node.id, node.name, node.x_m, node.y_m);
        });

    add({"simulation_controller", TaskType::Simulation, "Run the fixed-time queueing simulation."},
        [&net, &artifacts](const ToolCall& call, const ToolEnv&) {
            const auto steps = int_param(call, "steps");
            const auto start = optional_int(call, "start_hour").value_or(7);
            if (steps < 1) throw Error(ErrorKind::InvalidSteps, "simulation needs at least one step");
            const auto log = simulate(net, static_cast<int>(steps), static_cast<int>(start));
            auto artifact = artifacts.write("sim-log", "simlog_" + std::to_string(steps) + "_" + std::to_string(start),
                                            {{"kind", "sim-log"},
                                             {"seed", net.seed},
                                             {"steps", log.steps},
                                             {"start_hour", log.start_hour},
                                             {"roads", log.roads},
                                             {"queues", log.queues},
                                             {"arrivals", log.arrivals},
                                             {"departures", log.departures},
                                             {"final_queue", log.final_queue}});
            return ToolOutput{artifact, "steps=" + std::to_string(log.steps) + "; arrivals=" + std::to_string(log.arrivals) +
                                            "; departures=" + std::to_string(log.departures) +
                                            "; final_queue=" + std::to_string(log.final_queue) +
                                            "; max_queue=" + std::to_string(log.max_queue) + "; artifact=" + artifact.path};
        });

    add({"general_answer", TaskType::General, "Answer a general question from agent knowledge."},
        [](const ToolCall& call, const ToolEnv& env) {
            const auto topic = string_param(call, "topic");
            std::string lowered;
            for (char c : topic) lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (env.knowledge) {
                for (const auto& [key, text] : *env.knowledge) {
                    if (lowered.find(key) != std::string::npos) return ToolOutput{text, "answer=" + text};
                }
                if (auto it = env.knowledge->find("default"); it != env.knowledge->end()) {
                    return ToolOutput{it->second, "answer=" + it->second};
                }
            }
            throw Error(ErrorKind::NotFound, "no knowledge about '" + topic + "'");
        });

    add({"report_synthesis", TaskType::General, "Assemble a report from upstream findings."},
        [](const ToolCall& call, const ToolEnv& env) {
            std::ostringstream report;
            report << "Traffic report\n";
            std::string facts;
            int sections = 0;
            for (const auto& entry : env.context) {
                if (!entry.relevance.contains(call.tool)) continue;
                ++sections;
                report << "- " << entry.key << ": " << entry.summary << "\n";
                for (const char* key : {"busiest_road", "peak_hour", "top_time_loss", "artifact"}) {
                    if (auto value = find_fact(entry.summary, key)) facts += std::string("; ") + key + "=" + *value;
                }
            }
            return ToolOutput{report.str(), "report_sections=" + std::to_string(sections) + facts};
        });
}

void Toolbox::add(ToolInfo info, Handler handler) {
    auto name = info.name;
    tools_.emplace(std::move(name), std::make_pair(std::move(info), std::move(handler)));
}

ToolOutput Toolbox::invoke(const ToolCall& call, const ToolEnv& env) const {
    auto it = tools_.find(call.tool);
    if (it == tools_.end()) throw Error(ErrorKind::UnknownTool, "unknown tool '" + call.tool + "'");
    return it->second.second(call, env);
}

const ToolInfo& Toolbox::info(const std::string& name) const {
    auto it = tools_.find(name);
    if (it == tools_.end()) throw Error(ErrorKind::UnknownTool, "unknown tool '" + name + "'");
    return it->second.first;
}

std::vector<ToolInfo> Toolbox::tools() const {
    std::vector<ToolInfo> out;
    for (const auto& [name, entry] : tools_) out.push_back(entry.first);
    return out;
}

}  // namespace trafficgraph
