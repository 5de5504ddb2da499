// SPDX-License-Identifier: Apache-2.0
#include "trafficgraph/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

namespace trafficgraph {

namespace {

constexpr std::array<double, 24> kDiurnalShape{0.15, 0.10, 0.08, 0.08, 0.12, 0.30, 0.65, 0.95,
                                               1.00, 0.75, 0.60, 0.60, 0.65, 0.60, 0.62, 0.75,
                                               0.95, 1.00, 0.80, 0.55, 0.42, 0.35, 0.28, 0.20};

constexpr std::array<const char*, 20> kStreetNames{
    "Oak Ave",      "Ocean Dr",     "Shoreline Blvd", "Airline Rd",  "Everhart Rd",
    "Staples St",   "Alameda St",   "Weber Rd",       "Holly Rd",    "Saratoga Blvd",
    "Yorktown Blvd", "Leopard St",  "Ayers St",       "Port Ave",    "Baldwin Blvd",
    "Morgan Ave",   "Kostoryz Rd",  "Gollihar Rd",    "Williams Dr", "McArdle Rd"};

// std distributions are implementation-defined; plain modulo over the
// mt19937_64 stream keeps networks identical across standard libraries.
class Draw {
public:
    explicit Draw(std::uint64_t seed) : engine_(seed) {}
    int uniform(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace

const Intersection& RoadNetwork::intersection(const std::string& id) const {
    auto it = std::find_if(intersections.begin(), intersections.end(), [&](const auto& i) { return i.id == id; });
    if (it == intersections.end()) throw Error(ErrorKind::NotFound, "unknown intersection '" + id + "'");
    return *it;
}

const Road& RoadNetwork::road(const std::string& id) const {
    auto it = std::find_if(roads.begin(), roads.end(), [&](const auto& r) { return r.id == id; });
    if (it == roads.end()) throw Error(ErrorKind::NotFound, "unknown road '" + id + "'");
    return *it;
}

RoadNetwork generate_network(std::uint64_t seed, int n_intersections, int n_roads) {
    if (n_intersections < 1 || n_roads < 1) {
        throw Error(ErrorKind::InvalidSize, "network needs at least one intersection and one road (got " +
                                                std::to_string(n_intersections) + ", " + std::to_string(n_roads) + ")");
    }
    Draw draw(seed);
    RoadNetwork net;
    net.seed = seed;

    std::vector<std::string> streets(kStreetNames.begin(), kStreetNames.end());
    for (std::size_t i = streets.size(); i > 1; --i) {
        std::swap(streets[i - 1], streets[static_cast<std::size_t>(draw.uniform(0, static_cast<int>(i) - 1))]);
    }

    std::set<std::string> used_ids{kReservedIntersectionId};
    for (int i = 0; i < n_intersections; ++i) {
        Intersection node;
        if (i == 0) {
            node.id = kReservedIntersectionId;
        } else {
            do {
                node.id = std::to_string(draw.uniform(1000, 9999));
            } while (!used_ids.insert(node.id).second);
        }
        const auto& a = streets[static_cast<std::size_t>(i * 2) % streets.size()];
        const auto& b = streets[static_cast<std::size_t>(i * 2 + 1) % streets.size()];
        node.name = a + " & " + b;
        static constexpr std::array<const char*, 4> kDirections{"N", "S", "E", "W"};
        for (int k = 0; k < 4; ++k) {
            Approach approach;
            approach.direction = kDirections[static_cast<std::size_t>(k)];
            approach.phase = k / 2;
            approach.flow_vph = draw.uniform(80, 650);
            approach.saturation_vph = draw.uniform(32, 38) * 50.0;
            node.approaches.push_back(approach);
        }
        node.lost_time_s = draw.uniform(8, 16);
        node.x_m = draw.uniform(0, 4999);
        node.y_m = draw.uniform(0, 4999);
        net.intersections.push_back(std::move(node));
    }

    std::set<std::string> used_names;
    for (int i = 0; i < n_roads; ++i) {
        Road road;
        char id[16];
        std::snprintf(id, sizeof id, "R%03d", i + 1);
        road.id = id;
        if (i == 0) {
            road.name = kReservedRoadName;
        } else {
            std::string base = streets[static_cast<std::size_t>(i - 1) % streets.size()];
            road.name = base;
            for (int suffix = 2; used_names.contains(road.name); ++suffix) road.name = base + " " + std::to_string(suffix);
        }
        used_names.insert(road.name);
        road.length_m = draw.uniform(300, 2500);
        const int base_volume = draw.uniform(300, 1100);
        for (std::size_t h = 0; h < 24; ++h) {
            const int jitter = draw.uniform(90, 110);
            road.hourly_volume[h] = static_cast<int>(std::lround(base_volume * kDiurnalShape[h] * jitter / 100.0));
        }
        road.x_m = draw.uniform(0, 4999);
        road.y_m = draw.uniform(0, 4999);
        net.roads.push_back(std::move(road));
    }
    return net;
}

nlohmann::json network_to_json(const RoadNetwork& network) {
    nlohmann::json intersections = nlohmann::json::array();
    for (const auto& node : network.intersections) {
        nlohmann::json approaches = nlohmann::json::array();
        for (const auto& a : node.approaches) {
            approaches.push_back({{"direction", a.direction},
                                  {"phase", a.phase},
                                  {"flow_vph", a.flow_vph},
                                  {"saturation_vph", a.saturation_vph}});
        }
        intersections.push_back({{"id", node.id},
                                 {"name", node.name},
                                 {"approaches", approaches},
                                 {"lost_time_s", node.lost_time_s},
                                 {"x_m", node.x_m},
                                 {"y_m", node.y_m}});
    }
    nlohmann::json roads = nlohmann::json::array();
    for (const auto& road : network.roads) {
        roads.push_back({{"id", road.id},
                         {"name", road.name},
                         {"length_m", road.length_m},
                         {"hourly_volume", road.hourly_volume},
                         {"x_m", road.x_m},
                         {"y_m", road.y_m}});
    }
    return {{"seed", network.seed}, {"intersections", intersections}, {"roads", roads}};
}

RoadNetwork network_from_json(const nlohmann::json& value, const std::string& source) {
    RoadNetwork net;
    try {
        net.seed = value.value("seed", std::uint64_t{0});
        for (const auto& entry : value.at("intersections")) {
            Intersection node;
            node.id = entry.at("id").get<std::string>();
            node.name = entry.value("name", node.id);
            for (const auto& a : entry.at("approaches")) {
                node.approaches.push_back({a.at("direction").get<std::string>(), a.at("phase").get<int>(),
                                           a.at("flow_vph").get<double>(), a.at("saturation_vph").get<double>()});
            }
            node.lost_time_s = entry.at("lost_time_s").get<double>();
            node.x_m = entry.value("x_m", 0.0);
            node.y_m = entry.value("y_m", 0.0);
            net.intersections.push_back(std::move(node));
        }
        for (const auto& entry : value.at("roads")) {
            Road road;
            road.id = entry.at("id").get<std::string>();
            road.name = entry.at("name").get<std::string>();
            road.length_m = entry.value("length_m", 0.0);
            road.hourly_volume = entry.at("hourly_volume").get<std::array<int, 24>>();
            road.x_m = entry.value("x_m", 0.0);
            road.y_m = entry.value("y_m", 0.0);
            net.roads.push_back(std::move(road));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(source, e.what());
    }
    std::set<std::string> ids;
    for (const auto& node : net.intersections) {
        if (!ids.insert(node.id).second) throw ConfigError(source, "duplicate intersection id '" + node.id + "'");
        if (node.lost_time_s < 0) throw ConfigError(source, "negative lost time at " + node.id);
        for (const auto& a : node.approaches) {
            if (a.flow_vph < 0 || a.saturation_vph <= 0) throw ConfigError(source, "bad flows at " + node.id);
        }
    }
    ids.clear();
    for (const auto& road : net.roads) {
        if (!ids.insert(road.id).second) throw ConfigError(source, "duplicate road id '" + road.id + "'");
        if (std::any_of(road.hourly_volume.begin(), road.hourly_volume.end(), [](int v) { return v < 0; })) {
            throw ConfigError(source, "negative volume on " + road.id);
        }
    }
    return net;
}

std::vector<double> critical_flow_ratios(const Intersection& intersection) {
    std::vector<double> ratios;
    for (const auto& a : intersection.approaches) {
        if (a.phase < 0) continue;
        if (static_cast<std::size_t>(a.phase) >= ratios.size()) ratios.resize(static_cast<std::size_t>(a.phase) + 1, 0.0);
        ratios[static_cast<std::size_t>(a.phase)] =
            std::max(ratios[static_cast<std::size_t>(a.phase)], a.flow_vph / a.saturation_vph);
    }
    return ratios;
}

double flow_ratio_sum(const Intersection& intersection) {
    double sum = 0.0;
    for (double y : critical_flow_ratios(intersection)) sum += y;
    return sum;
}

double webster_cycle(double lost_time_s, double flow_ratio_sum) {
    if (flow_ratio_sum >= 1.0) {
        throw Error(ErrorKind::Oversaturated,
                    "flow ratio sum " + std::to_string(flow_ratio_sum) + " >= 1; no finite cycle exists");
    }
    if (flow_ratio_sum < 0.0 || lost_time_s < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "negative lost time or flow ratio");
    }
    return (1.5 * lost_time_s + 5.0) / (1.0 - flow_ratio_sum);
}

SignalPlan webster_plan(const Intersection& intersection) {
    SignalPlan plan;
    plan.intersection = intersection.id;
    plan.lost_time_s = intersection.lost_time_s;
    auto ratios = critical_flow_ratios(intersection);
    if (ratios.empty()) ratios.assign(2, 0.0);
    for (double y : ratios) plan.flow_ratio_sum += y;
    plan.cycle_s = webster_cycle(plan.lost_time_s, plan.flow_ratio_sum);
    const double effective = plan.cycle_s - plan.lost_time_s;
    for (double y : ratios) {
        plan.phase_green_s.push_back(plan.flow_ratio_sum > 0.0 ? effective * y / plan.flow_ratio_sum
                                                               : effective / static_cast<double>(ratios.size()));
    }
    return plan;
}

SignalPlan webster(const RoadNetwork& network, const std::string& intersection_id) {
    return webster_plan(network.intersection(intersection_id));
}

double uniform_delay(double flow_ratio_sum) {
    const double green_ratio = kDefaultGreenS / kDefaultCycleS;
    const double y = std::min(flow_ratio_sum, kMaxDelayFlowRatio);
    return 0.5 * kDefaultCycleS * (1.0 - green_ratio) * (1.0 - green_ratio) / (1.0 - y);
}

std::vector<TimeLoss> intersection_performance(const RoadNetwork& network) {
    std::vector<TimeLoss> rows;
    for (const auto& node : network.intersections) {
        const double y = flow_ratio_sum(node);
        rows.push_back({node.id, uniform_delay(y), y});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const TimeLoss& a, const TimeLoss& b) {
        if (a.time_loss_s != b.time_loss_s) return a.time_loss_s > b.time_loss_s;
        return a.intersection < b.intersection;
    });
    return rows;
}

std::string road_name_to_id(const RoadNetwork& network, const std::string& name) {
    for (const auto& road : network.roads) {
        if (road.name == name) return road.id;
    }
    throw Error(ErrorKind::NotFound, "no road named '" + name + "'");
}

SimulationLog simulate(const RoadNetwork& network, int steps, int start_hour) {
    if (steps < 1) throw Error(ErrorKind::InvalidSteps, "simulation needs at least one step");
    if (start_hour < 0 || start_hour > 23) throw Error(ErrorKind::InvalidArgument, "start hour outside 0..23");
    SimulationLog log;
    log.steps = steps;
    log.start_hour = start_hour;
    const int capacity_vph = static_cast<int>(std::lround(kSimSaturationVph * kSimGreenShare));
    std::vector<std::int64_t> queue(network.roads.size(), 0);
    for (const auto& road : network.roads) log.roads.push_back(road.id);
    // Spread an hourly rate over minutes without rounding drift.
    auto per_minute = [](std::int64_t rate, int minute) { return rate * (minute + 1) / 60 - rate * minute / 60; };
    for (int step = 0; step < steps; ++step) {
        const int minute = step % 60;
        const auto hour = static_cast<std::size_t>((start_hour + step / 60) % 24);
        std::vector<std::int64_t> snapshot;
        std::int64_t total = 0;
        for (std::size_t r = 0; r < network.roads.size(); ++r) {
            const std::int64_t arriving = per_minute(network.roads[r].hourly_volume[hour], minute);
            const std::int64_t capacity = per_minute(capacity_vph, minute);
            const std::int64_t leaving = std::min(queue[r] + arriving, capacity);
            queue[r] += arriving - leaving;
            log.arrivals += arriving;
            log.departures += leaving;
            snapshot.push_back(queue[r]);
            total += queue[r];
        }
        log.max_queue = std::max(log.max_queue, total);
        log.queues.push_back(std::move(snapshot));
    }
    for (auto q : queue) log.final_queue += q;
    return log;
}

Heatmap volume_heatmap(const RoadNetwork& network) {
    Heatmap map;
    for (const auto& road : network.roads) {
        map.max_volume = std::max(map.max_volume, *std::max_element(road.hourly_volume.begin(), road.hourly_volume.end()));
    }
    for (const auto& road : network.roads) {
        map.roads.push_back(road.id);
        std::array<double, 24> row{};
        for (std::size_t h = 0; h < 24; ++h) {
            row[h] = map.max_volume > 0
                         ? std::round(10000.0 * road.hourly_volume[h] / map.max_volume) / 10000.0
                         : 0.0;
        }
        map.intensity.push_back(row);
    }
    return map;
}

}  // namespace trafficgraph
