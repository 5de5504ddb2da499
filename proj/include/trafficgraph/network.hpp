// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic road network and the traffic models that run on it.
#pragma once

#include "trafficgraph/error.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace trafficgraph {

inline constexpr const char* kReservedIntersectionId = "4493";
inline constexpr const char* kReservedRoadName = "Main St";

struct Approach {
    std::string direction;  // N, S, E, W
    int phase = 0;          // 0 = north-south, 1 = east-west
    double flow_vph = 0.0;
    double saturation_vph = 0.0;
};

struct Intersection {
    std::string id;
    std::string name;
    std::vector<Approach> approaches;
    double lost_time_s = 0.0;
    double x_m = 0.0;
    double y_m = 0.0;
};

struct Road {
    std::string id;
    std::string name;
    double length_m = 0.0;
    std::array<int, 24> hourly_volume{};
    double x_m = 0.0;
    double y_m = 0.0;
};

struct RoadNetwork {
    std::uint64_t seed = 0;
    std::vector<Intersection> intersections;
    std::vector<Road> roads;

    const Intersection& intersection(const std::string& id) const;
    const Road& road(const std::string& id) const;
};

/// Pure function of its arguments. The first intersection is always
/// "4493" and the first road is always "Main St" (R001).
RoadNetwork generate_network(std::uint64_t seed, int n_intersections, int n_roads);

nlohmann::json network_to_json(const RoadNetwork& network);
/// Validates ids, flows and volumes; throws ConfigError on bad input.
RoadNetwork network_from_json(const nlohmann::json& value, const std::string& source = "network");

/// Per-phase critical flow ratios (max flow/saturation over the phase's
/// approaches), indexed by phase.
std::vector<double> critical_flow_ratios(const Intersection& intersection);
double flow_ratio_sum(const Intersection& intersection);

struct SignalPlan {
    std::string intersection;
    double cycle_s = 0.0;
    std::vector<double> phase_green_s;
    double flow_ratio_sum = 0.0;
    double lost_time_s = 0.0;
};

/// Optimal cycle length (1.5 L + 5) / (1 - Y). Throws Oversaturated when
/// Y >= 1.
double webster_cycle(double lost_time_s, double flow_ratio_sum);
SignalPlan webster_plan(const Intersection& intersection);
SignalPlan webster(const RoadNetwork& network, const std::string& intersection_id);

// Fixed-time plan assumed to be running before optimization.
inline constexpr double kDefaultCycleS = 90.0;
inline constexpr double kDefaultGreenS = 40.0;
inline constexpr double kMaxDelayFlowRatio = 0.95;

struct TimeLoss {
    std::string intersection;
    double time_loss_s = 0.0;  // uniform delay, s/veh
    double flow_ratio_sum = 0.0;
};

/// Uniform-delay estimate under the default plan:
///   d = 0.5 C (1 - g/C)^2 / (1 - min(Y, 0.95))
double uniform_delay(double flow_ratio_sum);

/// Sorted by time loss descending, ties by id ascending.
std::vector<TimeLoss> intersection_performance(const RoadNetwork& network);

std::string road_name_to_id(const RoadNetwork& network, const std::string& name);

// Effective stop-line discharge for the queueing model: saturation flow
// times green share.
inline constexpr int kSimSaturationVph = 1800;
inline constexpr double kSimGreenShare = 0.45;

struct SimulationLog {
    int steps = 0;
    int start_hour = 0;
    std::vector<std::string> roads;
    std::vector<std::vector<std::int64_t>> queues;  // [step][road], end of step
    std::int64_t arrivals = 0;
    std::int64_t departures = 0;
    std::int64_t final_queue = 0;
    std::int64_t max_queue = 0;
};

/// One-minute steps. Arrivals follow each road's hourly profile and
/// departures are capped by the stop-line capacity; both are integer
/// vehicle counts, so arrivals == departures + final queue exactly.
SimulationLog simulate(const RoadNetwork& network, int steps, int start_hour = 7);

struct Heatmap {
    std::vector<std::string> roads;
    std::vector<std::array<double, 24>> intensity;  // volume / network max
    int max_volume = 0;
};

Heatmap volume_heatmap(const RoadNetwork& network);

}  // namespace trafficgraph
