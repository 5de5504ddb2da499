// SPDX-License-Identifier: Apache-2.0
//
// Report emission. Files carry no timestamps or host data, so identical
// inputs give byte-identical output.
#pragma once

#include "trafficgraph/benchmark.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trafficgraph {

enum class ReportFormat { Json, Csv, All };

ReportFormat report_format_from_string(std::string_view name);  // json | csv | all

nlohmann::json report_to_json(const MetricsReport& report);

/// Single comma-separated table: section,item,graph,chain,reduction_pct.
std::string report_to_csv(const MetricsReport& report);

/// Writes report.json and/or report.csv (plus series_*.csv for All) into
/// `dir`. Returns the written paths in a fixed order. Throws Io errors.
std::vector<std::filesystem::path> emit_report(const MetricsReport& report, ReportFormat format,
                                               const std::filesystem::path& dir);

/// Exact decimal rendering that parses back to the same double.
std::string exact_number(double value);

}  // namespace trafficgraph
