#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cpsrl/experiment.hpp"

namespace cpsrl {

/// Schema tags written as the first (comment) line of every CSV.
inline constexpr const char* kCurveSchema = "# cpsrl-curve v1";
inline constexpr const char* kAggregateSchema = "# cpsrl-aggregate v1";
inline constexpr const char* kEpisodeSchema = "# cpsrl-episodes v1";
inline constexpr const char* kStepSchema = "# cpsrl-steps v1";

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text);

void write_curve_csv(const std::filesystem::path& path, const RunLog& log);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

void write_episode_csv(const std::filesystem::path& path, const RunLog& log);
void write_step_csv(const std::filesystem::path& path, const RunLog& log);

void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregatePoint>& points);
std::vector<AggregatePoint> read_aggregate_csv(const std::filesystem::path& path);

struct PlotSeries {
    std::string label;
    std::vector<AggregatePoint> points;
};

/// Line plot of mean cumulative regret against t with a +-1 SE band per series.
std::string render_regret_svg(const std::vector<PlotSeries>& series, const std::string& title);

}  // namespace cpsrl
