#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "uam/dcb.hpp"
#include "uam/engine.hpp"
#include "uam/experiment.hpp"
#include "uam/metrics.hpp"
#include "uam/tactical.hpp"

namespace uam {

void write_events_csv(std::ostream& out, const EpisodeLog& log);
void write_flights_csv(std::ostream& out, const EpisodeLog& log);
/// Speed curves: one row per airborne aircraft per decision.
void write_track_csv(std::ostream& out, const EpisodeLog& log, const std::vector<TrackPoint>& track);
nlohmann::json run_summary(const EpisodeLog& log);

void write_dcb_table_csv(std::ostream& out, const DcbSolution& sol, const DcbInstance& inst);
void write_occupancy_csv(std::ostream& out, const std::vector<OccupancyRow>& rows);
nlohmann::json to_json(const DcbSolution& sol, const DcbInstance& inst);

void write_schedule_csv(std::ostream& out, const std::vector<FlightPlan>& plans);
/// Reads flight_id,route_id,scheduled[,required] rows.
std::vector<FlightPlan> read_schedule_csv(std::istream& in);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const Calibration& c);

void write_learning_curve_csv(std::ostream& out, const std::vector<RewardBreakdown>& curve);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep, const std::string& tactical);

/// Left-aligned first column, right-aligned others, padded to the widest cell.
std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

/// Writes a file, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace uam
