#include "uam/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace uam {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  return out;
}

}  // namespace

void write_events_csv(std::ostream& out, const EpisodeLog& log) {
  fmt::print(out, "kind,flight_a,flight_b,t_start,t_end,min_distance\n");
  for (const auto& e : log.events) {
    fmt::print(out, "{},{},{},{},{},{}\n", to_string(e.kind), log.flights.at(e.flight_a).flight_id,
               log.flights.at(e.flight_b).flight_id, e.t_start, e.t_end, e.min_distance);
  }
}

void write_flights_csv(std::ostream& out, const EpisodeLog& log) {
  fmt::print(out, "flight_id,S,R,T_f,A_f,alerts,ground_delay,airborne_delay,status\n");
  for (const auto& f : log.flights) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", f.flight_id, f.scheduled, f.required, f.estimated, f.actual,
               f.alerts, f.ground_delay(), f.airborne_delay(), to_string(f.final_phase));
  }
}

void write_track_csv(std::ostream& out, const EpisodeLog& log, const std::vector<TrackPoint>& track) {
  fmt::print(out, "time,flight_id,x,y,arc,speed,target_speed,advisory,nearest\n");
  for (const auto& p : track) {
    fmt::print(out, "{},{},{},{},{},{},{},{},", p.time, log.flights.at(p.flight).flight_id, p.x, p.y, p.arc, p.speed,
               p.target_speed, to_string(p.advisory));
    if (std::isfinite(p.nearest)) fmt::print(out, "{}", p.nearest);
    fmt::print(out, "\n");
  }
}

nlohmann::json run_summary(const EpisodeLog& log) {
  double ground = 0, airborne = 0;
  long alerts = 0;
  for (const auto& f : log.flights) {
    ground += f.ground_delay();
    airborne += f.airborne_delay();
    alerts += f.alerts;
  }
  const auto n = static_cast<double>(std::max<std::size_t>(1, log.flights.size()));
  return {{"flights", log.flights.size()},
          {"released", log.released()},
          {"landed", log.count(Phase::landed)},
          {"removed", log.count(Phase::removed)},
          {"truncated", log.truncated},
          {"end_time", log.end_time},
          {"flight_hours", log.flight_hours()},
          {"events", {{"LoWC", log.count(EventKind::lowc)}, {"NMAC", log.count(EventKind::nmac)}, {"MAC", log.count(EventKind::mac)}}},
          {"mean_ground_delay", ground / n},
          {"mean_airborne_delay", airborne / n},
          {"alerts", alerts},
          {"unseen_policy_states", log.unseen_states}};
}

void write_dcb_table_csv(std::ostream& out, const DcbSolution& sol, const DcbInstance& inst) {
  fmt::print(out, "flight_id,scheduled,required,delay\n");
  for (std::size_t i = 0; i < inst.flights.size(); ++i) {
    const auto& f = inst.flights[i];
    const double r = sol.required_departures.at(i);
    fmt::print(out, "{},{},{},{}\n", f.id, f.scheduled, r, std::max(0.0, r - f.scheduled));
  }
}

void write_occupancy_csv(std::ostream& out, const std::vector<OccupancyRow>& rows) {
  fmt::print(out, "resource,window,window_start,scheduled_demand,balanced_demand\n");
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{}\n", r.resource, r.window, r.window_start, r.scheduled_demand, r.balanced_demand);
  }
}

nlohmann::json to_json(const DcbSolution& sol, const DcbInstance& inst) {
  nlohmann::json j = {{"status", to_string(sol.status)}, {"total_delay", sol.total_delay}, {"nodes", sol.nodes},
                      {"horizon", inst.horizon()}, {"window_length", inst.config.window_length}};
  if (sol.binding_resource) j["binding_resource"] = inst.config.resource_names.at(*sol.binding_resource);
  return j;
}

void write_schedule_csv(std::ostream& out, const std::vector<FlightPlan>& plans) {
  fmt::print(out, "flight_id,route_id,scheduled,required\n");
  for (const auto& p : plans) {
    fmt::print(out, "{},{},{},{}\n", p.flight_id, p.route_id, p.scheduled_departure, p.required_departure);
  }
}

std::vector<FlightPlan> read_schedule_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("schedule file is empty");
  const auto header = split_csv(line);
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int id = col("flight_id"), route = col("route_id"), sched = col("scheduled"), req = col("required");
  if (id < 0 || route < 0 || sched < 0) throw std::runtime_error("schedule needs flight_id, route_id and scheduled columns");
  std::vector<FlightPlan> plans;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    const auto need = static_cast<std::size_t>(std::max({id, route, sched, req}) + 1);
    if (cells.size() < need) throw std::runtime_error(fmt::format("schedule line {}: too few columns", lineno));
    FlightPlan p;
    p.flight_id = cells[id];
    p.route_id = cells[route];
    try {
      p.scheduled_departure = std::stod(cells[sched]);
      p.required_departure = req >= 0 ? std::stod(cells[req]) : p.scheduled_departure;
    } catch (const std::exception&) {
      throw std::runtime_error(fmt::format("schedule line {}: bad number", lineno));
    }
    plans.push_back(std::move(p));
  }
  return plans;
}

nlohmann::json to_json(const Estimate& e) { return {{"mean", e.mean}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}}; }

nlohmann::json to_json(const MetricsReport& r) {
  return {{"runs", r.runs},
          {"flights", r.flights},
          {"flight_hours", r.flight_hours},
          {"counts", {{"LoWC", r.lowc}, {"NMAC", r.nmac}, {"MAC", r.mac}}},
          {"truncated_runs", r.truncated_runs},
          {"lowc_per_fh", to_json(r.lowc_per_fh)},
          {"nmac_per_fh", to_json(r.nmac_per_fh)},
          {"est_mac_per_100k_fh", to_json(r.est_mac_per_100k_fh)},
          {"risk_ratio", optional_json(r.risk_ratio)},
          {"mean_ground_delay", r.mean_ground_delay},
          {"mean_airborne_delay", r.mean_airborne_delay},
          {"mean_alerts", r.mean_alerts},
          {"p_mac_given_nmac", r.p_mac_given_nmac},
          {"pooled", r.pooled}};
}

nlohmann::json to_json(const Calibration& c) {
  return {{"mac", c.mac}, {"nmac", c.nmac}, {"p", optional_json(c.p)}, {"ci_low", c.ci_low}, {"ci_high", c.ci_high}};
}

void write_learning_curve_csv(std::ostream& out, const std::vector<RewardBreakdown>& curve) {
  fmt::print(out, "episode,total,safety,time,action\n");
  for (std::size_t e = 0; e < curve.size(); ++e) {
    const auto& r = curve[e];
    fmt::print(out, "{},{},{},{},{}\n", e, r.total, r.safety, r.time, r.action);
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep, const std::string& tactical) {
  fmt::print(out, "tactical,capacity,runs,nmac,est_mac_mean,est_mac_ci_high,mean_ground_delay,compliant\n");
  for (const auto& row : sweep.rows) {
    const auto& r = row.report;
    fmt::print(out, "{},{},{},{},{},{},{},{}\n", tactical, row.capacity, r.runs, r.nmac, r.est_mac_per_100k_fh.mean,
               r.est_mac_per_100k_fh.ci_high, r.mean_ground_delay, row.compliant ? 1 : 0);
  }
}

std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto fit = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  };
  fit(header);
  for (const auto& r : rows) fit(r);
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < r.size() ? r[c] : "";
      if (c > 0) out += "  ";
      out += c == 0 ? fmt::format("{:<{}}", cell, width[c]) : fmt::format("{:>{}}", cell, width[c]);
    }
    out += '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
  for (const auto& r : rows) line(r);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << content;
}

}  // namespace uam
