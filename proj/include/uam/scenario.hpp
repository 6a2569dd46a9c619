#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uam/airspace.hpp"
#include "uam/params.hpp"

namespace uam {

/// Everything tunable about an experiment. Loaded from a JSON document with
/// sections nodes, routes, resources, performance, demand, thresholds,
/// reward, dcb, rule_policy, engine, risk and learning.
struct ScenarioConfig {
  std::vector<Node> nodes;
  std::vector<Route> routes;
  std::vector<Resource> resources;
  AircraftPerformance performance;
  DemandSpec demand;
  SafetyThresholds thresholds;
  RewardParams reward;
  DcbSettings dcb;
  RulePolicyParams rule;
  EngineConfig engine;
  RiskModelParams risk;
  LearningParams learning;

  /// Set every resource capacity to `c`.
  void set_capacity(int c) {
    for (auto& r : resources) r.capacity = c;
  }
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejects unknown keys and wrongly typed values with the offending path.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& cfg);

struct Violation {
  std::string path;
  std::string message;
};

/// Checks every invariant of the configuration; never repairs anything.
std::vector<Violation> validate_scenario(const ScenarioConfig& cfg);

/// A validated configuration together with its compiled route network.
class Scenario {
 public:
  /// Throws ScenarioError listing every violation if the config is invalid.
  explicit Scenario(ScenarioConfig cfg);

  const ScenarioConfig& config() const { return cfg_; }
  const Airspace& airspace() const { return airspace_; }

  /// Unobstructed route time at cruise speed.
  double nominal_flight_time(std::size_t route) const {
    return airspace_.route_length(route) / cfg_.performance.v_cruise;
  }
  double max_flight_time(std::size_t route) const {
    return cfg_.reward.max_flight_time_factor * nominal_flight_time(route);
  }

  /// Fills eta_at_resource from required_departure.
  void annotate_etas(FlightPlan& plan) const;

 private:
  ScenarioConfig cfg_;
  Airspace airspace_;
};

std::filesystem::path default_data_dir();

}  // namespace uam
