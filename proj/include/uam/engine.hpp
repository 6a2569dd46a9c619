#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uam/airspace.hpp"
#include "uam/dcb.hpp"
#include "uam/params.hpp"
#include "uam/policy.hpp"
#include "uam/rng.hpp"
#include "uam/scenario.hpp"
#include "uam/tactical.hpp"

namespace uam {

enum class Phase { pre_departure, airborne, landed, removed };
enum class StrategicMode { none, exact_plan, heuristic };
enum class TacticalMode { none, rule, policy };
enum class EventKind { lowc = 0, nmac = 1, mac = 2 };

const char* to_string(StrategicMode m);
const char* to_string(TacticalMode m);
const char* to_string(EventKind k);
const char* to_string(Phase p);
std::optional<StrategicMode> parse_strategic_mode(std::string_view s);
std::optional<TacticalMode> parse_tactical_mode(std::string_view s);

struct AircraftState {
  std::string flight_id;
  std::size_t route = 0;
  double arc = 0.0;
  double speed = 0.0;
  double target_speed = 0.0;
  Phase phase = Phase::pre_departure;
  double airborne_elapsed = 0.0;
};

/// Maximal interval during which a pair stayed below one threshold.
struct SeparationEvent {
  EventKind kind = EventKind::lowc;
  std::size_t flight_a = 0;  // index into EpisodeLog::flights, flight_a < flight_b
  std::size_t flight_b = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double min_distance = 0.0;
};

struct FlightRecord {
  std::string flight_id;
  std::string route_id;
  double scheduled = 0.0;  // S_f
  double required = 0.0;   // R_f, actual release time
  double estimated = 0.0;  // T_f, unobstructed time at cruise speed
  double actual = 0.0;     // A_f, release to landing (or removal)
  int alerts = 0;
  Phase final_phase = Phase::pre_departure;

  double ground_delay() const { return std::max(0.0, required - scheduled); }
  double airborne_delay() const { return std::max(0.0, actual - estimated); }
};

struct EpisodeLog {
  std::vector<double> step_min_distance;  // +inf when fewer than two aircraft are airborne
  std::vector<SeparationEvent> events;
  std::vector<FlightRecord> flights;
  double end_time = 0.0;
  bool truncated = false;
  std::size_t unseen_states = 0;
  RewardBreakdown reward;  // summed over policy transitions

  double flight_hours() const;
  std::size_t count(EventKind k) const;
  std::size_t count(Phase p) const;
  std::size_t released() const { return flights.size() - count(Phase::pre_departure); }
};

/// Opens an event when a pair's minimum distance over a step drops below a
/// threshold and closes it once the end-of-step distance is back at or
/// above it. Each of the three thresholds is tracked independently.
class EventDetector {
 public:
  explicit EventDetector(SafetyThresholds thresholds) : thresholds_(thresholds) {}

  void update(std::size_t a, std::size_t b, double t0, double t1, double d_min, double d_end);
  /// Closes every open event involving flight f at time t.
  void release(std::size_t f, double t);
  /// Closes everything still open and returns events sorted by start time.
  std::vector<SeparationEvent> finish(double t);

 private:
  double threshold(EventKind k) const;
  void close(std::map<std::pair<std::size_t, std::size_t>, std::array<std::optional<SeparationEvent>, 3>>::iterator it,
             double t);

  SafetyThresholds thresholds_;
  std::map<std::pair<std::size_t, std::size_t>, std::array<std::optional<SeparationEvent>, 3>> open_;
  std::vector<SeparationEvent> closed_;
};

/// One learning transition of a policy-controlled aircraft.
struct LearningSample {
  std::size_t flight = 0;
  int state = 0;
  SpeedAction action = SpeedAction::hold;
  RewardBreakdown reward;
  int next_state = -1;  // -1: terminal
};

/// One airborne aircraft at one decision instant.
struct TrackPoint {
  double time = 0.0;
  std::size_t flight = 0;  // index into EpisodeLog::flights
  double x = 0.0;
  double y = 0.0;
  double arc = 0.0;
  double speed = 0.0;
  double target_speed = 0.0;  // after the advisory
  Advisory advisory = Advisory::hold;
  double nearest = 0.0;  // nearest observed intruder, +inf if none
};

struct EpisodeOptions {
  StrategicMode strategic = StrategicMode::none;
  TacticalMode tactical = TacticalMode::none;
  const PolicyTable* policy = nullptr;
  /// Exact-plan mode uses this solution when set, otherwise solves on the fly.
  const DcbSolution* plan = nullptr;
  bool explore = false;
  double epsilon = 0.0;
  std::uint64_t exploration_seed = 0;
  std::vector<LearningSample>* samples = nullptr;
  std::vector<TrackPoint>* track = nullptr;
};

/// Fast-time world: aircraft kinematics on routes, release logic, tactical
/// advisories and separation bookkeeping. Single-threaded.
class World {
 public:
  World(const Scenario& scenario, std::vector<FlightPlan> plans, EpisodeOptions options);

  /// Advances one step_dt.
  void step();
  bool done() const;
  double time() const { return clock_ * cfg_.step_dt; }
  const std::vector<AircraftState>& aircraft() const { return aircraft_; }
  EpisodeLog finish();

 private:
  void release_departures(double t0, double t1);
  void decide();
  void move(double t0, double dt);
  void detect(double t0, double t1);
  void observe_rewards();
  void finalize_flight(std::size_t i, Phase phase, double t, double actual);
  void close_sample(std::size_t i, int next_state);
  std::vector<TrafficEntry> traffic() const;

  const Scenario& scenario_;
  EngineConfig cfg_;
  EpisodeOptions opt_;
  std::vector<FlightPlan> plans_;
  std::vector<AircraftState> aircraft_;
  std::vector<double> release_time_;
  std::vector<double> landing_time_;
  std::vector<int> alerts_;
  std::vector<Eigen::Vector2d> prev_pos_;
  std::int64_t clock_ = 0;
  int decision_every_ = 5;
  EventDetector detector_;
  EpisodeLog log_;

  // Release bookkeeping.
  DcbInstance dcb_;
  std::optional<HeuristicDcb> heuristic_;
  std::map<std::string, std::vector<std::size_t>> queues_;  // origin -> flights in (S, id) order
  std::map<std::string, std::size_t> queue_head_;
  std::vector<std::size_t> rank_;

  // Per-aircraft open learning transition.
  struct Pending {
    bool open = false;
    int state = 0;
    SpeedAction action = SpeedAction::hold;
    double min_distance = 0.0;
  };
  std::vector<Pending> pending_;
  Rng explore_rng_;
};

/// Departure times when no balancing is applied: per-origin FIFO with the
/// configured departure separation.
std::vector<double> separated_departures(const DcbInstance& instance);

/// Runs a full episode on a given schedule.
EpisodeLog run_episode(const Scenario& scenario, std::vector<FlightPlan> plans, const EpisodeOptions& options);

}  // namespace uam
